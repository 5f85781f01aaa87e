#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hjr {

enum class ErrorKind {
    argument,
    parse,
    unbound_variable,
    domain,
    dimension,
    precondition,
    numeric,
    schema,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string &what)
        : Error(ErrorKind::parse, what + " at offset " + std::to_string(offset)), offset_(offset) {}

    // Byte offset into the source text.
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class DomainError : public Error {
public:
    DomainError(std::string subexpression, const std::string &what)
        : Error(ErrorKind::domain, what + " in '" + subexpression + "'"), subexpression_(std::move(subexpression)) {}

    const std::string &subexpression() const noexcept { return subexpression_; }

private:
    std::string subexpression_;
};

// A sampled geometric precondition failed; the witness is the offending point.
class PreconditionError : public Error {
public:
    PreconditionError(const std::string &what, std::vector<double> witness)
        : Error(ErrorKind::precondition, what), witness_(std::move(witness)) {}

    const std::vector<double> &witness() const noexcept { return witness_; }

private:
    std::vector<double> witness_;
};

class SchemaError : public Error {
public:
    SchemaError(std::string path, const std::string &what)
        : Error(ErrorKind::schema, path + ": " + what), path_(std::move(path)) {}

    // JSON pointer of the offending element.
    const std::string &path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace hjr
