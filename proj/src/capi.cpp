#include "hjr/hjr.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "hjr/app.hpp"
#include "hjr/error.hpp"
#include "hjr/expr.hpp"
#include "hjr/io.hpp"
#include "hjr/phase_space.hpp"

struct hjr_expr {
    hjr::Expr e;
};

struct hjr_system {
    hjr::HamiltonianSystem sys;
};

struct hjr_trajectory {
    hjr::TrajectoryTable table;
};

namespace {

thread_local std::string last_error;

hjr_status status_for(hjr::ErrorKind k)
{
    using hjr::ErrorKind;
    switch (k) {
    case ErrorKind::argument: return HJR_ERR_ARGUMENT;
    case ErrorKind::parse: return HJR_ERR_PARSE;
    case ErrorKind::unbound_variable: return HJR_ERR_UNBOUND;
    case ErrorKind::domain: return HJR_ERR_DOMAIN;
    case ErrorKind::dimension: return HJR_ERR_DIMENSION;
    case ErrorKind::precondition: return HJR_ERR_PRECONDITION;
    case ErrorKind::numeric: return HJR_ERR_NUMERIC;
    case ErrorKind::schema: return HJR_ERR_SCHEMA;
    case ErrorKind::io: return HJR_ERR_IO;
    }
    return HJR_ERR_INTERNAL;
}

template <class F>
hjr_status guard(F &&f)
{
    try {
        f();
        last_error.clear();
        return HJR_OK;
    } catch (const hjr::Error &e) {
        last_error = e.what();
        return status_for(e.kind());
    } catch (const std::bad_alloc &) {
        last_error = "out of memory";
        return HJR_ERR_INTERNAL;
    } catch (const std::exception &e) {
        last_error = e.what();
        return HJR_ERR_INTERNAL;
    }
}

void require(bool ok, const char *what)
{
    if (!ok) throw hjr::Error(hjr::ErrorKind::argument, what);
}

char *dup(const std::string &s)
{
    char *out = static_cast<char *>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

} // namespace

extern "C" {

const char *hjr_version(void) { return "0.1.0"; }

const char *hjr_last_error(void) { return last_error.c_str(); }

const char *hjr_status_name(hjr_status s)
{
    switch (s) {
    case HJR_OK: return "ok";
    case HJR_ERR_ARGUMENT: return "argument";
    case HJR_ERR_PARSE: return "parse";
    case HJR_ERR_UNBOUND: return "unbound_variable";
    case HJR_ERR_DOMAIN: return "domain";
    case HJR_ERR_DIMENSION: return "dimension";
    case HJR_ERR_PRECONDITION: return "precondition";
    case HJR_ERR_NUMERIC: return "numeric";
    case HJR_ERR_SCHEMA: return "schema";
    case HJR_ERR_IO: return "io";
    case HJR_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

void hjr_string_free(char *s) { std::free(s); }

hjr_status hjr_expr_parse(const char *text, hjr_expr **out)
{
    return guard([&] {
        require(text && out, "null argument");
        *out = new hjr_expr{hjr::parse(text)};
    });
}

void hjr_expr_free(hjr_expr *e) { delete e; }

hjr_status hjr_expr_to_string(const hjr_expr *e, char **out)
{
    return guard([&] {
        require(e && out, "null argument");
        *out = dup(hjr::to_string(e->e));
    });
}

hjr_status hjr_expr_eval(const hjr_expr *e, const char *const *names, const double *values, size_t count, double *out)
{
    return guard([&] {
        require(e && out && (count == 0 || (names && values)), "null argument");
        hjr::Bindings b;
        for (size_t i = 0; i < count; ++i) {
            require(names[i] != nullptr, "null variable name");
            b[names[i]] = values[i];
        }
        *out = hjr::eval(e->e, b);
    });
}

hjr_status hjr_expr_diff(const hjr_expr *e, const char *var, hjr_expr **out)
{
    return guard([&] {
        require(e && var && out, "null argument");
        *out = new hjr_expr{hjr::differentiate(e->e, var)};
    });
}

hjr_status hjr_expr_simplify(const hjr_expr *e, hjr_expr **out)
{
    return guard([&] {
        require(e && out, "null argument");
        *out = new hjr_expr{hjr::simplify(e->e)};
    });
}

hjr_status hjr_system_create(const char *const *coords, const char *const *momenta, size_t n, const char *hamiltonian,
                             hjr_system **out)
{
    return guard([&] {
        require(coords && momenta && hamiltonian && out, "null argument");
        std::vector<std::string> q;
        std::vector<std::string> p;
        for (size_t i = 0; i < n; ++i) {
            require(coords[i] && momenta[i], "null name");
            q.emplace_back(coords[i]);
            p.emplace_back(momenta[i]);
        }
        *out = new hjr_system{hjr::HamiltonianSystem(std::move(q), std::move(p), hjr::parse(hamiltonian))};
    });
}

void hjr_system_free(hjr_system *s) { delete s; }

size_t hjr_system_dim(const hjr_system *s) { return s ? s->sys.dim() : 0; }

namespace {

hjr::PhasePoint point(const hjr_system *s, const double *q, const double *p)
{
    const auto n = s->sys.dim();
    require(n == 0 || (q && p), "null argument");
    return hjr::PhasePoint{{q, q + n}, {p, p + n}, std::nullopt};
}

} // namespace

hjr_status hjr_system_energy(const hjr_system *s, const double *q, const double *p, double *out)
{
    return guard([&] {
        require(s && out, "null argument");
        *out = s->sys.energy(point(s, q, p));
    });
}

hjr_status hjr_system_vector_field(const hjr_system *s, const double *q, const double *p, double *out)
{
    return guard([&] {
        require(s && out, "null argument");
        const auto v = s->sys.vector_field(point(s, q, p));
        std::copy(v.begin(), v.end(), out);
    });
}

hjr_status hjr_system_flow(const hjr_system *s, const double *q0, const double *p0, double t_end, double dt,
                           hjr_trajectory **out)
{
    return guard([&] {
        require(s && out, "null argument");
        auto traj = hjr::flow_reference(s->sys, point(s, q0, p0), t_end, dt);
        *out = new hjr_trajectory{hjr::TrajectoryTable{s->sys.coords(), s->sys.momenta(), std::move(traj)}};
    });
}

void hjr_trajectory_free(hjr_trajectory *t) { delete t; }

size_t hjr_trajectory_size(const hjr_trajectory *t) { return t ? t->table.trajectory.samples.size() : 0; }

size_t hjr_trajectory_dim(const hjr_trajectory *t) { return t ? t->table.coords.size() : 0; }

hjr_status hjr_trajectory_sample(const hjr_trajectory *t, size_t i, double *time, double *q, double *p)
{
    return guard([&] {
        require(t != nullptr, "null argument");
        require(i < t->table.trajectory.samples.size(), "sample index out of range");
        const auto &s = t->table.trajectory.samples[i];
        if (time) *time = s.t;
        if (q) std::copy(s.z.q.begin(), s.z.q.end(), q);
        if (p) std::copy(s.z.p.begin(), s.z.p.end(), p);
    });
}

hjr_status hjr_trajectory_write_csv(const hjr_trajectory *t, const char *path)
{
    return guard([&] {
        require(t && path, "null argument");
        hjr::write_trajectory_csv(t->table.trajectory, t->table.coords, t->table.momenta, path);
    });
}

hjr_status hjr_trajectory_read_csv(const char *path, hjr_trajectory **out)
{
    return guard([&] {
        require(path && out, "null argument");
        *out = new hjr_trajectory{hjr::read_trajectory_csv(path)};
    });
}

void hjr_run_options_init(hjr_run_options *o)
{
    if (!o) return;
    o->tol = 1e-8;
    o->grid = 0;
    o->seed = -1;
    o->out_dir = nullptr;
    o->dt = 0.0;
    o->t_end = 0.0;
}

hjr_status hjr_run(const char *command, const char *scenario_path, const hjr_run_options *options, int *exit_code,
                   char **report)
{
    std::string message;
    const auto st = guard([&] {
        require(command && scenario_path && exit_code, "null argument");
        hjr_run_options o;
        hjr_run_options_init(&o);
        if (options) o = *options;
        hjr::RunFlags f;
        f.tol = o.tol;
        if (o.grid > 0) f.grid = static_cast<std::size_t>(o.grid);
        if (o.seed >= 0) f.seed = static_cast<std::uint64_t>(o.seed);
        if (o.out_dir) f.out = o.out_dir;
        if (o.dt > 0.0) f.dt = o.dt;
        if (o.t_end > 0.0) f.t_end = o.t_end;
        const auto r = hjr::run_command(command, scenario_path, f);
        *exit_code = r.exit_code;
        if (report) *report = dup(r.report);
        message = r.message;
    });
    // A failed command still ran; its message is kept for the caller.
    if (st == HJR_OK) last_error = message;
    return st;
}

} // extern "C"
