#include "hjr/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <set>

#include "json.hpp"

#include "hjr/error.hpp"
#include "hjr/io.hpp"

namespace hjr {
namespace {

using nlohmann::json;

std::string child(const std::string &path, std::string_view key)
{
    std::string out = path + "/";
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

std::string child(const std::string &path, std::size_t i) { return path + "/" + std::to_string(i); }

const char *type_name(const json &j)
{
    return j.type_name();
}

// Rejects keys outside `allowed`.
void only_keys(const json &obj, const std::string &path, std::initializer_list<std::string_view> allowed)
{
    for (const auto &[k, v] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw SchemaError(child(path, k), "unknown key");
    }
}

const json &object(const json &j, const std::string &path)
{
    if (!j.is_object()) throw SchemaError(path, std::string("expected object, got ") + type_name(j));
    return j;
}

const json *find(const json &obj, std::string_view key)
{
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json &require(const json &obj, const std::string &path, std::string_view key)
{
    const json *v = find(obj, key);
    if (!v) throw SchemaError(child(path, key), "required key missing");
    return *v;
}

double number(const json &j, const std::string &path)
{
    if (!j.is_number()) throw SchemaError(path, std::string("expected number, got ") + type_name(j));
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
    return v;
}

double positive(const json &j, const std::string &path)
{
    const double v = number(j, path);
    if (!(v > 0.0)) throw SchemaError(path, "expected a positive number");
    return v;
}

std::size_t count(const json &j, const std::string &path, std::size_t min = 0)
{
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0))
        throw SchemaError(path, "expected a non-negative integer");
    const auto v = j.get<std::uint64_t>();
    if (v < min) throw SchemaError(path, "expected an integer >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

int branch(const json &j, const std::string &path)
{
    if (!j.is_number_integer() || (j.get<long long>() != 1 && j.get<long long>() != -1))
        throw SchemaError(path, "expected 1 or -1");
    return static_cast<int>(j.get<long long>());
}

std::string string(const json &j, const std::string &path)
{
    if (!j.is_string()) throw SchemaError(path, std::string("expected string, got ") + type_name(j));
    return j.get<std::string>();
}

const json &array(const json &j, const std::string &path)
{
    if (!j.is_array()) throw SchemaError(path, std::string("expected array, got ") + type_name(j));
    return j;
}

std::vector<double> numbers(const json &j, const std::string &path, std::optional<std::size_t> size = {})
{
    array(j, path);
    if (size && j.size() != *size)
        throw SchemaError(path, "expected " + std::to_string(*size) + " entries, got " + std::to_string(j.size()));
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], child(path, i)));
    return out;
}

Range range(const json &j, const std::string &path)
{
    const auto v = numbers(j, path, 2);
    if (!(v[0] < v[1])) throw SchemaError(path, "expected lo < hi");
    return {v[0], v[1]};
}

std::vector<Range> ranges(const json &j, const std::string &path, std::size_t size)
{
    array(j, path);
    if (j.size() != size)
        throw SchemaError(path, "expected " + std::to_string(size) + " ranges, got " + std::to_string(j.size()));
    std::vector<Range> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(range(j[i], child(path, i)));
    return out;
}

const std::set<std::string, std::less<>> reserved{"sin", "cos", "tan", "atan", "arctan", "sqrt", "exp", "log"};

std::string identifier(const json &j, const std::string &path)
{
    static const std::regex re("[A-Za-z_][A-Za-z0-9_]*");
    auto s = string(j, path);
    if (!std::regex_match(s, re)) throw SchemaError(path, "'" + s + "' is not a valid variable name");
    if (reserved.contains(s)) throw SchemaError(path, "'" + s + "' is a reserved name");
    return s;
}

std::vector<std::string> identifiers(const json &j, const std::string &path, std::optional<std::size_t> size = {})
{
    array(j, path);
    if (size && j.size() != *size)
        throw SchemaError(path, "expected " + std::to_string(*size) + " names, got " + std::to_string(j.size()));
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(identifier(j[i], child(path, i)));
    return out;
}

class Names {
public:
    void declare(const std::string &name, const std::string &path)
    {
        if (!seen_.insert(name).second) throw SchemaError(path, "name '" + name + "' declared twice");
    }

private:
    std::set<std::string> seen_;
};

struct ExprContext {
    std::map<std::string, Expr, std::less<>> parameters;

    // Parses, substitutes parameters and checks that every remaining variable
    // is in `allowed`.
    Expr parse_expr(const json &j, const std::string &path, const std::vector<std::string> &allowed) const
    {
        const auto text = string(j, path);
        Expr e;
        try {
            e = parse(text);
        } catch (const ParseError &err) {
            throw SchemaError(path, err.what());
        }
        e = substitute(e, parameters);
        for (const auto &v : free_variables(e)) {
            if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
                throw SchemaError(path, "undeclared variable '" + v + "'");
        }
        return e;
    }
};

template <class... Lists>
std::vector<std::string> concat(const Lists &...lists)
{
    std::vector<std::string> out;
    (out.insert(out.end(), lists.begin(), lists.end()), ...);
    return out;
}

SymmetrySpec parse_symmetry(const json &j, const std::string &path, std::size_t n)
{
    object(j, path);
    only_keys(j, path, {"generators", "mu"});
    SymmetrySpec out;
    const auto gp = child(path, "generators");
    const auto &gens = array(require(j, path, "generators"), gp);
    if (gens.empty() || gens.size() >= n + 1) throw SchemaError(gp, "expected between 1 and n generators");
    for (std::size_t i = 0; i < gens.size(); ++i) out.generators.push_back(numbers(gens[i], child(gp, i), n));
    if (gens.size() > n) throw SchemaError(gp, "more generators than coordinates");
    const auto k = gens.size();
    if (const json *mu = find(j, "mu")) out.mu = numbers(*mu, child(path, "mu"), k);
    else out.mu.assign(k, 0.0);
    try {
        (void)TranslationAction::from_generators(n, out.generators);
    } catch (const Error &e) {
        throw SchemaError(gp, e.what());
    }
    return out;
}

HjSpec parse_hj(const json &j, const std::string &path, const std::vector<std::string> &coords)
{
    object(j, path);
    only_keys(j, path, {"energy", "range", "branch", "nodes", "cyclic"});
    HjSpec out;
    out.energy = number(require(j, path, "energy"), child(path, "energy"));
    out.range = range(require(j, path, "range"), child(path, "range"));
    if (const json *b = find(j, "branch")) out.branch = branch(*b, child(path, "branch"));
    if (const json *nn = find(j, "nodes")) {
        out.nodes = count(*nn, child(path, "nodes"), 3);
        if (out.nodes % 2 == 0) throw SchemaError(child(path, "nodes"), "expected an odd node count");
    }
    if (const json *c = find(j, "cyclic")) {
        const auto cp = child(path, "cyclic");
        object(*c, cp);
        only_keys(*c, cp, {"coords", "values"});
        CyclicSpec cs;
        cs.coords = identifiers(require(*c, cp, "coords"), child(cp, "coords"));
        for (std::size_t i = 0; i < cs.coords.size(); ++i) {
            if (std::find(coords.begin(), coords.end(), cs.coords[i]) == coords.end())
                throw SchemaError(child(child(cp, "coords"), i), "not a coordinate");
        }
        if (cs.coords.size() + 1 != coords.size())
            throw SchemaError(child(cp, "coords"), "exactly one coordinate must remain non-cyclic");
        cs.values = numbers(require(*c, cp, "values"), child(cp, "values"), cs.coords.size());
        out.cyclic = std::move(cs);
    }
    return out;
}

Scenario parse_root(const json &root)
{
    const std::string path;
    object(root, "");
    only_keys(root, path,
              {"$schema", "name", "description", "coords", "momenta", "time", "parameters", "hamiltonian", "seed",
               "symmetry", "reduced", "connection", "hj", "grid", "reconstruct", "simulate", "integrator",
               "equilibrium", "verify"});
    Scenario sc;
    sc.name = string(require(root, path, "name"), "/name");
    static const std::regex name_re("[A-Za-z0-9_.-]+");
    if (!std::regex_match(sc.name, name_re)) throw SchemaError("/name", "expected [A-Za-z0-9_.-]+");
    if (const json *d = find(root, "description")) string(*d, "/description");

    Names names;
    sc.coords = identifiers(require(root, path, "coords"), "/coords");
    if (sc.coords.empty()) throw SchemaError("/coords", "expected at least one coordinate");
    const auto n = sc.coords.size();
    sc.momenta = identifiers(require(root, path, "momenta"), "/momenta", n);
    for (std::size_t i = 0; i < n; ++i) names.declare(sc.coords[i], child("/coords", i));
    for (std::size_t i = 0; i < n; ++i) names.declare(sc.momenta[i], child("/momenta", i));
    if (const json *t = find(root, "time")) {
        sc.time = identifier(*t, "/time");
        names.declare(sc.time, "/time");
    }

    ExprContext ctx;
    if (const json *ps = find(root, "parameters")) {
        object(*ps, "/parameters");
        for (const auto &[k, v] : ps->items()) {
            const auto p = child("/parameters", k);
            const auto id = identifier(json(k), p);
            names.declare(id, p);
            const double val = number(v, p);
            sc.parameters.emplace_back(id, val);
            ctx.parameters.emplace(id, Expr(val));
        }
    }
    if (const json *s = find(root, "seed")) sc.seed = count(*s, "/seed");

    const auto phase = concat(sc.coords, sc.momenta, sc.time.empty() ? std::vector<std::string>{} : std::vector{sc.time});
    sc.hamiltonian = ctx.parse_expr(require(root, path, "hamiltonian"), "/hamiltonian", phase);

    std::size_t k = 0;
    if (const json *s = find(root, "symmetry")) {
        if (!sc.time.empty()) throw SchemaError("/symmetry", "symmetry reduction needs an autonomous system");
        sc.symmetry = parse_symmetry(*s, "/symmetry", n);
        k = sc.symmetry->generators.size();
    }
    const auto m = n - k;
    sc.reduced = default_reduced_names(m);
    if (const json *r = find(root, "reduced")) {
        if (!sc.symmetry) throw SchemaError("/reduced", "requires /symmetry");
        object(*r, "/reduced");
        only_keys(*r, "/reduced", {"coords", "momenta"});
        sc.reduced.coords = identifiers(require(*r, "/reduced", "coords"), "/reduced/coords", m);
        sc.reduced.momenta = identifiers(require(*r, "/reduced", "momenta"), "/reduced/momenta", m);
        Names rn;
        for (std::size_t i = 0; i < m; ++i) rn.declare(sc.reduced.coords[i], child("/reduced/coords", i));
        for (std::size_t i = 0; i < m; ++i) rn.declare(sc.reduced.momenta[i], child("/reduced/momenta", i));
    }
    if (const json *c = find(root, "connection")) {
        if (!sc.symmetry) throw SchemaError("/connection", "requires /symmetry");
        array(*c, "/connection");
        if (c->size() != n) throw SchemaError("/connection", "expected one component per coordinate");
        std::vector<Expr> comps;
        for (std::size_t i = 0; i < n; ++i) comps.push_back(ctx.parse_expr((*c)[i], child("/connection", i), sc.coords));
        sc.connection = std::move(comps);
    }
    if (const json *h = find(root, "hj")) {
        sc.hj = parse_hj(*h, "/hj", sc.coords);
        if (!sc.hj->cyclic && m != 1)
            throw SchemaError("/hj", "the quadrature solver needs a one-dimensional (reduced) system or /hj/cyclic");
        if (!sc.time.empty()) throw SchemaError("/hj", "needs an autonomous system");
    }
    if (const json *g = find(root, "grid")) {
        object(*g, "/grid");
        only_keys(*g, "/grid", {"points", "reduced", "fibre"});
        GridSpec gs;
        if (const json *p = find(*g, "points")) gs.points = count(*p, "/grid/points", 2);
        gs.reduced = ranges(require(*g, "/grid", "reduced"), "/grid/reduced", m);
        if (const json *f = find(*g, "fibre")) gs.fibre = ranges(*f, "/grid/fibre", k);
        else gs.fibre.assign(k, Range{-2.0, 2.0});
        sc.grid = std::move(gs);
    }
    if (const json *r = find(root, "reconstruct")) {
        object(*r, "/reconstruct");
        only_keys(*r, "/reconstruct", {"y0", "x0", "t_end", "dt"});
        if (!sc.symmetry || !sc.hj || sc.hj->cyclic) throw SchemaError("/reconstruct", "requires /symmetry and a reduced /hj");
        ReconstructSpec rs;
        rs.y0 = numbers(require(*r, "/reconstruct", "y0"), "/reconstruct/y0", m);
        if (const json *x = find(*r, "x0")) rs.x0 = numbers(*x, "/reconstruct/x0", k);
        else rs.x0.assign(k, 0.0);
        if (const json *t = find(*r, "t_end")) rs.t_end = positive(*t, "/reconstruct/t_end");
        if (const json *d = find(*r, "dt")) rs.dt = positive(*d, "/reconstruct/dt");
        sc.reconstruct = std::move(rs);
    }
    if (const json *s = find(root, "simulate")) {
        object(*s, "/simulate");
        only_keys(*s, "/simulate", {"z0", "t_end", "dt"});
        SimulateSpec ss;
        ss.z0 = numbers(require(*s, "/simulate", "z0"), "/simulate/z0", 2 * n);
        if (const json *t = find(*s, "t_end")) ss.t_end = positive(*t, "/simulate/t_end");
        if (const json *d = find(*s, "dt")) ss.dt = positive(*d, "/simulate/dt");
        sc.simulate = std::move(ss);
    }
    if (const json *ig = find(root, "integrator")) {
        object(*ig, "/integrator");
        only_keys(*ig, "/integrator", {"tau", "steps", "z0", "control", "control_min_drift", "audit"});
        if (!sc.time.empty()) throw SchemaError("/integrator", "needs an autonomous system");
        IntegratorSpec is;
        is.tau = positive(require(*ig, "/integrator", "tau"), "/integrator/tau");
        if (const json *s = find(*ig, "steps")) is.steps = count(*s, "/integrator/steps", 1);
        is.z0 = numbers(require(*ig, "/integrator", "z0"), "/integrator/z0", 2 * n);
        if (const json *c = find(*ig, "control")) {
            if (!sc.symmetry) throw SchemaError("/integrator/control", "requires /symmetry");
            is.control = ctx.parse_expr(*c, "/integrator/control", phase);
        }
        if (const json *c = find(*ig, "control_min_drift"))
            is.control_min_drift = positive(*c, "/integrator/control_min_drift");
        if (const json *a = find(*ig, "audit")) is.audit = count(*a, "/integrator/audit");
        sc.integrator = std::move(is);
    }
    if (const json *eq = find(root, "equilibrium")) {
        const std::string ep = "/equilibrium";
        object(*eq, ep);
        only_keys(*eq, ep, {"solution", "S", "parameters", "time", "q0", "branch", "z0", "t_end", "dt"});
        if (!sc.time.empty()) throw SchemaError(ep, "needs an autonomous system");
        EquilibriumSpec es;
        const auto kind = string(require(*eq, ep, "solution"), ep + "/solution");
        if (kind == "symbolic") {
            es.kind = EquilibriumSpec::Kind::symbolic;
            if (const json *t = find(*eq, "time")) es.time = identifier(*t, ep + "/time");
            es.parameters = identifiers(require(*eq, ep, "parameters"), ep + "/parameters", n);
            Names en;
            for (std::size_t i = 0; i < n; ++i) en.declare(sc.coords[i], "/coords");
            en.declare(es.time, ep + "/time");
            for (std::size_t i = 0; i < n; ++i) en.declare(es.parameters[i], child(ep + "/parameters", i));
            es.s = ctx.parse_expr(require(*eq, ep, "S"), ep + "/S", concat(sc.coords, es.parameters, std::vector{es.time}));
        } else if (kind == "quadrature") {
            es.kind = EquilibriumSpec::Kind::quadrature;
            if (n != 1) throw SchemaError(ep + "/solution", "quadrature solutions need one degree of freedom");
            if (const json *q = find(*eq, "q0")) es.q0 = number(*q, ep + "/q0");
            if (const json *b = find(*eq, "branch")) es.branch = branch(*b, ep + "/branch");
        } else {
            throw SchemaError(ep + "/solution", "expected \"symbolic\" or \"quadrature\"");
        }
        es.z0 = numbers(require(*eq, ep, "z0"), ep + "/z0", 2 * n);
        if (const json *t = find(*eq, "t_end")) es.t_end = positive(*t, ep + "/t_end");
        if (const json *d = find(*eq, "dt")) es.dt = positive(*d, ep + "/dt");
        sc.equilibrium = std::move(es);
    }
    if (const json *v = find(root, "verify")) {
        const std::string vp = "/verify";
        object(*v, vp);
        only_keys(*v, vp, {"suites", "lemma", "magnetic", "split", "audit", "flow"});
        auto &vs = sc.verify;
        if (const json *s = find(*v, "suites")) {
            array(*s, vp + "/suites");
            for (std::size_t i = 0; i < s->size(); ++i) {
                const auto p = child(vp + "/suites", i);
                auto name = string((*s)[i], p);
                if (std::find_if(std::begin(verify_suites), std::end(verify_suites),
                                 [&](const char *x) { return name == x; }) == std::end(verify_suites))
                    throw SchemaError(p, "unknown suite '" + name + "'");
                vs.suites.push_back(std::move(name));
            }
        }
        if (const json *l = find(*v, "lemma")) {
            const auto lp = vp + "/lemma";
            object(*l, lp);
            only_keys(*l, lp, {"count", "amplitude", "min_spread"});
            if (const json *c = find(*l, "count")) vs.lemma_count = count(*c, lp + "/count", 1);
            if (const json *a = find(*l, "amplitude")) vs.lemma_amplitude = positive(*a, lp + "/amplitude");
            if (const json *s = find(*l, "min_spread")) vs.lemma_min_spread = positive(*s, lp + "/min_spread");
        }
        if (const json *mg = find(*v, "magnetic")) {
            const auto mp = vp + "/magnetic";
            array(*mg, mp);
            if (!sc.symmetry) throw SchemaError(mp, "requires /symmetry");
            for (std::size_t i = 0; i < mg->size(); ++i) {
                const auto cp = child(mp, i);
                const auto &c = object((*mg)[i], cp);
                only_keys(c, cp, {"name", "form", "expect"});
                MagneticCandidate mc;
                mc.name = string(require(c, cp, "name"), cp + "/name");
                const auto fp = cp + "/form";
                const auto &form = array(require(c, cp, "form"), fp);
                if (form.size() != m) throw SchemaError(fp, "expected one component per reduced coordinate");
                for (std::size_t j = 0; j < m; ++j)
                    mc.components.push_back(ctx.parse_expr(form[j], child(fp, j), sc.reduced.coords));
                const auto expect = string(require(c, cp, "expect"), cp + "/expect");
                if (expect == "lagrangian") mc.expect_lagrangian = true;
                else if (expect == "not_lagrangian") mc.expect_lagrangian = false;
                else throw SchemaError(cp + "/expect", "expected \"lagrangian\" or \"not_lagrangian\"");
                vs.magnetic.push_back(std::move(mc));
            }
        }
        if (const json *s = find(*v, "split")) {
            const auto sp = vp + "/split";
            object(*s, sp);
            only_keys(*s, sp, {"exact", "perturbed"});
            if (!sc.symmetry || !sc.grid) throw SchemaError(sp, "requires /symmetry and /grid");
            vs.split = SplitSpec{ctx.parse_expr(require(*s, sp, "exact"), sp + "/exact", sc.coords),
                                 ctx.parse_expr(require(*s, sp, "perturbed"), sp + "/perturbed", sc.coords)};
        }
        if (const json *a = find(*v, "audit")) {
            object(*a, vp + "/audit");
            only_keys(*a, vp + "/audit", {"expressions"});
            if (const json *e = find(*a, "expressions")) vs.audit_expressions = count(*e, vp + "/audit/expressions", 1);
        }
        if (const json *f = find(*v, "flow")) {
            const auto fp = vp + "/flow";
            object(*f, fp);
            only_keys(*f, fp, {"samples", "t", "dt"});
            if (const json *s = find(*f, "samples")) vs.flow_samples = count(*s, fp + "/samples", 1);
            if (const json *t = find(*f, "t")) vs.flow_t = positive(*t, fp + "/t");
            if (const json *d = find(*f, "dt")) vs.flow_dt = positive(*d, fp + "/dt");
        }
    }
    return sc;
}

} // namespace

Scenario parse_scenario(const std::string &json_text)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error &e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    return parse_root(root);
}

Scenario load_scenario(const std::filesystem::path &path) { return parse_scenario(read_file(path)); }

} // namespace hjr
