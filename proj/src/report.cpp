#include "shellscale/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "shellscale/errors.hpp"
#include "shellscale/immersion.hpp"

namespace shellscale {

namespace {

using nlohmann::json;

std::string format_double(double x) {
    if (!std::isfinite(x)) return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write(std::ostringstream& os, const json& j, int indent) {
    const std::string pad(indent + 2, ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (const auto& item : j.items()) {
                if (!first) os << ",\n";
                first = false;
                os << pad << json(item.key()).dump() << ": ";
                write(os, item.value(), indent + 2);
            }
            os << "\n" << std::string(indent, ' ') << "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            // Arrays of scalars stay on one line.
            bool flat = true;
            for (const json& x : j) flat = flat && !x.is_structured();
            if (flat) {
                os << "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) os << ", ";
                    write(os, j[i], indent);
                }
                os << "]";
                return;
            }
            os << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << ",\n";
                os << pad;
                write(os, j[i], indent + 2);
            }
            os << "\n" << std::string(indent, ' ') << "]";
            return;
        }
        case json::value_t::number_float:
            os << format_double(j.get<double>());
            return;
        default:
            os << j.dump();
    }
}

json vec(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

json mat(const Mat2& m) { return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})}); }

json vec_field(const std::vector<Vec3>& f) {
    json out = json::array();
    for (const Vec3& v : f) out.push_back(vec(v));
    return out;
}

json grid_json(const MidplateGrid& g) {
    const Rect& d = g.domain();
    return json{{"x1", {d.x1_min, d.x1_max}}, {"x2", {d.x2_min, d.x2_max}}, {"nx", g.nx()}, {"ny", g.ny()}};
}

json coefficients_json(const CoefficientSet& c) {
    return json{{"n", c.n}, {"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}, {"delta", c.delta}};
}

int slope_target(int n) { return 2 * (n + 1); }

CurvatureMidplateJets jets_for_level(const MetricField& m, const MidplateGrid& grid, int n) {
    return curvature_midplate_jets(m, grid, std::max(n - 1, 0));
}

LimitMinimizeOptions limit_options(const RunConfig& cfg) {
    LimitMinimizeOptions o;
    o.penalty_epsilon = cfg.limit.penalty_epsilon;
    o.regularization = cfg.limit.regularization;
    return o;
}

// Residual norms of orders 0..n and the first non-vanishing one at n+1.
json expansion_summary(const ExpansionFields& f, const CurvatureMidplateJets& jets, const GateConfig& gates,
                       bool& ok) {
    json residuals = json::array();
    double worst = 0.0;
    for (int m = 0; m <= f.order; ++m) {
        const double r = interior_max_norm(f.grid, expansion_residual(f, m));
        residuals.push_back(r);
        worst = std::max(worst, r);
    }
    const double next = interior_max_norm(f.grid, expansion_residual(f, f.order + 1));
    const double riem = riem_identity_check(f, jets);
    const bool residual_ok = worst <= gates.residual_tol;
    const bool riem_ok = riem <= gates.riem_tol;
    ok = ok && residual_ok && riem_ok;
    return json{{"order", f.order},
                {"residual_norms", residuals},
                {"residual_next_order", next},
                {"riem_defect", riem},
                {"holonomy_defect", f.holonomy_defect},
                {"metric_defect", f.metric_defect},
                {"curl_defect", f.curl_defect},
                {"column_defect", f.column_defect},
                {"gates", {{"residuals", residual_ok}, {"riem", riem_ok}}}};
}

bool sweep_gate(const SweepResult& s, const GateConfig& gates) {
    if (s.floor) return true;
    const double tol = s.mode == SweepMode::Minimize ? gates.minimize_slope_tolerance : gates.slope_tolerance;
    return s.slope >= slope_target(s.n) - tol;
}

int level_from(const ScalingClass& c) { return c.kind == ScalingKind::Exponent ? c.n : 1; }

}  // namespace

std::string dump_json(const json& doc) {
    std::ostringstream os;
    write(os, doc, 0);
    os << "\n";
    return os.str();
}

json to_json(const ScalingClass& c) {
    json gates = json::array();
    for (const GateResult& g : c.gates)
        gates.push_back(json{{"order", g.order},
                             {"max_abs", g.max_abs},
                             {"threshold", g.threshold},
                             {"vanishes", g.vanishes}});
    json out{{"kind", to_string(c.kind)},
             {"n", c.n},
             {"exponent", c.exponent},
             {"max_order_tested", c.max_order_tested},
             {"tol_abs", c.tol_abs},
             {"tol_rel", c.tol_rel},
             {"immersibility_unchecked", c.immersibility_unchecked},
             {"ladder_consistent", ladder_consistent(c)},
             {"gates", gates},
             {"witness", nullptr}};
    if (c.witness)
        out["witness"] = json{{"x", {c.witness->point[0], c.witness->point[1]}},
                              {"indices", c.witness->component},
                              {"order", c.witness->order},
                              {"value", c.witness->value}};
    return out;
}

json to_json(const CurvatureMidplateJets& jets) {
    json blocks = json::array();
    for (const auto& block : jets.blocks) {
        json layer = json::array();
        for (const Mat2& m : block) layer.push_back(mat(m));
        blocks.push_back(layer);
    }
    json mid = json::array();
    for (const Vec3& v : jets.midplate) mid.push_back(vec(v));
    return json{{"grid", grid_json(jets.grid)},
                {"order", jets.order},
                {"layout", "blocks[k][node] = d3^k R_{i3,j3}(x', 0); node = j * nx + i"},
                {"blocks", blocks},
                {"midplate", mid}};
}

json to_json(const LimitEnergyResult& r) {
    return json{{"total", r.total},
                {"bending", r.bending},
                {"perp", r.perp},
                {"space", r.space},
                {"coefficients", coefficients_json(r.coefficients)},
                {"bending_asymmetry", r.bending_asymmetry},
                {"constraint_defect", r.constraint_defect}};
}

json to_json(const SweepResult& s) {
    json points = json::array();
    for (const SweepPoint& p : s.points)
        points.push_back(json{{"h", p.h},
                              {"energy", p.energy},
                              {"scaled_energy", p.scaled},
                              {"floor", p.floor},
                              {"used_in_fit", p.used_in_fit},
                              {"converged", p.converged},
                              {"iterations", p.iterations}});
    return json{{"mode", to_string(s.mode)},
                {"n", s.n},
                {"expected_slope", slope_target(s.n)},
                {"slope", s.slope},
                {"intercept", s.intercept},
                {"residual", s.residual},
                {"at_floor", s.floor},
                {"points", points}};
}

std::string sweep_csv(const SweepResult& s) {
    std::ostringstream os;
    os << "h,energy,scaled_energy,mode\n";
    for (const SweepPoint& p : s.points)
        os << format_double(p.h) << "," << format_double(p.energy) << "," << format_double(p.scaled) << ","
           << to_string(s.mode) << "\n";
    return os.str();
}

std::string coefficient_csv(int n_max, bool* agree) {
    std::ostringstream os;
    os << "n,alpha,beta,gamma,delta,identity_defect\n";
    bool same = true;
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(std::abs(a), std::abs(b)); };
    for (int n = 1; n <= n_max; ++n) {
        const CoefficientSet c = coefficients(n);
        const CoefficientSet m = coefficients_via_moments(n);
        same = same && close(c.alpha, m.alpha) && close(c.beta, m.beta) && close(c.gamma, m.gamma) &&
               close(c.delta, m.delta);
        const double defect = std::abs(0.5 * c.delta * c.delta + c.gamma - c.beta) / c.beta;
        os << n << "," << format_double(c.alpha) << "," << format_double(c.beta) << "," << format_double(c.gamma)
           << "," << format_double(c.delta) << "," << format_double(defect) << "\n";
    }
    if (agree) *agree = same;
    return os.str();
}

std::vector<Vec3> load_displacement(const std::string& path, const MidplateGrid& grid) {
    std::ifstream in(path);
    if (!in) throw ConfigError("displacement", "cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("displacement", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("displacement", "must be a JSON object");
    std::vector<Vec3> v(grid.size());
    if (doc.contains("expressions")) {
        const json& e = doc["expressions"];
        if (!e.is_array() || e.size() != 3) throw ConfigError("displacement.expressions", "must hold three strings");
        std::array<Expression, 3> comps;
        for (int a = 0; a < 3; ++a) {
            if (!e[a].is_string()) throw ConfigError("displacement.expressions", "must hold three strings");
            try {
                comps[a] = parse_expression(e[a].get<std::string>());
            } catch (const Error& err) {
                throw ConfigError("displacement.expressions", std::string("does not parse: ") + err.what());
            }
            if (comps[a].depends_on(2)) throw ConfigError("displacement.expressions", "must not depend on x3");
        }
        for (std::size_t k = 0; k < v.size(); ++k) {
            const Vec2 x = grid.point(k);
            for (int a = 0; a < 3; ++a) v[k][a] = evaluate(comps[a], {x[0], x[1], 0.0});
        }
    } else if (doc.contains("values")) {
        const json& vals = doc["values"];
        if (!vals.is_array() || vals.size() != grid.size())
            throw ConfigError("displacement.values", "must hold one triple per grid node (" +
                                                         std::to_string(grid.size()) + ")");
        for (std::size_t k = 0; k < v.size(); ++k) {
            const json& t = vals[k];
            if (!t.is_array() || t.size() != 3 || !t[0].is_number() || !t[1].is_number() || !t[2].is_number())
                throw ConfigError("displacement.values", "entry " + std::to_string(k) + " is not a numeric triple");
            v[k] = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
        }
    } else {
        throw ConfigError("displacement", "needs an \"expressions\" or a \"values\" key");
    }
    for (const auto& item : doc.items())
        if (item.key() != "expressions" && item.key() != "values")
            throw ConfigError("displacement." + item.key(), "is not a recognized key");
    return v;
}

CommandResult run_classify(const RunConfig& cfg) {
    const MetricField m = make_metric(cfg);
    const CurvatureMidplateJets jets = curvature_midplate_jets(m, make_grid(cfg), cfg.classifier.max_order);
    const ScalingClass c = classify_scaling(jets, cfg.classifier);
    return {to_json(c), ladder_consistent(c)};
}

CommandResult run_curvature(const RunConfig& cfg, int order) {
    const MetricField m = make_metric(cfg);
    return {to_json(curvature_midplate_jets(m, make_grid(cfg), order)), true};
}

CommandResult run_expand(const RunConfig& cfg, int order) {
    const MetricField m = make_metric(cfg);
    const MidplateGrid grid = make_grid(cfg);
    const ExpansionFields f = build_expansion(m, grid, order, make_transport(cfg), cfg.expansion.disc_tol);
    const CurvatureMidplateJets jets = jets_for_level(m, grid, order);
    bool ok = true;
    json doc = expansion_summary(f, jets, cfg.gates, ok);
    doc["grid"] = grid_json(grid);
    doc["basepoint"] = f.basepoint;
    doc["y0"] = vec_field(f.y0());
    json b = json::array();
    for (int k = 1; k < static_cast<int>(f.b.size()); ++k) b.push_back(vec_field(f.b[k]));
    doc["b"] = b;
    doc["layout"] = "b[k-1][node] = b_k(x'); node = j * nx + i";
    return {doc, ok};
}

CommandResult run_limit_energy(const RunConfig& cfg, int order, const std::optional<std::vector<Vec3>>& v,
                               bool minimize) {
    const MetricField m = make_metric(cfg);
    const MidplateGrid grid = make_grid(cfg);
    const ExpansionFields f = build_expansion(m, grid, order, make_transport(cfg), cfg.expansion.disc_tol);
    const CurvatureMidplateJets jets = jets_for_level(m, grid, order);
    const PlateGeometry geo(f, cfg.density);
    const StrainSpace space(f, m, cfg.density, cfg.limit.solver_tol);
    json doc;
    if (minimize) {
        const LimitMinimum best = minimize_limit_energy(f, jets, geo, space, limit_options(cfg));
        doc = to_json(best.detail);
        doc["minimum"] = best.value;
        doc["argmin"] = json{{"layout", "values[node], node = j * nx + i"}, {"values", vec_field(best.v)}};
    } else {
        const std::vector<Vec3> disp = v ? *v : std::vector<Vec3>(grid.size(), Vec3::Zero());
        doc = to_json(limit_energy_eval(f, jets, geo, space, disp));
    }
    doc["order"] = order;
    doc["grid"] = grid_json(grid);
    return {doc, true};
}

SweepCommandResult run_sweep(const RunConfig& cfg, int order, const std::vector<double>& hs, SweepMode mode,
                             const std::array<int, 3>& mesh, const std::optional<std::vector<Vec3>>& v) {
    const MetricField m = make_metric(cfg);
    const MidplateGrid grid(cfg.domain, mesh[0], mesh[1]);
    const ExpansionFields f = build_expansion(m, grid, order, make_transport(cfg), cfg.expansion.disc_tol);
    const CurvatureMidplateJets jets = jets_for_level(m, grid, order);
    SweepOptions opts;
    opts.nz = mesh[2];
    opts.gauss_order = cfg.sweep.gauss_order;
    opts.lbfgs.max_iterations = cfg.sweep.max_iterations;
    opts.lbfgs.gradient_tol = cfg.sweep.gradient_tol;
    opts.lbfgs.memory = cfg.sweep.memory;
    if (v) opts.v = *v;
    SweepCommandResult out;
    out.sweep = scaling_sweep(m, cfg.density, f, jets, hs, mode, opts);
    out.summary.doc = to_json(out.sweep);
    out.summary.doc["mesh"] = {mesh[0], mesh[1], mesh[2]};
    out.summary.gates_ok = sweep_gate(out.sweep, cfg.gates);
    out.summary.doc["gate_passed"] = out.summary.gates_ok;
    return out;
}

CommandResult run_report(const RunConfig& cfg) {
    const MetricField m = make_metric(cfg);
    const MidplateGrid grid = make_grid(cfg);
    CommandResult out;
    json& doc = out.doc;
    doc["config"] = to_json(cfg);

    const CurvatureMidplateJets class_jets = curvature_midplate_jets(m, grid, cfg.classifier.max_order);
    const ScalingClass c = classify_scaling(class_jets, cfg.classifier);
    doc["classification"] = to_json(c);
    bool ok = ladder_consistent(c);

    json table = json::array();
    const int n = cfg.expansion.order > 0 ? cfg.expansion.order : level_from(c);
    for (int k = 1; k <= std::max(n, 4); ++k) {
        const CoefficientSet a = coefficients(k);
        const CoefficientSet b = coefficients_via_moments(k);
        json row = coefficients_json(a);
        row["identity_defect"] = std::abs(0.5 * a.delta * a.delta + a.gamma - a.beta) / a.beta;
        row["route_defect"] = std::max({std::abs(a.alpha - b.alpha), std::abs(a.beta - b.beta),
                                        std::abs(a.gamma - b.gamma), std::abs(a.delta - b.delta)});
        table.push_back(row);
    }
    doc["coefficients"] = table;

    if (c.kind == ScalingKind::BaseRegime) {
        doc["skipped"] = "the midplate metric is not flat, so no isometry expansion exists";
        doc["gates_passed"] = ok;
        out.gates_ok = ok;
        return out;
    }

    const ExpansionFields f = build_expansion(m, grid, n, make_transport(cfg), cfg.expansion.disc_tol);
    const CurvatureMidplateJets jets = jets_for_level(m, grid, n);
    doc["expansion"] = expansion_summary(f, jets, cfg.gates, ok);

    const PlateGeometry geo(f, cfg.density);
    const StrainSpace space(f, m, cfg.density, cfg.limit.solver_tol);
    const LimitMinimum best = minimize_limit_energy(f, jets, geo, space, limit_options(cfg));
    json limit = to_json(best.detail);
    limit["minimum"] = best.value;
    limit["at_zero"] = limit_energy_eval(f, jets, geo, space, std::vector<Vec3>(grid.size(), Vec3::Zero())).total;
    doc["limit_energy"] = limit;

    SweepOptions opts;
    opts.nz = cfg.sweep.nz;
    opts.gauss_order = cfg.sweep.gauss_order;
    opts.lbfgs.max_iterations = cfg.sweep.max_iterations;
    opts.lbfgs.gradient_tol = cfg.sweep.gradient_tol;
    opts.lbfgs.memory = cfg.sweep.memory;
    const SweepResult s = scaling_sweep(m, cfg.density, f, jets, cfg.sweep.h, cfg.sweep.mode, opts);
    json sweep = to_json(s);
    const bool sweep_ok = sweep_gate(s, cfg.gates) && (c.kind != ScalingKind::Flat || s.floor);
    sweep["gate_passed"] = sweep_ok;
    doc["sweep"] = sweep;
    ok = ok && sweep_ok;

    doc["gates_passed"] = ok;
    out.gates_ok = ok;
    return out;
}

}  // namespace shellscale
