#include "shellscale/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "shellscale/errors.hpp"
#include "toml.hpp"

namespace shellscale {

namespace {

using nlohmann::json;

const std::array<const char*, 6> kUpperKeys{"G11", "G12", "G13", "G22", "G23", "G33"};
// Lower-triangle spellings and the upper entry each one mirrors.
const std::array<std::pair<const char*, int>, 3> kLowerKeys{{{"G21", 1}, {"G31", 2}, {"G32", 4}}};

json toml_to_json(const toml::node& node, const std::string& path) {
    if (const toml::table* t = node.as_table()) {
        json out = json::object();
        for (const auto& [key, value] : *t) {
            const std::string k(key.str());
            out[k] = toml_to_json(value, path.empty() ? k : path + "." + k);
        }
        return out;
    }
    if (const toml::array* a = node.as_array()) {
        json out = json::array();
        for (std::size_t i = 0; i < a->size(); ++i)
            out.push_back(toml_to_json(*a->get(i), path + "[" + std::to_string(i) + "]"));
        return out;
    }
    if (const auto* v = node.as_integer()) return json(v->get());
    if (const auto* v = node.as_floating_point()) return json(v->get());
    if (const auto* v = node.as_boolean()) return json(v->get());
    if (const auto* v = node.as_string()) return json(v->get());
    throw ConfigError(path, "has an unsupported TOML type");
}

// Reads keys from one table and remembers which ones were consumed, so
// leftovers can be reported as unknown.
class Section {
public:
    Section(json doc, std::string path) : doc_(std::move(doc)), path_(std::move(path)) {
        if (!doc_.is_null() && !doc_.is_object()) throw ConfigError(path_, "must be a table");
    }

    bool has(const std::string& key) const { return doc_.is_object() && doc_.contains(key); }

    const json* get(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) return nullptr;
        return &doc_.at(key);
    }

    json sub(const std::string& key) {
        const json* v = get(key);
        return v ? *v : json();
    }

    std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void read(const std::string& key, double& out) {
        if (const json* v = get(key)) {
            if (!v->is_number()) throw ConfigError(path(key), "must be a number");
            out = v->get<double>();
            if (!std::isfinite(out)) throw ConfigError(path(key), "must be finite");
        }
    }

    void read(const std::string& key, int& out) {
        if (const json* v = get(key)) {
            if (!v->is_number_integer()) throw ConfigError(path(key), "must be an integer");
            const long long x = v->get<long long>();
            if (x < -1000000000LL || x > 1000000000LL) throw ConfigError(path(key), "is out of range");
            out = static_cast<int>(x);
        }
    }

    void read(const std::string& key, std::uint64_t& out) {
        if (const json* v = get(key)) {
            if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
                throw ConfigError(path(key), "must be a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }

    void read(const std::string& key, std::string& out) {
        if (const json* v = get(key)) {
            if (!v->is_string()) throw ConfigError(path(key), "must be a string");
            out = v->get<std::string>();
        }
    }

    void read(const std::string& key, std::vector<double>& out) {
        if (const json* v = get(key)) {
            if (!v->is_array()) throw ConfigError(path(key), "must be an array of numbers");
            out.clear();
            for (const json& x : *v) {
                if (!x.is_number()) throw ConfigError(path(key), "must be an array of numbers");
                out.push_back(x.get<double>());
            }
        }
    }

    void finish() const {
        if (!doc_.is_object()) return;
        for (const auto& item : doc_.items())
            if (!seen_.count(item.key())) throw ConfigError(path(item.key()), "is not a recognized key");
    }

private:
    json doc_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& reason) {
    if (!ok) throw ConfigError(path, reason);
}

Expression parse_entry(const std::string& text, const std::string& path) {
    try {
        return parse_expression(text);
    } catch (const SyntaxError& e) {
        throw ConfigError(path, std::string("does not parse: ") + e.what());
    } catch (const UnknownIdentifier& e) {
        throw ConfigError(path, std::string("does not parse: ") + e.what());
    }
}

MetricSpec parse_metric(const json& doc) {
    Section s(doc, "metric");
    require(!doc.is_null(), "metric", "is required");
    MetricSpec m;
    std::string family;
    s.read("family", family);
    if (family.empty()) family = s.has("phi") ? "conformal" : "general";
    s.read("spd_floor", m.spd_floor);
    require(m.spd_floor > 0.0, "metric.spd_floor", "must be positive");
    if (family == "conformal") {
        m.family = MetricFamily::Conformal;
        require(s.has("phi"), "metric.phi", "is required for the conformal family");
        s.read("phi", m.phi);
        const Expression phi = parse_entry(m.phi, "metric.phi");
        require(!phi.depends_on(0) && !phi.depends_on(1), "metric.phi", "must depend on x3 only");
    } else if (family == "general") {
        m.family = MetricFamily::General;
        std::array<Expression, 6> parsed;
        for (int k = 0; k < 6; ++k) {
            require(s.has(kUpperKeys[k]), s.path(kUpperKeys[k]), "is required for the general family");
            s.read(kUpperKeys[k], m.entries[k]);
            parsed[k] = parse_entry(m.entries[k], s.path(kUpperKeys[k]));
        }
        for (const auto& [key, mirror] : kLowerKeys) {
            if (!s.has(key)) continue;
            std::string text;
            s.read(key, text);
            require(parse_entry(text, s.path(key)) == parsed[mirror], s.path(key),
                    std::string("must equal ") + kUpperKeys[mirror]);
        }
    } else {
        throw ConfigError("metric.family", "must be \"conformal\" or \"general\"");
    }
    s.finish();
    return m;
}

void read_interval(Section& s, const std::string& key, double& lo, double& hi) {
    std::vector<double> v{lo, hi};
    s.read(key, v);
    require(v.size() == 2, s.path(key), "must hold two numbers");
    require(v[0] < v[1], s.path(key), "must be an increasing interval");
    lo = v[0];
    hi = v[1];
}

}  // namespace

RunConfig parse_config(const json& doc) {
    Section top(doc, "");
    RunConfig c;
    c.metric = parse_metric(top.sub("metric"));

    {
        Section s(top.sub("domain"), "domain");
        read_interval(s, "x1", c.domain.x1_min, c.domain.x1_max);
        read_interval(s, "x2", c.domain.x2_min, c.domain.x2_max);
        s.finish();
    }
    {
        Section s(top.sub("grid"), "grid");
        s.read("nx", c.nx);
        s.read("ny", c.ny);
        require(c.nx >= 5, "grid.nx", "must be at least 5");
        require(c.ny >= 5, "grid.ny", "must be at least 5");
        s.finish();
    }
    {
        Section s(top.sub("density"), "density");
        s.read("mu", c.density.mu);
        s.read("lambda", c.density.lambda);
        s.read("det_floor", c.density.det_floor);
        require(c.density.mu > 0.0, "density.mu", "must be positive");
        require(2.0 * c.density.mu + 3.0 * c.density.lambda > 0.0, "density.lambda",
                "must satisfy 2 mu + 3 lambda > 0");
        require(c.density.det_floor > 0.0, "density.det_floor", "must be positive");
        s.finish();
    }
    {
        Section s(top.sub("classifier"), "classifier");
        s.read("tol_abs", c.classifier.tol_abs);
        s.read("tol_rel", c.classifier.tol_rel);
        s.read("max_order", c.classifier.max_order);
        require(c.classifier.tol_abs >= 0.0, "classifier.tol_abs", "must be non-negative");
        require(c.classifier.tol_rel >= 0.0, "classifier.tol_rel", "must be non-negative");
        require(c.classifier.max_order >= 1 && c.classifier.max_order <= 16, "classifier.max_order",
                "must lie in [1, 16]");
        s.finish();
    }
    {
        Section s(top.sub("expansion"), "expansion");
        s.read("order", c.expansion.order);
        s.read("substeps", c.expansion.substeps);
        s.read("frame_tol", c.expansion.frame_tol);
        s.read("disc_tol", c.expansion.disc_tol);
        require(c.expansion.order >= 0 && c.expansion.order <= 8, "expansion.order", "must lie in [0, 8]");
        require(c.expansion.substeps >= 1, "expansion.substeps", "must be at least 1");
        require(c.expansion.frame_tol > 0.0, "expansion.frame_tol", "must be positive");
        require(c.expansion.disc_tol > 0.0, "expansion.disc_tol", "must be positive");
        s.finish();
    }
    {
        Section s(top.sub("limit_energy"), "limit_energy");
        s.read("solver_tol", c.limit.solver_tol);
        s.read("penalty_epsilon", c.limit.penalty_epsilon);
        s.read("regularization", c.limit.regularization);
        require(c.limit.solver_tol > 0.0, "limit_energy.solver_tol", "must be positive");
        require(c.limit.penalty_epsilon > 0.0, "limit_energy.penalty_epsilon", "must be positive");
        require(c.limit.regularization >= 0.0, "limit_energy.regularization", "must be non-negative");
        s.finish();
    }
    {
        Section s(top.sub("sweep"), "sweep");
        s.read("h", c.sweep.h);
        std::string mode = to_string(c.sweep.mode);
        s.read("mode", mode);
        try {
            c.sweep.mode = sweep_mode_from_string(mode);
        } catch (const std::invalid_argument&) {
            throw ConfigError("sweep.mode", "must be \"ansatz\", \"recovery\" or \"minimize\"");
        }
        s.read("nz", c.sweep.nz);
        s.read("gauss_order", c.sweep.gauss_order);
        s.read("max_iterations", c.sweep.max_iterations);
        s.read("gradient_tol", c.sweep.gradient_tol);
        s.read("memory", c.sweep.memory);
        require(c.sweep.h.size() >= 3, "sweep.h", "must hold at least three thicknesses");
        for (std::size_t i = 0; i < c.sweep.h.size(); ++i) {
            require(c.sweep.h[i] > 0.0, "sweep.h", "must be positive");
            require(i == 0 || c.sweep.h[i] < c.sweep.h[i - 1], "sweep.h", "must be strictly decreasing");
        }
        require(c.sweep.nz >= 2, "sweep.nz", "must be at least 2");
        require(c.sweep.gauss_order >= 1 && c.sweep.gauss_order <= 4, "sweep.gauss_order", "must lie in [1, 4]");
        require(c.sweep.max_iterations >= 1, "sweep.max_iterations", "must be at least 1");
        require(c.sweep.gradient_tol > 0.0, "sweep.gradient_tol", "must be positive");
        require(c.sweep.memory >= 1, "sweep.memory", "must be at least 1");
        s.finish();
    }
    {
        Section s(top.sub("gates"), "gates");
        s.read("residual_tol", c.gates.residual_tol);
        s.read("riem_tol", c.gates.riem_tol);
        s.read("slope_tolerance", c.gates.slope_tolerance);
        s.read("minimize_slope_tolerance", c.gates.minimize_slope_tolerance);
        require(c.gates.residual_tol > 0.0, "gates.residual_tol", "must be positive");
        require(c.gates.riem_tol > 0.0, "gates.riem_tol", "must be positive");
        require(c.gates.slope_tolerance >= 0.0, "gates.slope_tolerance", "must be non-negative");
        require(c.gates.minimize_slope_tolerance >= 0.0, "gates.minimize_slope_tolerance", "must be non-negative");
        s.finish();
    }
    {
        Section s(top.sub("output"), "output");
        s.read("json", c.output.json);
        s.read("csv", c.output.csv);
        s.finish();
    }
    top.read("seed", c.seed);
    top.finish();
    return c;
}

RunConfig parse_config_text(const std::string& text, const std::string& format) {
    if (format == "json") {
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError("", std::string("invalid JSON: ") + e.what());
        }
        return parse_config(doc);
    }
    if (format == "toml") {
        try {
            const toml::table table = toml::parse(text);
            return parse_config(toml_to_json(table, ""));
        } catch (const toml::parse_error& e) {
            std::ostringstream os;
            os << "invalid TOML at line " << e.source().begin.line << ": " << e.description();
            throw ConfigError("", os.str());
        }
    }
    throw ConfigError("", "unsupported config format '" + format + "'");
}

RunConfig load_config(const std::string& path) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext != "json" && ext != "toml") throw ConfigError("", "config file must end in .toml or .json: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), ext);
}

json to_json(const RunConfig& c) {
    json metric;
    if (c.metric.family == MetricFamily::Conformal) {
        metric["family"] = "conformal";
        metric["phi"] = c.metric.phi;
    } else {
        metric["family"] = "general";
        for (int k = 0; k < 6; ++k) metric[kUpperKeys[k]] = c.metric.entries[k];
    }
    metric["spd_floor"] = c.metric.spd_floor;
    return json{
        {"metric", metric},
        {"domain", {{"x1", {c.domain.x1_min, c.domain.x1_max}}, {"x2", {c.domain.x2_min, c.domain.x2_max}}}},
        {"grid", {{"nx", c.nx}, {"ny", c.ny}}},
        {"density", {{"mu", c.density.mu}, {"lambda", c.density.lambda}, {"det_floor", c.density.det_floor}}},
        {"classifier",
         {{"tol_abs", c.classifier.tol_abs}, {"tol_rel", c.classifier.tol_rel}, {"max_order", c.classifier.max_order}}},
        {"expansion",
         {{"order", c.expansion.order},
          {"substeps", c.expansion.substeps},
          {"frame_tol", c.expansion.frame_tol},
          {"disc_tol", c.expansion.disc_tol}}},
        {"limit_energy",
         {{"solver_tol", c.limit.solver_tol},
          {"penalty_epsilon", c.limit.penalty_epsilon},
          {"regularization", c.limit.regularization}}},
        {"sweep",
         {{"h", c.sweep.h},
          {"mode", to_string(c.sweep.mode)},
          {"nz", c.sweep.nz},
          {"gauss_order", c.sweep.gauss_order},
          {"max_iterations", c.sweep.max_iterations},
          {"gradient_tol", c.sweep.gradient_tol},
          {"memory", c.sweep.memory}}},
        {"gates",
         {{"residual_tol", c.gates.residual_tol},
          {"riem_tol", c.gates.riem_tol},
          {"slope_tolerance", c.gates.slope_tolerance},
          {"minimize_slope_tolerance", c.gates.minimize_slope_tolerance}}},
        {"output", {{"json", c.output.json}, {"csv", c.output.csv}}},
        {"seed", c.seed},
    };
}

MetricField make_metric(const RunConfig& c) {
    if (c.metric.family == MetricFamily::Conformal)
        return MetricField::conformal(parse_expression(c.metric.phi), c.domain, c.metric.spd_floor);
    std::array<Expression, 6> upper;
    for (int k = 0; k < 6; ++k) upper[k] = parse_expression(c.metric.entries[k]);
    return MetricField::general(upper, c.domain, c.metric.spd_floor);
}

MidplateGrid make_grid(const RunConfig& c) { return MidplateGrid(c.domain, c.nx, c.ny); }

TransportOptions make_transport(const RunConfig& c) {
    TransportOptions t;
    t.substeps = c.expansion.substeps;
    t.frame_tol = c.expansion.frame_tol;
    return t;
}

}  // namespace shellscale
