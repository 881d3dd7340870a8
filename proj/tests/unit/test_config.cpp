#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "shellscale/errors.hpp"
#include "shellscale/report.hpp"

using namespace shellscale;

namespace {

std::string config_error(const std::string& text, const std::string& format) {
    try {
        parse_config_text(text, format);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string write_temp(const std::string& name, const std::string& text) {
    const std::string path = "shellscale_test_" + name;
    std::ofstream(path) << text;
    return path;
}

}  // namespace

TEST_CASE("minimal conformal config gets defaults") {
    const RunConfig c = parse_config_text("[metric]\nphi = \"x3^3/6\"\n", "toml");
    CHECK(c.metric.family == MetricFamily::Conformal);
    CHECK(c.metric.phi == "x3^3/6");
    CHECK(c.nx == 17);
    CHECK(c.ny == 17);
    CHECK(c.density.mu == 1.0);
    CHECK(c.density.lambda == 0.0);
    CHECK(c.classifier.max_order == 8);
    CHECK(c.sweep.h == std::vector<double>{0.2, 0.14, 0.1, 0.07, 0.05});
    CHECK(c.sweep.mode == SweepMode::Ansatz);
    CHECK(c.sweep.nz == 5);
    CHECK(c.domain == Rect{});
    const MetricField m = make_metric(c);
    CHECK(m.evaluate(Vec3(0.3, 0.2, 1.0))(0, 0) == doctest::Approx(std::exp(2.0 / 6.0)).epsilon(1e-15));
}

TEST_CASE("validation errors name the key") {
    CHECK(config_error("[metric]\nphi = \"x3\"\n[density]\nmu = -1\n", "toml") == "density.mu must be positive");
    CHECK(config_error("{\"metric\": {\"phi\": \"x3\"}, \"density\": {\"mu\": -1}}", "json") ==
          "density.mu must be positive");
    const std::string syntax = config_error(
        "[metric]\nG11 = \"1 +* x1\"\nG12 = \"0\"\nG13 = \"0\"\nG22 = \"1\"\nG23 = \"0\"\nG33 = \"1\"\n", "toml");
    CHECK(syntax.rfind("metric.G11 does not parse: syntax error", 0) == 0);
    CHECK(config_error("[metric]\nphi = \"x3\"\ncolour = 1\n", "toml") == "metric.colour is not a recognized key");
    CHECK(config_error("[metric]\nphi = \"x3\"\n[grid]\nnx = 17\nnz = 3\n", "toml") ==
          "grid.nz is not a recognized key");
    CHECK(config_error("[metric]\nphi = \"x3\"\n[extra]\n", "toml") == "extra is not a recognized key");
    CHECK(config_error("[metric]\nphi = \"x1 + x3\"\n", "toml") == "metric.phi must depend on x3 only");
    CHECK(config_error("[metric]\nphi = \"x3\"\n[grid]\nnx = 4\n", "toml") == "grid.nx must be at least 5");
    CHECK(config_error("[metric]\nphi = \"x3\"\n[grid]\nnx = 17.5\n", "toml") == "grid.nx must be an integer");
    CHECK(config_error("[metric]\nphi = \"x3\"\n[sweep]\nh = [0.1, 0.2, 0.05]\n", "toml") ==
          "sweep.h must be strictly decreasing");
    CHECK(config_error("[metric]\nphi = \"x3\"\n[sweep]\nmode = \"fast\"\n", "toml").rfind("sweep.mode", 0) == 0);
    CHECK(config_error("[metric]\nphi = \"x3\"\n[domain]\nx1 = [1.0, 0.0]\n", "toml") ==
          "domain.x1 must be an increasing interval");
    CHECK(config_error("[grid]\nnx = 9\n", "toml") == "metric is required");
    CHECK(config_error("[metric\n", "toml").rfind("invalid TOML", 0) == 0);
    CHECK(config_error("{", "json").rfind("invalid JSON", 0) == 0);
    CHECK(config_error("seed = -3\n[metric]\nphi = \"x3\"\n", "toml") == "seed must be a non-negative integer");
}

TEST_CASE("nine-key metric tables") {
    const std::string upper = "[metric]\nG11 = \"1\"\nG12 = \"x1*x3\"\nG13 = \"0\"\nG22 = \"1\"\nG23 = \"0\"\nG33 = \"1\"\n";
    CHECK(parse_config_text(upper + "G21 = \"x1 * x3\"\nG31 = \"0\"\nG32 = \"0\"\n", "toml").metric.entries[1] ==
          "x1*x3");
    CHECK(config_error(upper + "G21 = \"x3*x1\"\n", "toml") == "metric.G21 must equal G12");
    CHECK(config_error("[metric]\nG11 = \"1\"\n", "toml") == "metric.G12 is required for the general family");
}

TEST_CASE("config round trip") {
    const std::string toml_text = R"toml(
seed = 42
[metric]
family = "general"
G11 = "1 + x3^2"
G12 = "0"
G13 = "0.1*x1*x3"
G22 = "exp(x3)"
G23 = "0"
G33 = "1"
spd_floor = 1e-9
[domain]
x1 = [-0.5, 0.5]
x2 = [0, 2]
[grid]
nx = 9
ny = 11
[density]
mu = 2.5
lambda = 0.75
[classifier]
tol_rel = 1e-7
max_order = 5
[sweep]
h = [0.3, 0.2, 0.1]
mode = "minimize"
nz = 3
[gates]
riem_tol = 1e-5
[output]
csv = "out.csv"
)toml";
    const RunConfig a = parse_config_text(toml_text, "toml");
    CHECK(a.seed == 42);
    CHECK(a.density.lambda == 0.75);
    CHECK(a.sweep.mode == SweepMode::Minimize);
    const RunConfig b = parse_config(to_json(a));
    CHECK(a == b);
    CHECK(dump_json(to_json(a)) == dump_json(to_json(b)));
    const RunConfig c = parse_config_text(to_json(a).dump(), "json");
    CHECK(a == c);
    RunConfig d = c;
    d.density.mu = 2.0;
    CHECK_FALSE(a == d);

    const RunConfig conformal = parse_config_text("[metric]\nphi = \"x3^2/2\"\n", "toml");
    CHECK(parse_config(to_json(conformal)) == conformal);
}

TEST_CASE("load_config dispatches on the extension") {
    const std::string t = write_temp("a.toml", "[metric]\nphi = \"x3^2/2\"\n");
    const std::string j = write_temp("a.json", "{\"metric\": {\"phi\": \"x3^2/2\"}}");
    const std::string y = write_temp("a.yaml", "metric: 1\n");
    CHECK(load_config(t) == load_config(j));
    CHECK_THROWS_AS(load_config(y), ConfigError);
    CHECK_THROWS_AS(load_config("does_not_exist.toml"), ConfigError);
    std::remove(t.c_str());
    std::remove(j.c_str());
    std::remove(y.c_str());
}

TEST_CASE("JSON output uses 17 significant digits") {
    nlohmann::json doc{{"b", 0.1}, {"a", {1, 2.5, 1.0 / 3.0}}, {"c", "text"}, {"d", std::nan("")}};
    const std::string text = dump_json(doc);
    CHECK(text.find("0.10000000000000001") != std::string::npos);
    CHECK(text.find("0.33333333333333331") != std::string::npos);
    CHECK(text.find("\"d\": null") != std::string::npos);
    // Sorted keys.
    CHECK(text.find("\"a\"") < text.find("\"b\""));
    const nlohmann::json back = nlohmann::json::parse(text);
    CHECK(back["b"].get<double>() == 0.1);
    CHECK(back["a"][2].get<double>() == 1.0 / 3.0);
}

TEST_CASE("coefficient table") {
    bool agree = false;
    const std::string csv = coefficient_csv(10, &agree);
    CHECK(agree);
    CHECK(csv.rfind("n,alpha,beta,gamma,delta,identity_defect\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
    CHECK(csv.find("\n2,0.025000000000000001,") != std::string::npos);
}

TEST_CASE("displacement files") {
    const MidplateGrid grid(Rect{}, 5, 5);
    const std::string e = write_temp("v1.json", R"({"expressions": ["0", "x2", "x1^2"]})");
    const std::vector<Vec3> v = load_displacement(e, grid);
    for (std::size_t k = 0; k < v.size(); ++k) {
        const Vec2 x = grid.point(k);
        CHECK((v[k] - Vec3(0.0, x[1], x[0] * x[0])).norm() <= 1e-15);
    }
    nlohmann::json vals{{"values", nlohmann::json::array()}};
    for (const Vec3& x : v) vals["values"].push_back({x[0], x[1], x[2]});
    const std::string n = write_temp("v2.json", vals.dump());
    CHECK(load_displacement(n, grid) == v);
    CHECK_THROWS_AS(load_displacement(n, MidplateGrid(Rect{}, 7, 5)), ConfigError);
    const std::string bad = write_temp("v3.json", R"({"expressions": ["0", "x3", "0"]})");
    CHECK_THROWS_AS(load_displacement(bad, grid), ConfigError);
    std::remove(e.c_str());
    std::remove(n.c_str());
    std::remove(bad.c_str());
}

TEST_CASE("report on the Euclidean metric") {
    RunConfig cfg = parse_config_text(
        "[metric]\nG11 = \"1\"\nG12 = \"0\"\nG13 = \"0\"\nG22 = \"1\"\nG23 = \"0\"\nG33 = \"1\"\n[grid]\nnx = 9\nny = 9\n",
        "toml");
    const CommandResult a = run_report(cfg);
    CHECK(a.gates_ok);
    CHECK(a.doc["classification"]["kind"] == "flat");
    for (const auto& r : a.doc["expansion"]["residual_norms"]) CHECK(r.get<double>() <= 1e-12);
    CHECK(a.doc["sweep"]["at_floor"] == true);
    CHECK(std::abs(a.doc["limit_energy"]["minimum"].get<double>()) <= 1e-20);
    // Determinism.
    CHECK(dump_json(a.doc) == dump_json(run_report(cfg).doc));
}

TEST_CASE("report on the conformal family") {
    for (int p : {2, 3}) {
        RunConfig cfg = parse_config_text(
            "[metric]\nphi = \"x3^" + std::to_string(p) + "/" + (p == 2 ? "2" : "6") + "\"\n[grid]\nnx = 9\nny = 9\n",
            "toml");
        const CommandResult r = run_report(cfg);
        CHECK(r.gates_ok);
        CHECK(r.doc["classification"]["exponent"] == 2 * p);
        CHECK(r.doc["expansion"]["riem_defect"].get<double>() <= 1e-6);
        CHECK(r.doc["sweep"]["slope"].get<double>() == doctest::Approx(2.0 * p).epsilon(0.05));
    }
}

TEST_CASE("sweep command output") {
    RunConfig cfg = parse_config_text("[metric]\nphi = \"x3^2/2\"\n", "toml");
    const SweepCommandResult r = run_sweep(cfg, 1, {0.2, 0.1, 0.05}, SweepMode::Ansatz, {9, 9, 3});
    const std::string csv = sweep_csv(r.sweep);
    CHECK(csv.rfind("h,energy,scaled_energy,mode\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv.find(",ansatz\n") != std::string::npos);
    CHECK(r.summary.gates_ok);
    CHECK(r.summary.doc.contains("slope"));
    CHECK(r.summary.doc.contains("intercept"));
    CHECK(r.summary.doc.contains("residual"));
}
