#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "shellscale/classifier.hpp"
#include "shellscale/elastic3d.hpp"
#include "shellscale/metric.hpp"
#include "shellscale/quad_forms.hpp"

namespace shellscale {

// Metric entries are kept as the user's expression text; they are parsed
// during validation and again when the MetricField is built.
struct MetricSpec {
    MetricFamily family = MetricFamily::Conformal;
    std::string phi = "0";
    std::array<std::string, 6> entries{"1", "0", "0", "1", "0", "1"};  // G11 G12 G13 G22 G23 G33
    double spd_floor = 1e-10;

    friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

struct ExpansionConfig {
    int order = 0;  // 0 means the level reported by the classifier
    int substeps = 4;
    double frame_tol = 1e-8;
    double disc_tol = 1e-6;

    friend bool operator==(const ExpansionConfig&, const ExpansionConfig&) = default;
};

struct LimitConfig {
    double solver_tol = 1e-10;
    double penalty_epsilon = 1e-8;
    double regularization = 1e-12;

    friend bool operator==(const LimitConfig&, const LimitConfig&) = default;
};

struct SweepConfig {
    std::vector<double> h{0.2, 0.14, 0.1, 0.07, 0.05};
    SweepMode mode = SweepMode::Ansatz;
    int nz = 5;
    int gauss_order = 2;
    int max_iterations = 2000;
    double gradient_tol = 1e-6;
    int memory = 10;

    friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

// Thresholds that decide exit code 2.
struct GateConfig {
    double residual_tol = 1e-6;
    double riem_tol = 1e-6;
    double slope_tolerance = 0.2;
    double minimize_slope_tolerance = 0.4;

    friend bool operator==(const GateConfig&, const GateConfig&) = default;
};

struct OutputConfig {
    std::string json;  // empty means stdout
    std::string csv;

    friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
    MetricSpec metric;
    Rect domain;
    int nx = 17;
    int ny = 17;
    EnergyDensity density;
    ClassifierOptions classifier;
    ExpansionConfig expansion;
    LimitConfig limit;
    SweepConfig sweep;
    GateConfig gates;
    OutputConfig output;
    std::uint64_t seed = 0;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Reads TOML (.toml) or JSON (.json) and validates it. Throws ConfigError
// naming the offending key.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(const std::string& text, const std::string& format);

// Full document with every default spelled out; parse_config(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& cfg);

MetricField make_metric(const RunConfig& cfg);
MidplateGrid make_grid(const RunConfig& cfg);
TransportOptions make_transport(const RunConfig& cfg);

}  // namespace shellscale
