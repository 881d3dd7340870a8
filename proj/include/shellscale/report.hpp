#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "shellscale/config.hpp"
#include "shellscale/limit_energy.hpp"

namespace shellscale {

// Serializes with two-space indentation, keys in sorted order and every
// floating-point value printed with 17 significant digits, so equal inputs
// give byte-identical text.
std::string dump_json(const nlohmann::json& doc);

// Output of one subcommand. gates_ok false maps to exit code 2.
struct CommandResult {
    nlohmann::json doc;
    bool gates_ok = true;
};

nlohmann::json to_json(const ScalingClass& c);
nlohmann::json to_json(const CurvatureMidplateJets& jets);
nlohmann::json to_json(const LimitEnergyResult& r);
nlohmann::json to_json(const SweepResult& s);
std::string sweep_csv(const SweepResult& s);

// CSV n, alpha, beta, gamma, delta, identity_defect for n = 1..n_max. The
// table is produced by both coefficient routes; `agree` reports whether
// they match to 1e-14 relative.
std::string coefficient_csv(int n_max, bool* agree = nullptr);

// Nodal displacement from a JSON file holding either {"expressions": [v1, v2, v3]}
// in x1, x2 or {"values": [[v1, v2, v3], ...]} in grid order.
std::vector<Vec3> load_displacement(const std::string& path, const MidplateGrid& grid);

CommandResult run_classify(const RunConfig& cfg);
CommandResult run_curvature(const RunConfig& cfg, int order);
CommandResult run_expand(const RunConfig& cfg, int order);
CommandResult run_limit_energy(const RunConfig& cfg, int order, const std::optional<std::vector<Vec3>>& v,
                               bool minimize);
// mesh = {nx, ny, nz}; the expansion is built on the in-plane mesh.
struct SweepCommandResult {
    CommandResult summary;
    SweepResult sweep;
};
SweepCommandResult run_sweep(const RunConfig& cfg, int order, const std::vector<double>& hs, SweepMode mode,
                             const std::array<int, 3>& mesh, const std::optional<std::vector<Vec3>>& v = {});

// classify, expand, limit-energy and sweep in one document.
CommandResult run_report(const RunConfig& cfg);

}  // namespace shellscale
