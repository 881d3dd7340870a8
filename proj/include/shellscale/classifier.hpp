#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "shellscale/linalg.hpp"
#include "shellscale/tensor_calc.hpp"

namespace shellscale {

enum class ScalingKind { Flat, Exponent, BaseRegime };

const char* to_string(ScalingKind k);

struct Witness {
    std::size_t node = 0;
    Vec2 point = Vec2::Zero();
    std::string component;  // e.g. "R_{13,23}"
    int order = 0;          // x3-derivative order of the component
    double value = 0.0;
};

// One zero test of the decision ladder. Order -1 is the midplate gate on
// (R_{12,12}, R_{12,13}, R_{12,23}); order k >= 0 tests d3^k R_{i3,j3}.
struct GateResult {
    int order = -1;
    double max_abs = 0.0;
    double threshold = 0.0;
    bool vanishes = true;
    Witness witness;
};

struct ScalingClass {
    ScalingKind kind = ScalingKind::Flat;
    int n = 0;          // level for Exponent
    int exponent = 0;   // 2(n+1) for Exponent, 2 for BaseRegime, 0 (infinite) for Flat
    int max_order_tested = 0;
    std::optional<Witness> witness;
    std::vector<GateResult> gates;
    double tol_abs = 0.0;
    double tol_rel = 0.0;
    // Set for BaseRegime: the midplate metric was not checked for an
    // isometric immersion, so the exponent-2 regime is reported as is.
    bool immersibility_unchecked = false;
};

struct ClassifierOptions {
    double tol_abs = 1e-10;
    double tol_rel = 1e-8;
    int max_order = 8;

    friend bool operator==(const ClassifierOptions&, const ClassifierOptions&) = default;
};

ScalingClass classify_scaling(const CurvatureMidplateJets& jets, const ClassifierOptions& opts = {});

// Re-checks that every gate below the reported level vanishes and the
// deciding gate does not.
bool ladder_consistent(const ScalingClass& c);

}  // namespace shellscale
