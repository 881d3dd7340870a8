#include "shellscale/classifier.hpp"

#include <cmath>
#include <stdexcept>

#include "shellscale/errors.hpp"

namespace shellscale {

const char* to_string(ScalingKind k) {
    switch (k) {
        case ScalingKind::Flat: return "flat";
        case ScalingKind::Exponent: return "exponent";
        case ScalingKind::BaseRegime: return "base_regime";
    }
    return "unknown";
}

namespace {

struct Sample {
    std::size_t node;
    std::string component;
    double value;
};

GateResult run_gate(int order, const std::vector<Sample>& samples, const MidplateGrid& grid,
                    const ClassifierOptions& opts) {
    GateResult g;
    g.order = order;
    const Sample* worst = nullptr;
    for (const Sample& s : samples) {
        if (worst == nullptr || std::abs(s.value) > std::abs(worst->value)) worst = &s;
    }
    g.max_abs = worst ? std::abs(worst->value) : 0.0;
    g.threshold = opts.tol_abs + opts.tol_rel * g.max_abs;
    g.vanishes = !(g.max_abs > g.threshold);
    if (worst) g.witness = Witness{worst->node, grid.point(worst->node), worst->component, std::max(order, 0), worst->value};
    return g;
}

}  // namespace

ScalingClass classify_scaling(const CurvatureMidplateJets& jets, const ClassifierOptions& opts) {
    if (opts.max_order < 0) throw std::invalid_argument("classifier max order must be non-negative");
    if (opts.max_order > jets.order)
        throw InsufficientJetOrder("curvature jets reach order " + std::to_string(jets.order) +
                                   " but the classifier was asked to test order " + std::to_string(opts.max_order));
    ScalingClass out;
    out.tol_abs = opts.tol_abs;
    out.tol_rel = opts.tol_rel;

    std::vector<Sample> samples;
    const char* midplate_names[3] = {"R_{12,12}", "R_{12,13}", "R_{12,23}"};
    for (std::size_t node = 0; node < jets.grid.size(); ++node)
        for (int c = 0; c < 3; ++c) samples.push_back({node, midplate_names[c], jets.midplate[node][c]});
    out.gates.push_back(run_gate(-1, samples, jets.grid, opts));
    if (!out.gates.back().vanishes) {
        out.kind = ScalingKind::BaseRegime;
        out.exponent = 2;
        out.witness = out.gates.back().witness;
        out.immersibility_unchecked = true;
        return out;
    }

    for (int k = 0; k <= opts.max_order; ++k) {
        samples.clear();
        for (std::size_t node = 0; node < jets.grid.size(); ++node) {
            const Mat2& b = jets.blocks[k][node];
            for (int i = 0; i < 2; ++i)
                for (int j = i; j < 2; ++j) {
                    const std::string name = "R_{" + std::to_string(i + 1) + "3," + std::to_string(j + 1) + "3}";
                    samples.push_back({node, name, b(i, j)});
                }
        }
        out.gates.push_back(run_gate(k, samples, jets.grid, opts));
        out.max_order_tested = k;
        if (!out.gates.back().vanishes) {
            out.kind = ScalingKind::Exponent;
            out.n = k + 1;
            out.exponent = 2 * (out.n + 1);
            out.witness = out.gates.back().witness;
            if (!ladder_consistent(out)) throw std::logic_error("classifier ladder is inconsistent");
            return out;
        }
    }
    out.kind = ScalingKind::Flat;
    out.exponent = 0;
    if (!ladder_consistent(out)) throw std::logic_error("classifier ladder is inconsistent");
    return out;
}

bool ladder_consistent(const ScalingClass& c) {
    if (c.gates.empty()) return false;
    for (std::size_t i = 0; i + 1 < c.gates.size(); ++i)
        if (!c.gates[i].vanishes) return false;
    const bool last_vanishes = c.gates.back().vanishes;
    switch (c.kind) {
        case ScalingKind::Flat: return last_vanishes;
        case ScalingKind::BaseRegime: return !last_vanishes && c.gates.size() == 1;
        case ScalingKind::Exponent:
            return !last_vanishes && c.gates.back().order == c.n - 1 && c.exponent == 2 * (c.n + 1);
    }
    return false;
}

}  // namespace shellscale
