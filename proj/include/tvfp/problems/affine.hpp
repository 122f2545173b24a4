#pragma once

#include "tvfp/common.hpp"
#include "tvfp/map_family.hpp"
#include "tvfp/norm.hpp"

#include <cstdint>
#include <string>

namespace tvfp {

enum class AffinePattern { Dense, Tridiagonal, Diagonal };

AffinePattern parse_affine_pattern(const std::string& name);

/// Offset process b^(t).
struct DriftSpec {
    enum class Kind { Constant, Linear, RandomWalk, Piecewise };

    Kind kind = Kind::Constant;
    /// b^(0); drawn uniformly from [-1, 1]^m when empty.
    Vector b0;
    /// Linear/piecewise slope of b. When empty, a direction is drawn and
    /// scaled so the fixed point moves by exactly `sigma` per tick.
    Vector delta;
    double sigma = 0.0;
    /// Random walk: per-tick step of b drawn from the norm ball of this radius,
    /// precomputed for ticks 1..horizon and frozen afterwards.
    double step_bound = 0.0;
    int horizon = 0;
    /// Piecewise: the slope is multiplied by fast_factor on [fast_start, fast_end).
    int fast_start = 0;
    int fast_end = 0;
    double fast_factor = 1.0;

    static DriftSpec constant() { return {}; }
    static DriftSpec linear(double sigma);
    static DriftSpec random_walk(double step_bound, int horizon);
    static DriftSpec piecewise(double sigma, int fast_start, int fast_end, double fast_factor);
};

DriftSpec::Kind parse_drift_kind(const std::string& name);

struct AffineProblem {
    Matrix A;
    VectorSeries b;
    MapFamily family;
};

/// f^(t)(x) = A x + b^(t) on R^m with a seeded random A scaled so its
/// induced norm equals target_L: rows normalized to absolute sum target_L in
/// the infinity norm, the whole matrix to spectral norm target_L in l2.
AffineProblem build_affine_family(int m, NormKind norm, double target_L, const DriftSpec& drift,
                                  std::uint64_t seed, AffinePattern pattern = AffinePattern::Dense);

}  // namespace tvfp
