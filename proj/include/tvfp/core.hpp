#pragma once

#include "tvfp/common.hpp"
#include "tvfp/delay_stats.hpp"
#include "tvfp/domain.hpp"
#include "tvfp/map_family.hpp"
#include "tvfp/norm.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace tvfp {

inline constexpr double kReferenceTol = 1e-12;
inline constexpr int kReferenceMaxIter = 100000;

struct FixedPointResult {
    Vector x;
    int iterations = 0;
    /// |x - f(x)| under the solver norm.
    double residual = 0.0;
    /// Residual of every iterate, x0 first (only when requested).
    std::vector<double> residual_history;
};

/// Batch iteration x <- f^(t)(x) from x0 until |x - f^(t)(x)| <= tol.
/// Throws NonConvergence after max_iter maps and DomainViolation when an
/// iterate leaves the declared domain.
FixedPointResult solve_fixed_point(const MapFamily& map, Tick t, const Vector& x0,
                                   const NormSpec& norm, double tol = kReferenceTol,
                                   int max_iter = kReferenceMaxIter, bool record_history = false);

/// Reference fixed points x^(*,t), t = 1..T, and their drift.
struct FixedPointSeries {
    int horizon = 0;
    std::vector<Vector> points;
    std::vector<double> residuals;
    /// sigma^(t) = |x^(*,t+1) - x^(*,t)|, t = 1..T-1.
    std::vector<double> sigma_series;
    /// Maximum of sigma_series over the horizon (0 when T = 1).
    double sigma_sup = 0.0;

    const Vector& at(Tick t) const { return points.at(static_cast<std::size_t>(t - 1)); }
};

/// Warm-started batch solves per tick; families with a closed form seed the
/// solve from it and only polish.
FixedPointSeries compute_fixed_point_series(const MapFamily& map, int horizon, const NormSpec& norm,
                                            double tol = kReferenceTol,
                                            int max_iter = kReferenceMaxIter);

struct TrackingTrace {
    /// x^(t), t = 1..T.
    std::vector<Vector> iterates;
    FixedPointSeries reference;
    /// |x^(t) - x^(*,t)|, t = 1..T.
    std::vector<double> errors;
    NormSpec norm;
    std::uint64_t seed = 0;
    /// e_f bound per tick, t = 1..T.
    std::vector<double> e_f_series;
    /// Declared L^(t), t = 1..T.
    std::vector<double> L_series;
    /// Realized channel statistics; empty for synchronous runs.
    std::optional<DelayStats> delay;
};

/// x^(t+1) = f~^(t)(x^(t)) for t = 1..T-1. The reference series is computed
/// independently from the exact family unless supplied.
TrackingTrace run_online_tracker(const InexactMapFamily& map, const Vector& x0, int horizon,
                                 const NormSpec& norm, std::uint64_t seed = 0);
TrackingTrace run_online_tracker(const InexactMapFamily& map, const Vector& x0, int horizon,
                                 const NormSpec& norm, FixedPointSeries reference,
                                 std::uint64_t seed = 0);

/// Elementwise |iterates[k] - reference[k]|; throws LengthMismatch.
std::vector<double> tracking_error(std::span<const Vector> iterates, std::span<const Vector> reference,
                                   const NormSpec& norm);

struct LipschitzEstimate {
    double value = 0.0;
    int pairs_used = 0;
    /// Every sampled pair was degenerate (x == x').
    bool insufficient_sampling = false;
};

/// Max of |f(x) - f(x')| / |x - x'| over sampled pairs; a lower bound on the
/// true constant. Half of the pairs are local (x' close to x) to probe the
/// derivative, half are independent draws.
LipschitzEstimate estimate_lipschitz(const MapFamily& map, Tick t, DomainSampler& sampler, int n_pairs,
                                     const NormSpec& norm);

struct SelfMapCheck {
    bool ok = true;
    std::optional<Vector> counterexample;
};

SelfMapCheck verify_self_map(const DomainSpec& domain, const Evaluator& f, Tick t, DomainSampler& sampler,
                             int n_samples);
inline SelfMapCheck verify_self_map(const MapFamily& map, Tick t, DomainSampler& sampler, int n_samples) {
    return verify_self_map(map.domain, map.evaluator, t, sampler, n_samples);
}

/// Max of |f~(x) - f(x)| over sampled x.
double estimate_inexactness(const InexactMapFamily& map, Tick t, DomainSampler& sampler, int n_samples,
                            const NormSpec& norm);

/// The "limsup" window: ticks [first, last] (1-based, inclusive) covering the
/// final `fraction` of the horizon and never starting before `transient`.
struct TailWindow {
    int first = 1;
    int last = 1;
};
TailWindow tail_window(int horizon, double fraction = 0.1, int transient = 0);
double tail_max(std::span<const double> errors, TailWindow window);

}  // namespace tvfp
