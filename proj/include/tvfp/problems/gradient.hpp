#pragma once

#include "tvfp/async_sim.hpp"
#include "tvfp/common.hpp"
#include "tvfp/map_family.hpp"
#include "tvfp/norm.hpp"

#include <cstdint>

namespace tvfp {

/// min_x sum_i (a_i/2) x_i^2 + (gamma/2)(c'x + w^(t) - r^(t))^2 + (eta/2)|x|^2
/// over the box lo <= x <= hi. y^(t)(x) = c'x + w^(t) is the measured output.
struct TimeVaryingQP {
    Vector a;
    Vector c;
    ScalarSeries w;
    ScalarSeries r;
    double gamma = 1.0;
    double eta = 0.0;
    Vector lo;
    Vector hi;

    int agents() const noexcept { return static_cast<int>(a.size()); }
    /// Throws PreconditionFailed on inconsistent sizes, a_i < 0, gamma <= 0,
    /// eta < 0 or a degenerate box.
    void validate() const;
    /// Largest eigenvalue of diag(a) + gamma c c' (the regularization is kept
    /// separate, as in the step-size window).
    double smoothness() const;
    /// Smallest eigenvalue of diag(a) + gamma c c' + eta I.
    double strong_convexity() const;
    Matrix hessian() const;
};

/// x -> Proj_box{x - alpha (diag(a) x + gamma c (c'x + w - r) + eta x)}.
/// Declared L = max{|1 - alpha lambda_min|, |1 - alpha lambda_max|} of the
/// regularized Hessian; never larger than the window's
/// max{|1 - alpha eta|, |1 - alpha (M + eta)|}.
MapFamily build_gradient_map(const TimeVaryingQP& qp, double alpha);

/// The same step with y replaced by the measurement y + nu^(t),
/// |nu^(t)| <= noise_bound; e_f = alpha gamma |c| noise_bound in `norm`.
InexactMapFamily build_feedback_gradient_map(const TimeVaryingQP& qp, double alpha, double noise_bound,
                                             std::uint64_t seed, const NormSpec& norm = NormSpec::two(),
                                             PerturbationMode mode = PerturbationMode::UniformBall);

/// N scalar agents (blocks 0..N-1) and one aggregator (block N); edges
/// aggregator -> agent and agent -> aggregator.
DependencyGraph star_partition(const TimeVaryingQP& qp);

/// The feedback gradient method over the star: the aggregator block holds
/// u = s (y_hat - r) computed from the previous x, each agent steps with the
/// broadcast u. s rescales the aggregator so the map contracts in l2.
struct StarFeedbackModel {
    InexactMapFamily map;
    DependencyGraph graph;
    double scale = 1.0;
};

/// Throws ContractionUncertified when no scaling gives an l2 contraction.
StarFeedbackModel build_star_feedback_map(const TimeVaryingQP& qp, double alpha, double noise_bound,
                                          std::uint64_t seed,
                                          PerturbationMode mode = PerturbationMode::UniformBall);

/// |x - Proj_box(x - grad)|_inf of the time-t objective; zero exactly at its minimizer.
double qp_stationarity(const TimeVaryingQP& qp, const Vector& x, Tick t);

/// A seeded random instance: a_i in [0.5, 2], c_i in [0.2, 1], box [-1, 1],
/// w and r slow sinusoids.
TimeVaryingQP random_qp(int agents, double gamma, double eta, std::uint64_t seed);

}  // namespace tvfp
