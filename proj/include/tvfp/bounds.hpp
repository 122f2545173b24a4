#pragma once

#include "tvfp/common.hpp"
#include "tvfp/norm.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace tvfp {

/// Constants entering the tracking-error guarantees.
struct BoundInputs {
    double L = 0.0;
    double e_f = 0.0;
    double sigma = 0.0;
    int T_d = 0;
    int N_d = 0;
    int m = 1;
    NormKind norm = NormKind::Two;

    /// Throws PreconditionFailed on non-finite fields, negative quantities or
    /// N_d > m - 1.
    void validate() const;
};

/// prod_{l = tau+1..t} L^(l), with L_series[l - 1] = L^(l); 1 when tau == t.
double beta_coefficient(int t, int tau, std::span<const double> L_series);

/// Bound on |x^(t+1) - x^(*,t+1)|:
///   beta(t,0) * initial_error + sum_{tau=1..t} beta(t,tau) (e_f^(tau) + sigma^(tau)).
/// Series are 1-based through index 0 of the span and must cover 1..t.
double per_iterate_bound(double initial_error, std::span<const double> e_f_series,
                         std::span<const double> sigma_series, std::span<const double> L_series, int t);

/// The same bound for every t = 0..T-1 at once (entry k bounds error k+1),
/// by the one-step recursion b <- L b + e_f + sigma.
std::vector<double> per_iterate_bound_series(double initial_error, std::span<const double> e_f_series,
                                             std::span<const double> sigma_series,
                                             std::span<const double> L_series, int horizon);

/// (e_f + sigma) / (1 - L).
double asymptotic_bound_sync(const BoundInputs& in);
/// (e_f + sigma (1 + L T_d)) / (1 - L); infinity-norm contractions only.
double asymptotic_bound_async_inf(const BoundInputs& in);
/// (e_f + sigma (1 + L sqrt(m) T_d)) / (1 - L sqrt(m)); l2 contractions with L sqrt(m) < 1.
double asymptotic_bound_async_l2_equiv(const BoundInputs& in);
/// (e_f + sigma (1 + L sqrt(N_d+1) T_d)) / (1 - L sqrt(N_d+1)); l2 contractions
/// with L sqrt(N_d+1) < 1.
double asymptotic_bound_async_l2_refined(const BoundInputs& in);

struct StepWindow {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double alpha) const { return lo <= alpha && alpha <= hi; }
};

/// Step sizes for which the regularized projected-gradient map satisfies
/// L sqrt(N_d+1) <= 1; nullopt when the window is empty.
std::optional<StepWindow> gradient_step_window(double M, double eta, int N_d);

/// Smallest regularization making the step window nonempty:
/// (sqrt(N_d+1) - 1) / 2 * M.
double min_regularization(double M, int N_d);

/// kappa = (sqrt(N_d+1) - 1) / (sqrt(N_d+1) + 1).
double window_kappa(int N_d);

/// max{|1 - alpha eta|, |1 - alpha (M + eta)|}.
double projected_gradient_lipschitz(double alpha, double M, double eta);

struct DelayedRecursionCheck {
    double empirical_limsup = 0.0;
    double bound = 0.0;
    bool pass = false;
};

/// Simulates a^(t) = b + Gamma a^(t - delta(t)) for t > T from the given
/// a^(1..T) and compares the tail maximum (last 10% of the horizon) with
/// b / (1 - Gamma).
DelayedRecursionCheck check_delayed_recursion_limsup(double b, double Gamma, int T,
                                                     const std::function<int(int)>& delta,
                                                     std::span<const double> initial, int horizon);

/// Cyclic schedule convenience overload: delta(t) = schedule[(t - 1) % size].
DelayedRecursionCheck check_delayed_recursion_limsup(double b, double Gamma, int T,
                                                     std::span<const int> schedule,
                                                     std::span<const double> initial, int horizon);

}  // namespace tvfp
