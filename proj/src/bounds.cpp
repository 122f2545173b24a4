#include "tvfp/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tvfp {

namespace {

void require_contraction(double L, const char* who) {
    if (!(L >= 0.0)) throw PreconditionFailed(std::string(who) + ": L must be nonnegative");
    if (!(L < 1.0)) throw PreconditionFailed(std::string(who) + ": requires L < 1");
}

}  // namespace

void BoundInputs::validate() const {
    for (double v : {L, e_f, sigma})
        if (!std::isfinite(v)) throw PreconditionFailed("bound inputs must be finite");
    if (L < 0.0 || e_f < 0.0 || sigma < 0.0) throw PreconditionFailed("L, e_f and sigma must be nonnegative");
    if (T_d < 0 || N_d < 0) throw PreconditionFailed("T_d and N_d must be nonnegative");
    if (m < 1) throw PreconditionFailed("dimension m must be positive");
    if (N_d > m - 1) throw PreconditionFailed("N_d must not exceed m - 1");
}

double beta_coefficient(int t, int tau, std::span<const double> L_series) {
    if (tau < 0 || tau > t) throw IndexOutOfRange("beta_coefficient: requires 0 <= tau <= t");
    if (static_cast<int>(L_series.size()) < t) throw IndexOutOfRange("beta_coefficient: L series too short");
    double beta = 1.0;
    for (int l = tau + 1; l <= t; ++l) beta *= L_series[l - 1];
    return beta;
}

double per_iterate_bound(double initial_error, std::span<const double> e_f_series,
                         std::span<const double> sigma_series, std::span<const double> L_series, int t) {
    if (t < 0) throw IndexOutOfRange("per_iterate_bound: t must be nonnegative");
    const auto need = static_cast<std::size_t>(t);
    if (e_f_series.size() < need || sigma_series.size() < need || L_series.size() < need)
        throw LengthMismatch("per_iterate_bound: series must cover 1..t");
    double sum = 0.0;
    double beta = 1.0;  // beta(t, tau) for the current tau
    for (int tau = t; tau >= 1; --tau) {
        sum += beta * (e_f_series[tau - 1] + sigma_series[tau - 1]);
        beta *= L_series[tau - 1];
    }
    return beta * initial_error + sum;
}

std::vector<double> per_iterate_bound_series(double initial_error, std::span<const double> e_f_series,
                                             std::span<const double> sigma_series,
                                             std::span<const double> L_series, int horizon) {
    if (horizon < 1) throw PreconditionFailed("per_iterate_bound_series: horizon must be >= 1");
    const auto need = static_cast<std::size_t>(horizon - 1);
    if (e_f_series.size() < need || sigma_series.size() < need || L_series.size() < need)
        throw LengthMismatch("per_iterate_bound_series: series must cover 1..T-1");
    std::vector<double> out(horizon);
    out[0] = initial_error;
    for (int t = 1; t < horizon; ++t)
        out[t] = L_series[t - 1] * out[t - 1] + e_f_series[t - 1] + sigma_series[t - 1];
    return out;
}

double asymptotic_bound_sync(const BoundInputs& in) {
    in.validate();
    require_contraction(in.L, "asymptotic_bound_sync");
    return (in.e_f + in.sigma) / (1.0 - in.L);
}

double asymptotic_bound_async_inf(const BoundInputs& in) {
    in.validate();
    if (in.norm != NormKind::Inf) throw PreconditionFailed("asymptotic_bound_async_inf: requires the ell_inf norm");
    require_contraction(in.L, "asymptotic_bound_async_inf");
    return (in.e_f + in.sigma * (1.0 + in.L * in.T_d)) / (1.0 - in.L);
}

double asymptotic_bound_async_l2_equiv(const BoundInputs& in) {
    in.validate();
    if (in.norm != NormKind::Two)
        throw PreconditionFailed("asymptotic_bound_async_l2_equiv: requires the ell_2 norm");
    const double Ls = in.L * std::sqrt(static_cast<double>(in.m));
    if (!(Ls < 1.0)) throw PreconditionFailed("asymptotic_bound_async_l2_equiv: L*sqrt(m) >= 1");
    return (in.e_f + in.sigma * (1.0 + Ls * in.T_d)) / (1.0 - Ls);
}

double asymptotic_bound_async_l2_refined(const BoundInputs& in) {
    in.validate();
    if (in.norm != NormKind::Two)
        throw PreconditionFailed("asymptotic_bound_async_l2_refined: requires the ell_2 norm");
    const double Ls = in.L * std::sqrt(static_cast<double>(in.N_d + 1));
    if (!(Ls < 1.0)) throw PreconditionFailed("asymptotic_bound_async_l2_refined: L*sqrt(N_d+1) >= 1");
    return (in.e_f + in.sigma * (1.0 + Ls * in.T_d)) / (1.0 - Ls);
}

double window_kappa(int N_d) {
    if (N_d < 0) throw PreconditionFailed("window_kappa: N_d must be nonnegative");
    const double s = std::sqrt(static_cast<double>(N_d + 1));
    return (s - 1.0) / (s + 1.0);
}

std::optional<StepWindow> gradient_step_window(double M, double eta, int N_d) {
    if (!(M > 0.0) || !(eta > 0.0) || N_d < 0)
        throw PreconditionFailed("gradient_step_window: requires M > 0, eta > 0, N_d >= 0");
    const double inv = 1.0 / std::sqrt(static_cast<double>(N_d + 1));
    StepWindow w{(1.0 - inv) / eta, (1.0 + inv) / (M + eta)};
    if (w.lo > w.hi) return std::nullopt;
    return w;
}

double min_regularization(double M, int N_d) {
    if (!(M > 0.0) || N_d < 0) throw PreconditionFailed("min_regularization: requires M > 0, N_d >= 0");
    return (std::sqrt(static_cast<double>(N_d + 1)) - 1.0) / 2.0 * M;
}

double projected_gradient_lipschitz(double alpha, double M, double eta) {
    if (!(alpha > 0.0)) throw PreconditionFailed("projected_gradient_lipschitz: alpha must be positive");
    return std::max(std::abs(1.0 - alpha * eta), std::abs(1.0 - alpha * (M + eta)));
}

DelayedRecursionCheck check_delayed_recursion_limsup(double b, double Gamma, int T,
                                                     const std::function<int(int)>& delta,
                                                     std::span<const double> initial, int horizon) {
    if (!(Gamma > 0.0 && Gamma < 1.0)) throw PreconditionFailed("delayed recursion: Gamma must lie in (0, 1)");
    if (T < 1) throw PreconditionFailed("delayed recursion: T must be >= 1");
    if (static_cast<int>(initial.size()) != T) throw LengthMismatch("delayed recursion: need a^(1..T)");
    if (horizon <= T) throw PreconditionFailed("delayed recursion: horizon must exceed T");
    if (!(b >= 0.0) || !std::isfinite(b)) throw PreconditionFailed("delayed recursion: b must be finite, >= 0");

    std::vector<double> a(initial.begin(), initial.end());
    a.reserve(horizon);
    for (int t = T + 1; t <= horizon; ++t) {
        const int d = delta(t);
        if (d < 1 || d > T) throw PreconditionFailed("delayed recursion: delta(t) must lie in {1..T}");
        a.push_back(b + Gamma * a[t - d - 1]);
    }
    DelayedRecursionCheck out;
    const int first = std::max(static_cast<int>(std::ceil(0.9 * horizon)), 1);
    for (int t = first; t <= horizon; ++t) out.empirical_limsup = std::max(out.empirical_limsup, a[t - 1]);
    out.bound = b / (1.0 - Gamma);
    out.pass = out.empirical_limsup <= out.bound + 1e-9;
    return out;
}

DelayedRecursionCheck check_delayed_recursion_limsup(double b, double Gamma, int T, std::span<const int> schedule,
                                                     std::span<const double> initial, int horizon) {
    if (schedule.empty()) throw PreconditionFailed("delayed recursion: empty schedule");
    return check_delayed_recursion_limsup(
        b, Gamma, T, [schedule](int t) { return schedule[static_cast<std::size_t>(t - 1) % schedule.size()]; },
        initial, horizon);
}

}  // namespace tvfp
