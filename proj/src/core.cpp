#include "tvfp/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tvfp {

FixedPointResult solve_fixed_point(const MapFamily& map, Tick t, const Vector& x0, const NormSpec& norm,
                                   double tol, int max_iter, bool record_history) {
    if (!(tol > 0.0)) throw PreconditionFailed("solve_fixed_point: tol must be positive");
    if (max_iter < 0) throw PreconditionFailed("solve_fixed_point: max_iter must be nonnegative");
    if (!(map.declared_L_sup < 1.0)) throw PreconditionFailed("solve_fixed_point: map is not a declared contraction");
    if (!map.domain.contains(x0)) throw DomainViolation("solve_fixed_point: x0 outside the domain");

    FixedPointResult out;
    Vector x = x0;
    for (int k = 0;; ++k) {
        Vector fx = map(x, t);
        if (!map.domain.contains(fx)) {
            throw DomainViolation(map.name + ": iterate left the domain at t=" + std::to_string(t) +
                                  " (self-map declaration is false)");
        }
        const double r = norm.distance(fx, x);
        if (record_history) out.residual_history.push_back(r);
        if (r <= tol) {
            out.x = std::move(x);
            out.iterations = k;
            out.residual = r;
            return out;
        }
        if (k == max_iter || !std::isfinite(r)) {
            throw NonConvergence(map.name + ": no convergence at t=" + std::to_string(t) + ", residual " +
                                     std::to_string(r),
                                 t, r);
        }
        x = std::move(fx);
    }
}

FixedPointSeries compute_fixed_point_series(const MapFamily& map, int horizon, const NormSpec& norm, double tol,
                                            int max_iter) {
    if (horizon < 1) throw PreconditionFailed("compute_fixed_point_series: horizon must be >= 1");
    FixedPointSeries s;
    s.horizon = horizon;
    s.points.reserve(horizon);
    s.residuals.reserve(horizon);
    Vector warm = map.domain.anchor();
    for (Tick t = 1; t <= horizon; ++t) {
        const Vector start = map.has_closed_form() ? map.closed_form_fixed_point(t) : warm;
        FixedPointResult r = solve_fixed_point(map, t, start, norm, tol, max_iter);
        s.residuals.push_back(r.residual);
        warm = r.x;
        s.points.push_back(std::move(r.x));
    }
    s.sigma_series.reserve(horizon > 1 ? horizon - 1 : 0);
    for (int k = 0; k + 1 < horizon; ++k) {
        const double d = norm.distance(s.points[k + 1], s.points[k]);
        s.sigma_series.push_back(d);
        s.sigma_sup = std::max(s.sigma_sup, d);
    }
    return s;
}

std::vector<double> tracking_error(std::span<const Vector> iterates, std::span<const Vector> reference,
                                   const NormSpec& norm) {
    if (iterates.size() != reference.size())
        throw LengthMismatch("tracking_error: iterate and reference lengths differ");
    std::vector<double> e(iterates.size());
    for (std::size_t k = 0; k < iterates.size(); ++k) {
        if (iterates[k].size() != reference[k].size()) throw LengthMismatch("tracking_error: dimension mismatch");
        e[k] = norm.distance(iterates[k], reference[k]);
    }
    return e;
}

TrackingTrace run_online_tracker(const InexactMapFamily& map, const Vector& x0, int horizon, const NormSpec& norm,
                                 std::uint64_t seed) {
    if (horizon < 1) throw PreconditionFailed("run_online_tracker: horizon must be >= 1");
    return run_online_tracker(map, x0, horizon, norm, compute_fixed_point_series(map.base, horizon, norm), seed);
}

TrackingTrace run_online_tracker(const InexactMapFamily& map, const Vector& x0, int horizon, const NormSpec& norm,
                                 FixedPointSeries reference, std::uint64_t seed) {
    if (horizon < 1) throw PreconditionFailed("run_online_tracker: horizon must be >= 1");
    if (reference.horizon < horizon) throw LengthMismatch("run_online_tracker: reference shorter than horizon");
    if (!map.domain().contains(x0)) throw DomainViolation("run_online_tracker: x0 outside the domain");

    TrackingTrace trace;
    trace.norm = norm;
    trace.seed = seed;
    trace.iterates.reserve(horizon);
    trace.iterates.push_back(x0);
    for (Tick t = 1; t < horizon; ++t) {
        Vector next = map(trace.iterates.back(), t);
        if (!map.domain().contains(next))
            throw DomainViolation(map.base.name + ": tracker iterate left the domain at t=" + std::to_string(t + 1));
        trace.iterates.push_back(std::move(next));
    }
    reference.points.resize(horizon);
    reference.residuals.resize(horizon);
    reference.sigma_series.resize(horizon - 1);
    reference.horizon = horizon;
    reference.sigma_sup = 0.0;
    for (double s : reference.sigma_series) reference.sigma_sup = std::max(reference.sigma_sup, s);
    trace.errors = tracking_error(trace.iterates, reference.points, norm);
    trace.reference = std::move(reference);
    trace.e_f_series.reserve(horizon);
    trace.L_series.reserve(horizon);
    for (Tick t = 1; t <= horizon; ++t) {
        trace.e_f_series.push_back(map.e_f_bound(t));
        trace.L_series.push_back(map.base.declared_L(t));
    }
    return trace;
}

LipschitzEstimate estimate_lipschitz(const MapFamily& map, Tick t, DomainSampler& sampler, int n_pairs,
                                     const NormSpec& norm) {
    if (n_pairs < 1) throw PreconditionFailed("estimate_lipschitz: n_pairs must be >= 1");
    LipschitzEstimate est;
    for (int k = 0; k < n_pairs; ++k) {
        const Vector x = sampler.next();
        const Vector y = (k % 2 == 0) ? sampler.next() : sampler.near(x, 1e-3);
        const double dx = norm.distance(x, y);
        if (dx == 0.0) continue;
        ++est.pairs_used;
        est.value = std::max(est.value, norm.distance(map(x, t), map(y, t)) / dx);
    }
    est.insufficient_sampling = est.pairs_used == 0;
    return est;
}

SelfMapCheck verify_self_map(const DomainSpec& domain, const Evaluator& f, Tick t, DomainSampler& sampler,
                             int n_samples) {
    if (n_samples < 1) throw PreconditionFailed("verify_self_map: n_samples must be >= 1");
    for (int k = 0; k < n_samples; ++k) {
        Vector x = sampler.next();
        if (!domain.contains(f(x, t))) return SelfMapCheck{false, std::move(x)};
    }
    return {};
}

double estimate_inexactness(const InexactMapFamily& map, Tick t, DomainSampler& sampler, int n_samples,
                            const NormSpec& norm) {
    double worst = 0.0;
    for (int k = 0; k < n_samples; ++k) {
        const Vector x = sampler.next();
        worst = std::max(worst, norm.distance(map(x, t), map.base(x, t)));
    }
    return worst;
}

TailWindow tail_window(int horizon, double fraction, int transient) {
    if (horizon < 1) throw PreconditionFailed("tail_window: horizon must be >= 1");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw PreconditionFailed("tail_window: fraction must be in (0, 1]");
    int first = static_cast<int>(std::ceil((1.0 - fraction) * horizon));
    first = std::max({first, transient, 1});
    return {std::min(first, horizon), horizon};
}

double tail_max(std::span<const double> errors, TailWindow window) {
    if (window.last > static_cast<int>(errors.size()) || window.first < 1)
        throw IndexOutOfRange("tail_max: window outside the error series");
    double m = 0.0;
    for (int t = window.first; t <= window.last; ++t) m = std::max(m, errors[t - 1]);
    return m;
}

}  // namespace tvfp
