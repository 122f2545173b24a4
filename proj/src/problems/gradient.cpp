#include "tvfp/problems/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace tvfp {

void TimeVaryingQP::validate() const {
    const int n = agents();
    if (n < 1) throw PreconditionFailed("qp: needs at least one agent");
    if (c.size() != n || lo.size() != n || hi.size() != n) throw LengthMismatch("qp: a, c, lo, hi must have equal length");
    if (!w || !r) throw PreconditionFailed("qp: w and r series are required");
    if (!(gamma > 0.0)) throw PreconditionFailed("qp: gamma must be positive");
    if (!(eta >= 0.0)) throw PreconditionFailed("qp: eta must be nonnegative");
    for (int i = 0; i < n; ++i) {
        if (!(a(i) >= 0.0)) throw PreconditionFailed("qp: a_i must be nonnegative");
        if (!(lo(i) < hi(i)))
            throw PreconditionFailed("qp: degenerate or empty box at coordinate " + std::to_string(i));
    }
}

Matrix TimeVaryingQP::hessian() const {
    Matrix H = gamma * c * c.transpose();
    H.diagonal() += a;
    return H;
}

double TimeVaryingQP::smoothness() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hessian(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

double TimeVaryingQP::strong_convexity() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hessian(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() + eta;
}

namespace {

Vector clamp(const Vector& x, const Vector& lo, const Vector& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

/// Measurement noise nu^(t): a pure function of (seed, t).
ScalarSeries noise_series(double bound, std::uint64_t seed, PerturbationMode mode) {
    if (mode == PerturbationMode::ConstantOffset) return [bound](Tick) { return bound; };
    return [bound, seed](Tick t) {
        if (bound == 0.0) return 0.0;
        return bound * (2.0 * counter_uniform(seed, 0x9f00, static_cast<std::uint64_t>(t)) - 1.0);
    };
}

double checked_step(double alpha, const char* who) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw PreconditionFailed(std::string(who) + ": alpha must lie in (0, inf)");
    return alpha;
}

}  // namespace

MapFamily build_gradient_map(const TimeVaryingQP& qp, double alpha) {
    checked_step(alpha, "build_gradient_map");
    qp.validate();
    Eigen::SelfAdjointEigenSolver<Matrix> es(qp.hessian(), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff() + qp.eta;
    const double lmax = es.eigenvalues().maxCoeff() + qp.eta;
    const double L = std::max(std::abs(1.0 - alpha * lmin), std::abs(1.0 - alpha * lmax));

    MapFamily f;
    f.name = "qp-gradient";
    f.dimension = qp.agents();
    f.domain = DomainSpec::box(qp.lo, qp.hi);
    f.evaluator = [qp, alpha](const Vector& x, Tick t) -> Vector {
        const double y = qp.c.dot(x) + qp.w(t);
        const Vector grad = qp.a.cwiseProduct(x) + qp.gamma * (y - qp.r(t)) * qp.c + qp.eta * x;
        return clamp(x - alpha * grad, qp.lo, qp.hi);
    };
    f.declared_L = [L](Tick) { return L; };
    f.declared_L_sup = L;
    return f;
}

InexactMapFamily build_feedback_gradient_map(const TimeVaryingQP& qp, double alpha, double noise_bound,
                                             std::uint64_t seed, const NormSpec& norm, PerturbationMode mode) {
    if (!(noise_bound >= 0.0)) throw PreconditionFailed("build_feedback_gradient_map: noise_bound must be >= 0");
    InexactMapFamily out;
    out.base = build_gradient_map(qp, alpha);
    const ScalarSeries nu = noise_series(noise_bound, seed, mode);
    out.evaluator = [qp, alpha, nu](const Vector& x, Tick t) -> Vector {
        const double y_hat = qp.c.dot(x) + qp.w(t) + nu(t);
        const Vector grad = qp.a.cwiseProduct(x) + qp.gamma * (y_hat - qp.r(t)) * qp.c + qp.eta * x;
        return clamp(x - alpha * grad, qp.lo, qp.hi);
    };
    const double e_f = alpha * qp.gamma * norm(qp.c) * noise_bound;
    out.e_f_bound = [e_f](Tick) { return e_f; };
    out.e_f_sup = e_f;
    return out;
}

DependencyGraph star_partition(const TimeVaryingQP& qp) {
    const int n = qp.agents();
    if (n < 1) throw PreconditionFailed("star_partition: needs at least one agent");
    std::vector<DependencyGraph::Edge> edges;
    for (int i = 0; i < n; ++i) {
        edges.emplace_back(n, i);
        edges.emplace_back(i, n);
    }
    return DependencyGraph(BlockLayout{std::vector<int>(n + 1, 1)}, std::move(edges));
}

namespace {

Matrix star_jacobian(const TimeVaryingQP& qp, double alpha, double s) {
    const int n = qp.agents();
    Matrix J = Matrix::Zero(n + 1, n + 1);
    for (int i = 0; i < n; ++i) {
        J(i, i) = 1.0 - alpha * (qp.a(i) + qp.eta);
        J(i, n) = -alpha * qp.gamma * qp.c(i) / s;
        J(n, i) = s * qp.c(i);
    }
    return J;
}

double spectral_norm(const Matrix& J) { return Eigen::JacobiSVD<Matrix>(J).singularValues()(0); }

}  // namespace

StarFeedbackModel build_star_feedback_map(const TimeVaryingQP& qp, double alpha, double noise_bound,
                                          std::uint64_t seed, PerturbationMode mode) {
    checked_step(alpha, "build_star_feedback_map");
    qp.validate();
    if (!(noise_bound >= 0.0)) throw PreconditionFailed("build_star_feedback_map: noise_bound must be >= 0");
    const int n = qp.agents();

    // The clamp only touches agent coordinates and is nonexpansive, so the
    // spectral norm of the linear part bounds the l2 constant. Pick the
    // aggregator scale minimizing it (golden section in log s).
    auto cost = [&](double ls) { return spectral_norm(star_jacobian(qp, alpha, std::exp(ls))); };
    const double center = 0.5 * std::log(alpha * qp.gamma);
    double lo = center - 8.0, hi = center + 8.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = cost(x1), f2 = cost(x2);
    for (int k = 0; k < 200 && hi - lo > 1e-10; ++k) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = cost(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = cost(x2);
        }
    }
    const double s = std::exp(0.5 * (lo + hi));
    const double L = cost(std::log(s));
    if (!(L < 1.0))
        throw ContractionUncertified("star feedback map: best aggregator scaling gives l2 constant " +
                                     std::to_string(L) + " >= 1; reduce alpha or gamma");

    Vector lo_z(n + 1), hi_z(n + 1);
    lo_z << qp.lo, -std::numeric_limits<double>::infinity();
    hi_z << qp.hi, std::numeric_limits<double>::infinity();

    auto step = [qp, alpha, s, n](const Vector& z, Tick t, double nu) -> Vector {
        const Vector x = z.head(n);
        const double u = z(n);
        Vector out(n + 1);
        out.head(n) = clamp(x - alpha * ((qp.a.array() + qp.eta).matrix().cwiseProduct(x) + (qp.gamma / s) * u * qp.c),
                            qp.lo, qp.hi);
        out(n) = s * (qp.c.dot(x) + qp.w(t) + nu - qp.r(t));
        return out;
    };

    MapFamily f;
    f.name = "qp-star";
    f.dimension = n + 1;
    f.domain = DomainSpec::box(lo_z, hi_z);
    f.evaluator = [step](const Vector& z, Tick t) { return step(z, t, 0.0); };
    f.declared_L = [L](Tick) { return L; };
    f.declared_L_sup = L;

    InexactMapFamily map;
    map.base = std::move(f);
    const ScalarSeries nu = noise_series(noise_bound, seed, mode);
    map.evaluator = [step, nu](const Vector& z, Tick t) { return step(z, t, nu(t)); };
    const double e_f = s * noise_bound;
    map.e_f_bound = [e_f](Tick) { return e_f; };
    map.e_f_sup = e_f;
    return StarFeedbackModel{std::move(map), star_partition(qp), s};
}

double qp_stationarity(const TimeVaryingQP& qp, const Vector& x, Tick t) {
    const double y = qp.c.dot(x) + qp.w(t);
    const Vector grad = qp.a.cwiseProduct(x) + qp.gamma * (y - qp.r(t)) * qp.c + qp.eta * x;
    return (x - clamp(x - grad, qp.lo, qp.hi)).lpNorm<Eigen::Infinity>();
}

TimeVaryingQP random_qp(int agents, double gamma, double eta, std::uint64_t seed) {
    if (agents < 1) throw PreconditionFailed("random_qp: agents must be positive");
    auto rng = make_rng(seed, 0x9b00);
    std::uniform_real_distribution<double> ua(0.5, 2.0), uc(0.2, 1.0), uph(0.0, 2.0 * std::numbers::pi);
    TimeVaryingQP qp;
    qp.a.resize(agents);
    qp.c.resize(agents);
    for (int i = 0; i < agents; ++i) {
        qp.a(i) = ua(rng);
        qp.c(i) = uc(rng);
    }
    qp.gamma = gamma;
    qp.eta = eta;
    qp.lo = Vector::Constant(agents, -1.0);
    qp.hi = Vector::Constant(agents, 1.0);
    const double pw = uph(rng), pr = uph(rng);
    qp.w = [pw](Tick t) { return 0.5 * std::sin(0.01 * t + pw); };
    qp.r = [pr](Tick t) { return 1.0 + 0.5 * std::sin(0.007 * t + pr); };
    return qp;
}

}  // namespace tvfp
