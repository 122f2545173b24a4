#include "tvfp/bounds.hpp"
#include "tvfp/core.hpp"
#include "tvfp/problems/affine.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tvfp;

namespace {

MapFamily scalar_map(std::function<double(double, Tick)> f, DomainSpec d, double L) {
    MapFamily m;
    m.name = "scalar";
    m.dimension = 1;
    m.domain = std::move(d);
    m.evaluator = [f](const Vector& x, Tick t) {
        Vector y(1);
        y(0) = f(x(0), t);
        return y;
    };
    m.declared_L = [L](Tick) { return L; };
    m.declared_L_sup = L;
    return m;
}

Vector v1(double a) { return Vector::Constant(1, a); }

DomainSpec unit_interval() { return DomainSpec::box(v1(0.0), v1(1.0)); }

}  // namespace

TEST(SolveFixedPoint, AffineScalar) {
    const auto f = scalar_map([](double x, Tick) { return 0.5 * x + 1.0; }, DomainSpec::all_space(1), 0.5);
    const auto r = solve_fixed_point(f, 1, v1(0.0), NormSpec::two());
    EXPECT_NEAR(r.x(0), 2.0, 2e-12);
    EXPECT_LE(r.residual, kReferenceTol);
}

TEST(SolveFixedPoint, ConstantMap) {
    const auto f = scalar_map([](double, Tick) { return 0.0; }, DomainSpec::all_space(1), 0.1);
    EXPECT_EQ(solve_fixed_point(f, 1, v1(7.0), NormSpec::two()).x(0), 0.0);
}

TEST(SolveFixedPoint, DottieNumber) {
    const auto f = scalar_map([](double x, Tick) { return std::cos(x); }, unit_interval(), std::sin(1.0));
    const double x = solve_fixed_point(f, 1, v1(0.5), NormSpec::two()).x(0);
    // Oracle: Newton's method on cos(x) - x.
    double z = 0.7;
    for (int k = 0; k < 50; ++k) z -= (std::cos(z) - z) / (-std::sin(z) - 1.0);
    EXPECT_NEAR(x, z, 1e-11);
    EXPECT_NEAR(x, 0.739085, 1e-6);
}

TEST(SolveFixedPoint, Errors) {
    const auto slow = scalar_map([](double x, Tick) { return 0.99 * x + 1.0; }, DomainSpec::all_space(1), 0.99);
    try {
        solve_fixed_point(slow, 3, v1(0.0), NormSpec::two(), 1e-12, 10);
        FAIL();
    } catch (const NonConvergence& e) {
        EXPECT_EQ(e.tick(), 3);
        EXPECT_GT(e.residual(), 1e-12);
    }
    const auto escape = scalar_map([](double x, Tick) { return x + 1.0; }, unit_interval(), 0.5);
    EXPECT_THROW(solve_fixed_point(escape, 1, v1(0.5), NormSpec::two()), DomainViolation);
    EXPECT_THROW(solve_fixed_point(escape, 1, v1(2.0), NormSpec::two()), DomainViolation);
}

TEST(SolveFixedPoint, LinearConvergenceEnvelope) {
    const auto prob = build_affine_family(6, NormKind::Two, 0.7, DriftSpec::constant(), 3);
    const auto r = solve_fixed_point(prob.family, 1, Vector::Zero(6), NormSpec::two(), 1e-12, kReferenceMaxIter, true);
    const double r0 = r.residual_history.front();
    for (std::size_t k = 0; k < r.residual_history.size(); ++k)
        EXPECT_LE(r.residual_history[k], std::pow(0.7, k) * r0 * (1.0 + 0.7) / (1.0 - 0.7) + 1e-15);
    // Closed-form agreement within tol / (1 - L).
    EXPECT_LE((r.x - prob.family.closed_form_fixed_point(1)).norm(), 1e-12 / 0.3 + 1e-15);
}

TEST(OnlineTracker, StaticGeometricDecay) {
    const auto f = scalar_map([](double x, Tick) { return 0.5 * x + 1.0; }, DomainSpec::all_space(1), 0.5);
    const auto tr = run_online_tracker(InexactMapFamily::exact(f), v1(0.0), 30, NormSpec::two());
    ASSERT_EQ(tr.errors.size(), 30u);
    for (int t = 1; t <= 30; ++t) EXPECT_NEAR(tr.errors[t - 1], 2.0 * std::pow(0.5, t - 1), 1e-11);
    for (double s : tr.reference.sigma_series) EXPECT_EQ(s, 0.0);
}

TEST(OnlineTracker, DriftingScalarReachesBound) {
    const auto f = scalar_map([](double x, Tick t) { return 0.5 * x + 0.5 * (0.1 * t); }, DomainSpec::all_space(1), 0.5);
    const auto tr = run_online_tracker(InexactMapFamily::exact(f), v1(0.0), 200, NormSpec::two());
    for (double s : tr.reference.sigma_series) EXPECT_NEAR(s, 0.1, 1e-10);
    // Error recursion e(t+1) = 0.5 e(t) + 0.1 from e(1) = 0.1 (x* = 0.1 t).
    double e = 0.1;
    for (int t = 1; t <= 200; ++t) {
        EXPECT_NEAR(tr.errors[t - 1], e, 1e-9);
        e = 0.5 * e + 0.1;
    }
    EXPECT_NEAR(tr.errors.back(), 0.2, 1e-9);
}

TEST(OnlineTracker, InexactStaticStaysWithinTwiceEf) {
    const auto f = scalar_map([](double x, Tick) { return 0.5 * x + 1.0; }, DomainSpec::all_space(1), 0.5);
    const auto g = with_additive_perturbation(f, PerturbationMode::ConstantOffset, [](Tick) { return 0.01; }, 0.01,
                                              NormSpec::two(), 1);
    const auto tr = run_online_tracker(g, v1(0.0), 1000, NormSpec::two());
    EXPECT_LE(tail_max(tr.errors, tail_window(1000)), 0.02 + 1e-9);
    EXPECT_NEAR(tr.errors.back(), 0.02, 1e-9);
}

TEST(OnlineTracker, PerIterateBoundHolds) {
    auto drift = DriftSpec::random_walk(0.05, 300);
    const auto prob = build_affine_family(5, NormKind::Inf, 0.6, drift, 11);
    const auto map = with_additive_perturbation(prob.family, PerturbationMode::UniformBall, [](Tick) { return 0.02; },
                                                0.02, NormSpec::inf(), 5);
    const auto tr = run_online_tracker(map, Vector::Zero(5), 300, NormSpec::inf(), 5);
    const auto b = per_iterate_bound_series(tr.errors[0], tr.e_f_series, tr.reference.sigma_series, tr.L_series, 300);
    for (int k = 0; k < 300; ++k) EXPECT_LE(tr.errors[k], b[k] + 1e-9);
}

TEST(OnlineTracker, ZeroDriftReduction) {
    const auto prob = build_affine_family(4, NormKind::Two, 0.8, DriftSpec::constant(), 2);
    const auto tr = run_online_tracker(InexactMapFamily::exact(prob.family), Vector::Constant(4, 5.0), 60, NormSpec::two());
    for (int t = 1; t <= 60; ++t) EXPECT_LE(tr.errors[t - 1], std::pow(0.8, t - 1) * tr.errors[0] + 1e-12);
}

TEST(OnlineTracker, HorizonOneAndDeterminism) {
    const auto prob = build_affine_family(3, NormKind::Two, 0.5, DriftSpec::linear(0.1), 2);
    const auto map = with_additive_perturbation(prob.family, PerturbationMode::UniformBall, [](Tick) { return 0.1; },
                                                0.1, NormSpec::two(), 8);
    const auto one = run_online_tracker(map, Vector::Zero(3), 1, NormSpec::two());
    EXPECT_EQ(one.errors.size(), 1u);
    const auto a = run_online_tracker(map, Vector::Zero(3), 100, NormSpec::two());
    const auto b = run_online_tracker(map, Vector::Zero(3), 100, NormSpec::two());
    EXPECT_EQ(a.errors, b.errors);
}

TEST(FixedPointSeries, RandomWalkDriftMatchesLinearSolve) {
    const auto prob = build_affine_family(4, NormKind::Two, 0.5, DriftSpec::random_walk(0.1, 50), 5);
    const auto s = compute_fixed_point_series(prob.family, 50, NormSpec::two());
    const Matrix inv = (Matrix::Identity(4, 4) - prob.A).inverse();
    for (int t = 1; t < 50; ++t) {
        EXPECT_LE(s.residuals[t - 1], kReferenceTol);
        EXPECT_NEAR(s.sigma_series[t - 1], (inv * (prob.b(t + 1) - prob.b(t))).norm(), 1e-10);
    }
}

TEST(Lipschitz, LinearMaps) {
    const auto half = scalar_map([](double x, Tick) { return 0.5 * x; }, DomainSpec::all_space(1), 0.5);
    DomainSampler s(half.domain, 1);
    EXPECT_NEAR(estimate_lipschitz(half, 1, s, 100, NormSpec::two()).value, 0.5, 1e-12);

    Matrix A(2, 2);
    A << 0.3, 0.2, 0.0, 0.4;
    MapFamily f;
    f.name = "A";
    f.dimension = 2;
    f.domain = DomainSpec::all_space(2);
    f.evaluator = [A](const Vector& x, Tick) { return Vector(A * x); };
    f.declared_L = [](Tick) { return 0.5; };
    f.declared_L_sup = 0.5;
    const double smax = Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
    DomainSampler s2(f.domain, 2);
    const auto est = estimate_lipschitz(f, 1, s2, 20000, NormSpec::two());
    EXPECT_LE(est.value, smax + 1e-12);
    EXPECT_GE(est.value, 0.98 * smax);

    const auto c = scalar_map([](double x, Tick) { return std::cos(x); }, unit_interval(), std::sin(1.0));
    DomainSampler s3(c.domain, 3);
    EXPECT_LE(estimate_lipschitz(c, 1, s3, 10000, NormSpec::two()).value, std::sin(1.0) + 1e-9);
}

TEST(Lipschitz, DegenerateDomainFlagsInsufficientSampling) {
    const auto f = scalar_map([](double x, Tick) { return 0.5 * x; }, DomainSpec::box(v1(1.0), v1(1.0)), 0.5);
    DomainSampler s(f.domain, 1);
    const auto est = estimate_lipschitz(f, 1, s, 10, NormSpec::two());
    EXPECT_EQ(est.value, 0.0);
    EXPECT_TRUE(est.insufficient_sampling);
}

TEST(SelfMap, BallAndBox) {
    const auto half = scalar_map([](double x, Tick) { return 0.5 * x; }, DomainSpec::ball(v1(0.0), 1.0), 0.5);
    DomainSampler s(half.domain, 1);
    EXPECT_TRUE(verify_self_map(half, 1, s, 1000).ok);
    const auto shift = scalar_map([](double x, Tick) { return x + 1.0; }, unit_interval(), 0.5);
    DomainSampler s2(shift.domain, 1);
    const auto chk = verify_self_map(shift, 1, s2, 10);
    EXPECT_FALSE(chk.ok);
    ASSERT_TRUE(chk.counterexample.has_value());
    EXPECT_DOUBLE_EQ((*chk.counterexample)(0), 0.5);  // the anchor is probed first
}

TEST(TrackingError, Basics) {
    std::vector<Vector> a{Vector::Zero(2), Vector::Ones(2)};
    EXPECT_EQ(tracking_error(a, a, NormSpec::inf()), (std::vector<double>{0.0, 0.0}));
    std::vector<Vector> b{a[0] + Vector::Constant(2, 0.3), a[1] + Vector::Constant(2, 0.3)};
    for (double e : tracking_error(b, a, NormSpec::inf())) EXPECT_NEAR(e, 0.3, 1e-15);
    std::vector<Vector> c{Vector::Zero(2)};
    EXPECT_THROW(tracking_error(c, a, NormSpec::inf()), LengthMismatch);

    auto rng = make_rng(1);
    std::normal_distribution<double> g;
    Vector x(4), y(4);
    for (int i = 0; i < 4; ++i) {
        x(i) = g(rng);
        y(i) = g(rng);
    }
    double ss = 0.0;
    for (int i = 0; i < 4; ++i) ss += (x(i) - y(i)) * (x(i) - y(i));
    std::vector<Vector> xs{x}, ys{y};
    EXPECT_NEAR(tracking_error(xs, ys, NormSpec::two())[0], std::sqrt(ss), 1e-15);
}

TEST(TailWindow, CoversLastTenPercent) {
    const auto w = tail_window(1000);
    EXPECT_EQ(w.first, 900);
    EXPECT_EQ(w.last, 1000);
    EXPECT_EQ(tail_window(1000, 0.1, 950).first, 950);
    std::vector<double> e(10, 0.0);
    e[9] = 2.0;
    e[0] = 5.0;
    EXPECT_EQ(tail_max(e, tail_window(10)), 2.0);
}
