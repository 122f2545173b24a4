#include "tvfp/domain.hpp"
#include "tvfp/map_family.hpp"
#include "tvfp/norm.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tvfp;

TEST(Norm, FlatNorms) {
    Vector x(3);
    x << 3.0, -4.0, 0.0;
    EXPECT_DOUBLE_EQ(NormSpec::inf()(x), 4.0);
    EXPECT_DOUBLE_EQ(NormSpec::two()(x), 5.0);
}

TEST(Norm, WeightedBlockNorms) {
    Vector x(4);
    x << 1.0, -2.0, 3.0, 0.5;
    const BlockLayout blocks{{2, 2}};
    const NormSpec inf(NormKind::Inf, blocks, {1.0, 0.5});
    EXPECT_DOUBLE_EQ(inf(x), std::max(2.0, 0.5 * 3.0));
    const NormSpec two(NormKind::Two, blocks, {2.0, 1.0});
    EXPECT_DOUBLE_EQ(two(x), std::sqrt(4.0 * 5.0 + 9.25));
}

TEST(Norm, RejectsBadLayouts) {
    EXPECT_THROW(NormSpec(NormKind::Inf, BlockLayout{{2, 0}}), PreconditionFailed);
    EXPECT_THROW(NormSpec(NormKind::Inf, BlockLayout{{2, 2}}, {1.0}), LengthMismatch);
    EXPECT_THROW(NormSpec(NormKind::Inf, BlockLayout{{1}}, {-1.0}), PreconditionFailed);
    const NormSpec n(NormKind::Inf, BlockLayout{{2}});
    EXPECT_THROW(n(Vector::Zero(3)), LengthMismatch);
}

TEST(Norm, ParseNames) {
    EXPECT_EQ(parse_norm_kind("ell_inf"), NormKind::Inf);
    EXPECT_EQ(parse_norm_kind("ell_2"), NormKind::Two);
    EXPECT_EQ(to_string(NormKind::Inf), "ell_inf");
    EXPECT_THROW(parse_norm_kind("ell_1"), ConfigError);
}

TEST(Domain, BoxMembershipAndProjection) {
    Vector lo(2), hi(2);
    lo << 0.0, -1.0;
    hi << 1.0, 1.0;
    const auto box = DomainSpec::box(lo, hi);
    Vector x(2);
    x << 2.0, -3.0;
    EXPECT_FALSE(box.contains(x));
    const Vector p = box.project(x);
    EXPECT_DOUBLE_EQ(p(0), 1.0);
    EXPECT_DOUBLE_EQ(p(1), -1.0);
    EXPECT_TRUE(box.contains(p));
    EXPECT_THROW(DomainSpec::box(hi, lo), PreconditionFailed);
}

TEST(Domain, BallProjection) {
    const auto ball = DomainSpec::ball(Vector::Zero(2), 1.0);
    Vector x(2);
    x << 3.0, 4.0;
    const Vector p = ball.project(x);
    EXPECT_NEAR(p.norm(), 1.0, 1e-15);
    EXPECT_NEAR(p(0), 0.6, 1e-15);
    EXPECT_THROW(DomainSpec::ball(Vector::Zero(2), 0.0), PreconditionFailed);
    const auto cube = DomainSpec::ball(Vector::Zero(2), 1.0, NormKind::Inf);
    EXPECT_TRUE(cube.contains(Vector::Constant(2, 0.99)));
    EXPECT_TRUE(cube.is_product());
    EXPECT_FALSE(ball.is_product());
}

TEST(Domain, ProjectionIsIdempotentAndNonexpansive) {
    Vector lo = Vector::Constant(5, -1.0), hi = Vector::Constant(5, 0.5);
    const auto box = DomainSpec::box(lo, hi);
    auto rng = make_rng(3);
    std::normal_distribution<double> g(0.0, 2.0);
    for (int k = 0; k < 1000; ++k) {
        Vector u(5), v(5);
        for (int i = 0; i < 5; ++i) {
            u(i) = g(rng);
            v(i) = g(rng);
        }
        const Vector pu = box.project(u), pv = box.project(v);
        EXPECT_EQ(box.project(pu), pu);
        EXPECT_LE((pu - pv).norm(), (u - v).norm() + 1e-15);
    }
}

TEST(Domain, SamplerStaysInsideAndStartsAtAnchor) {
    const auto ball = DomainSpec::ball(Vector::Constant(3, 1.0), 0.5);
    DomainSampler s(ball, 9);
    EXPECT_EQ(s.next(), ball.anchor());
    for (int k = 0; k < 2000; ++k) EXPECT_TRUE(ball.contains(s.next()));
    DomainSampler a(ball, 9), b(ball, 9);
    for (int k = 0; k < 10; ++k) EXPECT_EQ(a.next(), b.next());
}

TEST(Perturbation, UniformStaysWithinBoundAndIsPure) {
    MapFamily f;
    f.name = "half";
    f.dimension = 3;
    f.domain = DomainSpec::all_space(3);
    f.evaluator = [](const Vector& x, Tick) { return Vector(0.5 * x); };
    f.declared_L = [](Tick) { return 0.5; };
    f.declared_L_sup = 0.5;
    const NormSpec n = NormSpec::inf();
    const auto g = with_additive_perturbation(f, PerturbationMode::UniformBall, [](Tick) { return 0.1; }, 0.1, n, 4);
    Vector x = Vector::Ones(3);
    for (Tick t = 1; t < 200; ++t) EXPECT_LE(n(g(x, t) - f(x, t)), 0.1 + 1e-15);
    EXPECT_EQ(g(x, 17), g(x, 17));
    const auto c = with_additive_perturbation(f, PerturbationMode::ConstantOffset, [](Tick) { return 0.1; }, 0.1, n, 4);
    EXPECT_NEAR(n(c(x, 5) - f(x, 5)), 0.1, 1e-15);
}
