#include "tvfp/problems/affine.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

namespace tvfp {

AffinePattern parse_affine_pattern(const std::string& name) {
    if (name == "dense") return AffinePattern::Dense;
    if (name == "tridiagonal") return AffinePattern::Tridiagonal;
    if (name == "diagonal") return AffinePattern::Diagonal;
    throw ConfigError("unknown affine pattern '" + name + "' (expected dense, tridiagonal or diagonal)");
}

DriftSpec::Kind parse_drift_kind(const std::string& name) {
    if (name == "constant") return DriftSpec::Kind::Constant;
    if (name == "linear") return DriftSpec::Kind::Linear;
    if (name == "random_walk") return DriftSpec::Kind::RandomWalk;
    if (name == "piecewise") return DriftSpec::Kind::Piecewise;
    throw ConfigError("unknown drift kind '" + name + "'");
}

DriftSpec DriftSpec::linear(double sigma) {
    DriftSpec d;
    d.kind = Kind::Linear;
    d.sigma = sigma;
    return d;
}

DriftSpec DriftSpec::random_walk(double step_bound, int horizon) {
    DriftSpec d;
    d.kind = Kind::RandomWalk;
    d.step_bound = step_bound;
    d.horizon = horizon;
    return d;
}

DriftSpec DriftSpec::piecewise(double sigma, int fast_start, int fast_end, double fast_factor) {
    DriftSpec d;
    d.kind = Kind::Piecewise;
    d.sigma = sigma;
    d.fast_start = fast_start;
    d.fast_end = fast_end;
    d.fast_factor = fast_factor;
    return d;
}

namespace {

Matrix random_matrix(int m, AffinePattern pattern, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix A = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const bool keep = pattern == AffinePattern::Dense ||
                              (pattern == AffinePattern::Tridiagonal && std::abs(i - j) <= 1) || i == j;
            const double v = u(rng);
            if (keep) A(i, j) = v;
        }
    return A;
}

void scale_to_norm(Matrix& A, NormKind norm, double target_L) {
    if (norm == NormKind::Inf) {
        for (int i = 0; i < A.rows(); ++i) {
            const double s = A.row(i).lpNorm<1>();
            if (s > 0.0) A.row(i) *= target_L / s;
        }
    } else {
        Eigen::JacobiSVD<Matrix> svd(A);
        A *= target_L / svd.singularValues()(0);
    }
}

}  // namespace

AffineProblem build_affine_family(int m, NormKind norm, double target_L, const DriftSpec& drift,
                                  std::uint64_t seed, AffinePattern pattern) {
    if (m < 1) throw PreconditionFailed("build_affine_family: m must be positive");
    if (!(target_L > 0.0 && target_L < 1.0)) throw PreconditionFailed("build_affine_family: target_L must lie in (0, 1)");

    auto rng = make_rng(seed, 0xaff1);
    Matrix A = random_matrix(m, pattern, rng);
    scale_to_norm(A, norm, target_L);

    const NormSpec ns(norm);
    const auto lu = std::make_shared<const Eigen::PartialPivLU<Matrix>>(Matrix::Identity(m, m) - A);

    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector b0 = drift.b0;
    if (b0.size() == 0) {
        b0.resize(m);
        for (int i = 0; i < m; ++i) b0(i) = u(rng);
    }
    if (b0.size() != m) throw LengthMismatch("build_affine_family: b0 has the wrong length");

    auto slope = [&]() -> Vector {
        if (drift.delta.size() != 0) {
            if (drift.delta.size() != m) throw LengthMismatch("build_affine_family: delta has the wrong length");
            return drift.delta;
        }
        if (drift.sigma < 0.0) throw PreconditionFailed("build_affine_family: sigma must be nonnegative");
        Vector d(m);
        for (int i = 0; i < m; ++i) d(i) = u(rng);
        d *= drift.sigma / ns(d);
        return (Matrix::Identity(m, m) - A) * d;  // x* moves by d
    };

    VectorSeries b;
    switch (drift.kind) {
    case DriftSpec::Kind::Constant:
        b = [b0](Tick) { return b0; };
        break;
    case DriftSpec::Kind::Linear: {
        const Vector d = slope();
        b = [b0, d](Tick t) -> Vector { return b0 + static_cast<double>(t) * d; };
        break;
    }
    case DriftSpec::Kind::Piecewise: {
        const Vector d = slope();
        if (drift.fast_start > drift.fast_end || drift.fast_factor < 0.0)
            throw PreconditionFailed("build_affine_family: bad fast segment");
        const int s0 = drift.fast_start, s1 = drift.fast_end;
        const double k = drift.fast_factor;
        b = [b0, d, s0, s1, k](Tick t) -> Vector {
            // Sum over ticks 1..t-1 of the slope multiplier.
            const int fast = std::max(0, std::min(t, s1) - std::max(1, s0));
            return b0 + (static_cast<double>(t - 1) + (k - 1.0) * fast) * d;
        };
        break;
    }
    case DriftSpec::Kind::RandomWalk: {
        if (drift.horizon < 1 || drift.step_bound < 0.0)
            throw PreconditionFailed("build_affine_family: random walk needs horizon >= 1 and step_bound >= 0");
        auto path = std::make_shared<std::vector<Vector>>();
        path->push_back(b0);
        auto walk = make_rng(seed, 0xaff2);
        for (int t = 2; t <= drift.horizon; ++t)
            path->push_back(path->back() + sample_norm_ball(ns, m, drift.step_bound, walk));
        b = [path](Tick t) -> Vector {
            const auto k = static_cast<std::size_t>(std::clamp<Tick>(t, 1, static_cast<Tick>(path->size())));
            return (*path)[k - 1];
        };
        break;
    }
    }

    AffineProblem out;
    out.A = A;
    out.b = b;
    MapFamily& f = out.family;
    f.name = "affine";
    f.dimension = m;
    f.domain = DomainSpec::all_space(m);
    f.evaluator = [A, b](const Vector& x, Tick t) -> Vector { return A * x + b(t); };
    f.declared_L = [target_L](Tick) { return target_L; };
    f.declared_L_sup = target_L;
    std::vector<double> rows(m);
    for (int i = 0; i < m; ++i) rows[i] = norm == NormKind::Inf ? A.row(i).lpNorm<1>() : A.row(i).norm();
    f.block_L = rows;
    f.closed_form_fixed_point = [lu, b](Tick t) -> Vector { return lu->solve(b(t)); };
    return out;
}

}  // namespace tvfp
