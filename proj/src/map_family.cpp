#include "tvfp/map_family.hpp"

#include <cmath>
#include <memory>
#include <mutex>

namespace tvfp {

void MapFamily::validate() const {
    if (dimension <= 0) throw PreconditionFailed(name + ": dimension must be positive");
    if (domain.dimension() != dimension) throw LengthMismatch(name + ": domain dimension mismatch");
    if (!evaluator) throw PreconditionFailed(name + ": missing evaluator");
    if (!declared_L) throw PreconditionFailed(name + ": missing declared_L");
    if (!(declared_L_sup >= 0.0 && declared_L_sup < 1.0))
        throw PreconditionFailed(name + ": declared contraction constant must lie in [0, 1)");
}

InexactMapFamily InexactMapFamily::exact(MapFamily base) {
    InexactMapFamily f;
    f.evaluator = base.evaluator;
    f.e_f_bound = [](Tick) { return 0.0; };
    f.e_f_sup = 0.0;
    f.base = std::move(base);
    return f;
}

PerturbationMode parse_perturbation_mode(const std::string& name) {
    if (name == "uniform") return PerturbationMode::UniformBall;
    if (name == "constant") return PerturbationMode::ConstantOffset;
    throw ConfigError("unknown perturbation mode '" + name + "' (expected uniform or constant)");
}

Vector sample_norm_ball(const NormSpec& norm, int dimension, double radius, std::mt19937_64& rng) {
    Vector p(dimension);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (norm.kind() == NormKind::Inf) {
        for (int i = 0; i < dimension; ++i) p[i] = radius * (2.0 * u(rng) - 1.0);
    } else {
        std::normal_distribution<double> g(0.0, 1.0);
        double n = 0.0;
        while (n == 0.0) {
            for (int i = 0; i < dimension; ++i) p[i] = g(rng);
            n = p.norm();
        }
        p *= radius * std::pow(u(rng), 1.0 / dimension) / n;
    }
    if (norm.weighted()) {
        const auto& blocks = *norm.blocks();
        int off = 0;
        for (int b = 0; b < blocks.count(); ++b) {
            p.segment(off, blocks.sizes[b]) /= norm.weights()[b];
            off += blocks.sizes[b];
        }
    }
    return p;
}

namespace {

Vector unit_direction(const NormSpec& norm, int dimension) {
    Vector d = Vector::Ones(dimension);
    return d / norm(d);
}

}  // namespace

InexactMapFamily with_additive_perturbation(MapFamily base, PerturbationMode mode,
                                            ScalarSeries bound, double bound_sup,
                                            const NormSpec& norm, std::uint64_t seed) {
    if (!(bound_sup >= 0.0)) throw PreconditionFailed("perturbation bound must be nonnegative");
    InexactMapFamily f;
    const int m = base.dimension;
    Evaluator exact = base.evaluator;
    DomainSpec domain = base.domain;
    if (mode == PerturbationMode::ConstantOffset) {
        const Vector dir = unit_direction(norm, m);
        f.evaluator = [exact, domain, dir, bound](const Vector& x, Tick t) -> Vector {
            return domain.project(exact(x, t) + bound(t) * dir);
        };
    } else {
        // The draw depends on t only; keep the last one, since evaluations
        // cluster by tick and seeding the generator dominates the cost.
        struct LastDraw {
            std::mutex lock;
            Tick t = 0;
            bool valid = false;
            Vector p;
        };
        auto cache = std::make_shared<LastDraw>();
        f.evaluator = [exact, domain, norm, bound, seed, m, cache](const Vector& x, Tick t) -> Vector {
            Vector p;
            {
                std::lock_guard<std::mutex> g(cache->lock);
                if (!cache->valid || cache->t != t) {
                    auto rng = make_rng(seed, 0x9e11, static_cast<std::uint64_t>(t));
                    cache->p = sample_norm_ball(norm, m, bound(t), rng);
                    cache->t = t;
                    cache->valid = true;
                }
                p = cache->p;
            }
            return domain.project(exact(x, t) + p);
        };
    }
    f.e_f_bound = std::move(bound);
    f.e_f_sup = bound_sup;
    f.base = std::move(base);
    return f;
}

}  // namespace tvfp
