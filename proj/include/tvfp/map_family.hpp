#pragma once

#include "tvfp/common.hpp"
#include "tvfp/domain.hpp"
#include "tvfp/norm.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tvfp {

using Evaluator = std::function<Vector(const Vector&, Tick)>;
using ScalarSeries = std::function<double(Tick)>;
using VectorSeries = std::function<Vector(Tick)>;

/// A time-indexed family of self-maps f^(t) on `domain`, each a contraction
/// with constant declared_L(t) <= declared_L_sup < 1 under the experiment
/// norm. Declared constants are trusted inputs; the audits in core.hpp check
/// them against sampling.
struct MapFamily {
    std::string name;
    int dimension = 0;
    DomainSpec domain;
    Evaluator evaluator;
    ScalarSeries declared_L;
    double declared_L_sup = 0.0;
    /// Per-agent constants, only used by the l2 asynchronous analysis.
    std::optional<std::vector<double>> block_L;
    /// Exact fixed point of f^(t), when one is available in closed form.
    VectorSeries closed_form_fixed_point;

    Vector operator()(const Vector& x, Tick t) const { return evaluator(x, t); }
    bool has_closed_form() const noexcept { return static_cast<bool>(closed_form_fixed_point); }

    /// Throws PreconditionFailed when the declaration is structurally unusable.
    void validate() const;
};

/// f~^(t): an approximation of f^(t) with |f~(x) - f(x)| <= e_f_bound(t).
struct InexactMapFamily {
    MapFamily base;
    Evaluator evaluator;
    ScalarSeries e_f_bound;
    double e_f_sup = 0.0;

    Vector operator()(const Vector& x, Tick t) const { return evaluator(x, t); }
    int dimension() const noexcept { return base.dimension; }
    const DomainSpec& domain() const noexcept { return base.domain; }

    /// f~ = f, e_f = 0.
    static InexactMapFamily exact(MapFamily base);
};

enum class PerturbationMode {
    /// Uniform on the norm ball of radius e_f_bound(t), redrawn every tick.
    UniformBall,
    /// A fixed unit direction scaled to e_f_bound(t); makes bounds near tight.
    ConstantOffset,
};

PerturbationMode parse_perturbation_mode(const std::string& name);

/// f~^(t)(x) = Proj_D(f^(t)(x) + p^(t)) with p^(t) drawn from `seed` and t
/// only, so f~ is a pure function of (x, t). Projection is nonexpansive and
/// f(x) is already in D, so the e_f bound survives the repair.
InexactMapFamily with_additive_perturbation(MapFamily base, PerturbationMode mode,
                                            ScalarSeries bound, double bound_sup,
                                            const NormSpec& norm, std::uint64_t seed);

/// A draw from the `norm` ball of radius `radius` (weighted norms included).
Vector sample_norm_ball(const NormSpec& norm, int dimension, double radius, std::mt19937_64& rng);

}  // namespace tvfp
