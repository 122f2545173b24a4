#pragma once

#include "tvfp/common.hpp"
#include "tvfp/norm.hpp"

#include <cstdint>

namespace tvfp {

/// Closed set on which a map family is a self-map: all of R^m, a box, or a
/// ball (Euclidean or max-norm) around a center.
class DomainSpec {
public:
    enum class Kind { AllSpace, Box, Ball };

    static DomainSpec all_space(int dimension);
    /// Bounds may be infinite; lo <= hi is required componentwise.
    static DomainSpec box(Vector lo, Vector hi);
    static DomainSpec ball(Vector center, double radius, NormKind norm = NormKind::Two);

    Kind kind() const noexcept { return kind_; }
    int dimension() const noexcept { return dim_; }
    const Vector& lo() const noexcept { return lo_; }
    const Vector& hi() const noexcept { return hi_; }
    const Vector& center() const noexcept { return center_; }
    double radius() const noexcept { return radius_; }
    NormKind ball_norm() const noexcept { return ball_norm_; }

    /// Membership with an absolute slack that absorbs rounding on the boundary.
    bool contains(const Vector& x, double slack = 1e-12) const;

    /// Nearest point in the set (Euclidean projection; for boxes and max-norm
    /// balls this is componentwise clamping).
    Vector project(const Vector& x) const;

    /// A representative interior point: box midpoint (finite components),
    /// ball center, or the origin.
    Vector anchor() const;

    /// True for sets that are Cartesian products of per-coordinate sets, so
    /// assembling coordinates from different members stays inside the set.
    bool is_product() const noexcept { return kind_ != Kind::Ball || ball_norm_ == NormKind::Inf; }

private:
    Kind kind_ = Kind::AllSpace;
    int dim_ = 0;
    Vector lo_, hi_, center_;
    double radius_ = 0.0;
    NormKind ball_norm_ = NormKind::Two;
};

/// Seeded sampler over a domain. Unbounded coordinates are drawn from
/// [-unbounded_radius, unbounded_radius] around the anchor. The first point
/// of every fresh sampler is the anchor itself.
class DomainSampler {
public:
    DomainSampler(const DomainSpec& domain, std::uint64_t seed, double unbounded_radius = 10.0);

    Vector next();
    /// A point near x (relative scale `scale` of the sampling extent), kept
    /// inside the domain.
    Vector near(const Vector& x, double scale);

private:
    Vector uniform_point();

    DomainSpec domain_;
    std::mt19937_64 rng_;
    double unbounded_radius_;
    bool anchor_pending_ = true;
};

}  // namespace tvfp
