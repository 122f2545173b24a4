#include "tvfp/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tvfp {

DomainSpec DomainSpec::all_space(int dimension) {
    if (dimension <= 0) throw PreconditionFailed("dimension must be positive");
    DomainSpec d;
    d.kind_ = Kind::AllSpace;
    d.dim_ = dimension;
    return d;
}

DomainSpec DomainSpec::box(Vector lo, Vector hi) {
    if (lo.size() == 0 || lo.size() != hi.size()) throw LengthMismatch("box bounds must have equal positive length");
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > hi[i])
            throw PreconditionFailed("box requires lo <= hi componentwise");
    }
    DomainSpec d;
    d.kind_ = Kind::Box;
    d.dim_ = static_cast<int>(lo.size());
    d.lo_ = std::move(lo);
    d.hi_ = std::move(hi);
    return d;
}

DomainSpec DomainSpec::ball(Vector center, double radius, NormKind norm) {
    if (center.size() == 0) throw PreconditionFailed("ball center must be nonempty");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw PreconditionFailed("ball radius must be positive");
    DomainSpec d;
    d.kind_ = Kind::Ball;
    d.dim_ = static_cast<int>(center.size());
    d.center_ = std::move(center);
    d.radius_ = radius;
    d.ball_norm_ = norm;
    return d;
}

bool DomainSpec::contains(const Vector& x, double slack) const {
    if (x.size() != dim_) return false;
    if (!x.allFinite()) return false;
    switch (kind_) {
        case Kind::AllSpace:
            return true;
        case Kind::Box:
            for (Eigen::Index i = 0; i < x.size(); ++i)
                if (x[i] < lo_[i] - slack || x[i] > hi_[i] + slack) return false;
            return true;
        case Kind::Ball: {
            const Vector d = x - center_;
            const double r = ball_norm_ == NormKind::Inf ? d.lpNorm<Eigen::Infinity>() : d.norm();
            return r <= radius_ + slack;
        }
    }
    return false;
}

Vector DomainSpec::project(const Vector& x) const {
    if (x.size() != dim_) throw LengthMismatch("projection input has wrong dimension");
    switch (kind_) {
        case Kind::AllSpace:
            return x;
        case Kind::Box:
            return x.cwiseMax(lo_).cwiseMin(hi_);
        case Kind::Ball: {
            if (ball_norm_ == NormKind::Inf) {
                return x.cwiseMax((center_.array() - radius_).matrix()).cwiseMin((center_.array() + radius_).matrix());
            }
            const Vector d = x - center_;
            const double n = d.norm();
            if (n <= radius_) return x;
            return center_ + d * (radius_ / n);
        }
    }
    return x;
}

Vector DomainSpec::anchor() const {
    switch (kind_) {
        case Kind::AllSpace:
            return Vector::Zero(dim_);
        case Kind::Box: {
            Vector a(dim_);
            for (int i = 0; i < dim_; ++i) {
                const bool flo = std::isfinite(lo_[i]), fhi = std::isfinite(hi_[i]);
                if (flo && fhi) a[i] = 0.5 * (lo_[i] + hi_[i]);
                else if (flo) a[i] = lo_[i];
                else if (fhi) a[i] = hi_[i];
                else a[i] = 0.0;
            }
            return a;
        }
        case Kind::Ball:
            return center_;
    }
    return Vector::Zero(dim_);
}

DomainSampler::DomainSampler(const DomainSpec& domain, std::uint64_t seed, double unbounded_radius)
    : domain_(domain), rng_(make_rng(seed, 0x5a3d)), unbounded_radius_(unbounded_radius) {
    if (!(unbounded_radius > 0.0)) throw PreconditionFailed("sampling radius must be positive");
}

Vector DomainSampler::uniform_point() {
    const int m = domain_.dimension();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector x(m);
    switch (domain_.kind()) {
        case DomainSpec::Kind::AllSpace:
            for (int i = 0; i < m; ++i) x[i] = unbounded_radius_ * (2.0 * u(rng_) - 1.0);
            return x;
        case DomainSpec::Kind::Box: {
            const Vector a = domain_.anchor();
            for (int i = 0; i < m; ++i) {
                double lo = domain_.lo()[i], hi = domain_.hi()[i];
                if (!std::isfinite(lo)) lo = std::min(a[i], hi) - unbounded_radius_;
                if (!std::isfinite(hi)) hi = std::max(a[i], lo) + unbounded_radius_;
                x[i] = lo + (hi - lo) * u(rng_);
            }
            return x;
        }
        case DomainSpec::Kind::Ball: {
            const double r = domain_.radius();
            if (domain_.ball_norm() == NormKind::Inf) {
                for (int i = 0; i < m; ++i) x[i] = domain_.center()[i] + r * (2.0 * u(rng_) - 1.0);
                return x;
            }
            std::normal_distribution<double> g(0.0, 1.0);
            Vector dir(m);
            double n = 0.0;
            while (n == 0.0) {
                for (int i = 0; i < m; ++i) dir[i] = g(rng_);
                n = dir.norm();
            }
            const double rad = r * std::pow(u(rng_), 1.0 / m);
            return domain_.center() + dir * (rad / n);
        }
    }
    return x;
}

Vector DomainSampler::next() {
    if (anchor_pending_) {
        anchor_pending_ = false;
        return domain_.anchor();
    }
    return uniform_point();
}

Vector DomainSampler::near(const Vector& x, double scale) {
    const int m = domain_.dimension();
    double extent = unbounded_radius_;
    if (domain_.kind() == DomainSpec::Kind::Ball) extent = domain_.radius();
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector y(m);
    for (int i = 0; i < m; ++i) {
        double e = extent;
        if (domain_.kind() == DomainSpec::Kind::Box) {
            const double w = domain_.hi()[i] - domain_.lo()[i];
            if (std::isfinite(w)) e = w;
        }
        y[i] = x[i] + scale * e * u(rng_);
    }
    return domain_.project(y);
}

}  // namespace tvfp
