#include "tvfp/norm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tvfp {

std::string_view to_string(NormKind kind) noexcept {
    return kind == NormKind::Inf ? "ell_inf" : "ell_2";
}

NormKind parse_norm_kind(std::string_view name) {
    if (name == "ell_inf" || name == "inf") return NormKind::Inf;
    if (name == "ell_2" || name == "l2" || name == "2") return NormKind::Two;
    throw ConfigError("unknown norm '" + std::string(name) + "' (expected ell_inf or ell_2)");
}

int BlockLayout::dimension() const { return std::accumulate(sizes.begin(), sizes.end(), 0); }

int BlockLayout::offset(int block) const {
    if (block < 0 || block >= count()) throw IndexOutOfRange("block index out of range");
    return std::accumulate(sizes.begin(), sizes.begin() + block, 0);
}

NormSpec::NormSpec(NormKind kind, BlockLayout blocks, std::vector<double> weights)
    : kind_(kind), blocks_(std::move(blocks)), weights_(std::move(weights)) {
    for (int s : blocks_->sizes)
        if (s <= 0) throw PreconditionFailed("block sizes must be positive");
    if (!weights_.empty()) {
        if (static_cast<int>(weights_.size()) != blocks_->count())
            throw LengthMismatch("one weight per block required");
        for (double w : weights_)
            if (!(w > 0.0) || !std::isfinite(w)) throw PreconditionFailed("block weights must be positive");
    }
}

double NormSpec::operator()(const Vector& x) const {
    if (blocks_ && blocks_->dimension() != x.size()) throw LengthMismatch("vector does not match block layout");
    if (!weighted()) {
        return kind_ == NormKind::Inf ? (x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0) : x.norm();
    }
    double acc = 0.0;
    int off = 0;
    for (int b = 0; b < blocks_->count(); ++b) {
        const int n = blocks_->sizes[b];
        const auto seg = x.segment(off, n);
        if (kind_ == NormKind::Inf) {
            acc = std::max(acc, weights_[b] * seg.lpNorm<Eigen::Infinity>());
        } else {
            acc += weights_[b] * weights_[b] * seg.squaredNorm();
        }
        off += n;
    }
    return kind_ == NormKind::Inf ? acc : std::sqrt(acc);
}

}  // namespace tvfp
