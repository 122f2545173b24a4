#pragma once

#include "tvfp/common.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tvfp {

enum class NormKind { Inf, Two };

std::string_view to_string(NormKind kind) noexcept;
NormKind parse_norm_kind(std::string_view name);

/// Contiguous partition of R^m into agent blocks.
struct BlockLayout {
    std::vector<int> sizes;

    int dimension() const;
    int count() const { return static_cast<int>(sizes.size()); }
    int offset(int block) const;
};

/// The norm used for contraction constants, drift and tracking error in one
/// experiment. With block weights w_i the infinity norm becomes the weighted
/// block maximum max_i w_i * |x_i|_inf and the 2-norm becomes
/// sqrt(sum_i w_i^2 |x_i|_2^2).
class NormSpec {
public:
    NormSpec() = default;
    explicit NormSpec(NormKind kind) : kind_(kind) {}
    NormSpec(NormKind kind, BlockLayout blocks, std::vector<double> weights = {});

    static NormSpec inf() { return NormSpec(NormKind::Inf); }
    static NormSpec two() { return NormSpec(NormKind::Two); }

    NormKind kind() const noexcept { return kind_; }
    const std::optional<BlockLayout>& blocks() const noexcept { return blocks_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    bool weighted() const noexcept { return !weights_.empty(); }

    double operator()(const Vector& x) const;
    double distance(const Vector& x, const Vector& y) const { return (*this)((x - y).eval()); }

private:
    NormKind kind_ = NormKind::Two;
    std::optional<BlockLayout> blocks_;
    std::vector<double> weights_;
};

}  // namespace tvfp
