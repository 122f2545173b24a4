#pragma once

#include <vector>

namespace tvfp {

/// One realized stamp: at tick t, agent `dst` holds the value of agent
/// `src`'s block produced at tick `stamp` (D^(t)_{dst,src}).
struct ChannelRecord {
    int t = 0;
    int src = 0;
    int dst = 0;
    int stamp = 0;

    bool operator==(const ChannelRecord&) const = default;
};

struct DelayStats {
    /// max over edges and ticks of t - stamp.
    int realized_T_d = 0;
    /// max over ticks and agents of the number of stale incoming blocks.
    int realized_N_d = 0;
    /// Running values of the two maxima, indexed by tick - 1.
    std::vector<int> T_d_so_far;
    std::vector<int> N_d_so_far;
    /// Forced-delivery cap of drop channels, 0 when no drop channel is used.
    int drop_cap = 0;
    /// True when a schedule delivered an older stamp after a newer one.
    bool non_monotone = false;
    std::vector<ChannelRecord> log;
};

}  // namespace tvfp
