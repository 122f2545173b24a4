#pragma once

#include "tvfp/common.hpp"
#include "tvfp/core.hpp"
#include "tvfp/delay_stats.hpp"
#include "tvfp/map_family.hpp"
#include "tvfp/norm.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

namespace tvfp {

/// Agents own contiguous blocks of x. An edge (src, dst) means agent dst
/// reads agent src's block. Agent ids are 0-based.
class DependencyGraph {
public:
    using Edge = std::pair<int, int>;

    DependencyGraph(BlockLayout blocks, std::vector<Edge> edges);

    static DependencyGraph empty(BlockLayout blocks);
    static DependencyGraph chain(BlockLayout blocks);
    static DependencyGraph complete(BlockLayout blocks);

    int agents() const noexcept { return blocks_.count(); }
    int dimension() const noexcept { return dimension_; }
    const BlockLayout& blocks() const noexcept { return blocks_; }
    int offset(int agent) const { return offsets_.at(agent); }
    int block_size(int agent) const { return blocks_.sizes.at(agent); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    /// Agents whose blocks agent i reads, ascending.
    const std::vector<int>& neighbors(int agent) const { return in_.at(agent); }
    /// Index into edges() of (src, dst), if present.
    std::optional<int> edge_index(int src, int dst) const;
    bool has_edge(int src, int dst) const { return edge_index(src, dst).has_value(); }
    int max_in_degree() const;

private:
    BlockLayout blocks_;
    std::vector<Edge> edges_;
    std::vector<int> offsets_;
    std::vector<std::vector<int>> in_;
    std::map<Edge, int> index_;
    int dimension_ = 0;
};

struct FixedDelay {
    int delay = 0;
};

/// Each new packet is lost with probability p; after `max_consecutive_drops`
/// losses in a row the next packet is delivered regardless.
struct IidDrop {
    double p = 0.0;
    int max_consecutive_drops = 9;
};

/// Delivery follows ChannelModel::schedule.
struct Scheduled {};

using ChannelPolicy = std::variant<FixedDelay, IidDrop, Scheduled>;

/// Explicit D^(t)_{dst,src} table. A missing (t, src, dst) entry means
/// nothing new arrived: the receiver keeps its copy and stamp.
struct DeliverySchedule {
    std::map<std::tuple<int, int, int>, int> stamps;  // (t, src, dst) -> stamp
    std::optional<int> declared_T_d;
    /// Outside the default model: lets an older stamp replace a newer one.
    bool allow_non_monotone = false;

    void set(int t, int src, int dst, int stamp) { stamps[{t, src, dst}] = stamp; }
};

struct ChannelModel {
    ChannelPolicy default_policy = FixedDelay{0};
    std::map<DependencyGraph::Edge, ChannelPolicy> overrides;
    DeliverySchedule schedule;
    std::uint64_t seed = 0;

    static ChannelModel ideal() { return {}; }
    const ChannelPolicy& policy(int src, int dst) const;
};

/// Per-edge periodic staleness cycling through 0..T_d with a per-edge phase
/// derived from `phase`. Every edge can be stale at once.
DeliverySchedule sawtooth_schedule(const DependencyGraph& graph, int T_d, int horizon, std::uint64_t phase);

/// Like the sawtooth, but the incoming edges of each agent take turns so at
/// most one of them is stale at any tick (realized N_d <= 1).
DeliverySchedule staggered_schedule(const DependencyGraph& graph, int T_d, int horizon, std::uint64_t phase);

/// Simulation state at tick t: iterates x^(1..t), the stamps D^(t) per edge
/// and the consecutive-drop counters.
struct AsyncState {
    Tick t = 1;
    std::vector<Vector> history;
    std::vector<int> stamps;
    std::vector<int> drops;
    bool non_monotone = false;

    const Vector& current() const { return history.back(); }
};

AsyncState initial_async_state(const DependencyGraph& graph, const Vector& x0);

/// The point at which agent i evaluates its block map at the current tick:
/// its own block fresh, neighbor blocks at their delivered stamps.
Vector agent_view(const AsyncState& state, const DependencyGraph& graph, int agent);

/// One logical tick: every agent updates its block from its view, then the
/// channels deliver or drop the new blocks. Appends the stamps in force at
/// the new tick to `log` when given.
AsyncState step_async(AsyncState state, const InexactMapFamily& map, const DependencyGraph& graph,
                      const ChannelModel& channels, std::vector<ChannelRecord>* log = nullptr);

/// Recomputes T_d, N_d and their running values from a complete log.
DelayStats realized_delay_stats(const std::vector<ChannelRecord>& log);

/// Runs the asynchronous iteration for `horizon` ticks and scores it against
/// the independently computed fixed points of map.base.
TrackingTrace run_async_tracker(const InexactMapFamily& map, const DependencyGraph& graph,
                                const ChannelModel& channels, const Vector& x0, int horizon,
                                const NormSpec& norm, std::uint64_t seed = 0);
TrackingTrace run_async_tracker(const InexactMapFamily& map, const DependencyGraph& graph,
                                const ChannelModel& channels, const Vector& x0, int horizon,
                                const NormSpec& norm, FixedPointSeries reference, std::uint64_t seed = 0);

struct DependencyAudit {
    bool ok = true;
    /// Edges (src, dst) the map uses but the graph does not declare.
    std::vector<DependencyGraph::Edge> violations;
};

/// Finite-difference probing: replacing block j must leave block i's output
/// unchanged unless (j, i) is an edge or i == j.
DependencyAudit audit_dependency_graph(const MapFamily& map, const DependencyGraph& graph, int probe_count,
                                       std::uint64_t seed = 0, Tick t = 1);

/// CSV with header `t,src,dst,delivered_stamp`.
DeliverySchedule read_schedule_csv(std::istream& in);
void write_channel_log_csv(std::ostream& out, const std::vector<ChannelRecord>& log);

}  // namespace tvfp
