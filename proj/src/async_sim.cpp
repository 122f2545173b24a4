#include "tvfp/async_sim.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

namespace tvfp {

DependencyGraph::DependencyGraph(BlockLayout blocks, std::vector<Edge> edges)
    : blocks_(std::move(blocks)), edges_(std::move(edges)) {
    if (blocks_.count() == 0) throw PreconditionFailed("dependency graph needs at least one agent");
    for (int s : blocks_.sizes)
        if (s <= 0) throw PreconditionFailed("block sizes must be positive");
    const int n = blocks_.count();
    offsets_.resize(n);
    for (int i = 0, off = 0; i < n; ++i) {
        offsets_[i] = off;
        off += blocks_.sizes[i];
    }
    dimension_ = blocks_.dimension();
    in_.assign(n, {});
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
        const auto [src, dst] = edges_[e];
        if (src < 0 || src >= n || dst < 0 || dst >= n) throw IndexOutOfRange("edge endpoint out of range");
        if (src == dst) throw PreconditionFailed("self-edges are not allowed: an agent's own block is always fresh");
        if (!index_.emplace(edges_[e], e).second) throw PreconditionFailed("duplicate edge");
        in_[dst].push_back(src);
    }
    for (auto& v : in_) std::sort(v.begin(), v.end());
}

DependencyGraph DependencyGraph::empty(BlockLayout blocks) { return DependencyGraph(std::move(blocks), {}); }

DependencyGraph DependencyGraph::chain(BlockLayout blocks) {
    std::vector<Edge> e;
    for (int i = 0; i + 1 < blocks.count(); ++i) {
        e.emplace_back(i, i + 1);
        e.emplace_back(i + 1, i);
    }
    return DependencyGraph(std::move(blocks), std::move(e));
}

DependencyGraph DependencyGraph::complete(BlockLayout blocks) {
    std::vector<Edge> e;
    for (int i = 0; i < blocks.count(); ++i)
        for (int j = 0; j < blocks.count(); ++j)
            if (i != j) e.emplace_back(j, i);
    return DependencyGraph(std::move(blocks), std::move(e));
}

std::optional<int> DependencyGraph::edge_index(int src, int dst) const {
    const auto it = index_.find({src, dst});
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

int DependencyGraph::max_in_degree() const {
    std::size_t d = 0;
    for (const auto& v : in_) d = std::max(d, v.size());
    return static_cast<int>(d);
}

const ChannelPolicy& ChannelModel::policy(int src, int dst) const {
    const auto it = overrides.find({src, dst});
    return it == overrides.end() ? default_policy : it->second;
}

DeliverySchedule sawtooth_schedule(const DependencyGraph& graph, int T_d, int horizon, std::uint64_t phase) {
    if (T_d < 0 || horizon < 1) throw PreconditionFailed("sawtooth_schedule: requires T_d >= 0, horizon >= 1");
    DeliverySchedule s;
    s.declared_T_d = T_d;
    const int period = T_d + 1;
    for (const auto& [src, dst] : graph.edges()) {
        const auto shift = static_cast<int>(mix64(phase ^ mix64((static_cast<std::uint64_t>(src) << 32) | dst)) %
                                            static_cast<std::uint64_t>(period));
        for (int t = 1; t <= horizon; ++t) s.set(t, src, dst, std::max(1, t - (t + shift) % period));
    }
    return s;
}

DeliverySchedule staggered_schedule(const DependencyGraph& graph, int T_d, int horizon, std::uint64_t phase) {
    if (T_d < 0 || horizon < 1) throw PreconditionFailed("staggered_schedule: requires T_d >= 0, horizon >= 1");
    DeliverySchedule s;
    s.declared_T_d = T_d;
    const int slot = T_d + 1;
    for (int i = 0; i < graph.agents(); ++i) {
        const auto& nb = graph.neighbors(i);
        if (nb.empty()) continue;
        const int period = slot * static_cast<int>(nb.size());
        const int offset = static_cast<int>((phase + static_cast<std::uint64_t>(i)) % static_cast<std::uint64_t>(period));
        for (int q = 0; q < static_cast<int>(nb.size()); ++q) {
            for (int t = 1; t <= horizon; ++t) {
                const int p = (t + offset) % period - q * slot;
                const int stale = (p >= 0 && p < slot) ? p : 0;
                s.set(t, nb[q], i, std::max(1, t - stale));
            }
        }
    }
    return s;
}

AsyncState initial_async_state(const DependencyGraph& graph, const Vector& x0) {
    if (x0.size() != graph.dimension()) throw LengthMismatch("initial point does not match the graph's blocks");
    AsyncState s;
    s.t = 1;
    s.history.push_back(x0);
    s.stamps.assign(graph.edges().size(), 1);
    s.drops.assign(graph.edges().size(), 0);
    return s;
}

Vector agent_view(const AsyncState& state, const DependencyGraph& graph, int agent) {
    Vector z = state.current();
    for (int j : graph.neighbors(agent)) {
        const int e = *graph.edge_index(j, agent);
        const int stamp = state.stamps[e];
        if (stamp != state.t) z.segment(graph.offset(j), graph.block_size(j)) =
            state.history[stamp - 1].segment(graph.offset(j), graph.block_size(j));
    }
    return z;
}

namespace {

void log_stamps(const AsyncState& s, const DependencyGraph& graph, std::vector<ChannelRecord>* log) {
    if (!log) return;
    for (int e = 0; e < static_cast<int>(graph.edges().size()); ++e) {
        const auto [src, dst] = graph.edges()[e];
        log->push_back({s.t, src, dst, s.stamps[e]});
    }
}

struct StampUpdate {
    const ChannelModel& channels;
    AsyncState& s;
    int e;
    int src;
    int dst;
    Tick next;

    void operator()(const FixedDelay& p) const {
        if (p.delay < 0) throw PreconditionFailed("fixed delay must be nonnegative");
        s.stamps[e] = std::max({1, next - p.delay, s.stamps[e]});
    }

    void operator()(const IidDrop& p) const {
        if (!(p.p >= 0.0 && p.p < 1.0) || p.max_consecutive_drops < 0)
            throw PreconditionFailed("drop channel requires 0 <= p < 1 and a nonnegative cap");
        const std::uint64_t key = (static_cast<std::uint64_t>(src) << 32) | static_cast<std::uint32_t>(dst);
        const bool lost = counter_uniform(channels.seed, key, static_cast<std::uint64_t>(next)) < p.p;
        if (lost && s.drops[e] < p.max_consecutive_drops) {
            ++s.drops[e];
        } else {
            s.drops[e] = 0;
            s.stamps[e] = next;
        }
    }

    void operator()(const Scheduled&) const {
        const auto& sched = channels.schedule;
        const auto it = sched.stamps.find({next, src, dst});
        if (it != sched.stamps.end()) {
            const int stamp = it->second;
            if (stamp < 1 || stamp > next)
                throw PreconditionFailed("schedule stamp outside {1..t} at t=" + std::to_string(next));
            if (stamp < s.stamps[e]) {
                if (sched.allow_non_monotone) {
                    s.non_monotone = true;
                    s.stamps[e] = stamp;
                }
            } else {
                s.stamps[e] = stamp;
            }
        }
        if (sched.declared_T_d && next - s.stamps[e] > *sched.declared_T_d)
            throw StaleBeyondCap("schedule exceeds its declared T_d on edge (" + std::to_string(src) + "," +
                                 std::to_string(dst) + ") at t=" + std::to_string(next));
    }
};

}  // namespace

AsyncState step_async(AsyncState state, const InexactMapFamily& map, const DependencyGraph& graph,
                      const ChannelModel& channels, std::vector<ChannelRecord>* log) {
    if (graph.dimension() != map.dimension()) throw LengthMismatch("graph blocks do not match the map dimension");
    const Tick t = state.t;
    const Vector& x = state.current();

    // All reads come from tick t; agents are independent within the tick.
    Vector next(x.size());
    std::optional<Vector> fresh;
    for (int i = 0; i < graph.agents(); ++i) {
        bool all_fresh = true;
        for (int j : graph.neighbors(i))
            if (state.stamps[*graph.edge_index(j, i)] != t) all_fresh = false;
        const int off = graph.offset(i), n = graph.block_size(i);
        if (all_fresh) {
            if (!fresh) fresh = map(x, t);
            next.segment(off, n) = fresh->segment(off, n);
        } else {
            next.segment(off, n) = map(agent_view(state, graph, i), t).segment(off, n);
        }
    }
    if (!map.domain().contains(next))
        throw DomainViolation(map.base.name + ": asynchronous iterate left the domain at t=" + std::to_string(t + 1));

    state.history.push_back(std::move(next));
    state.t = t + 1;
    for (int e = 0; e < static_cast<int>(graph.edges().size()); ++e) {
        const auto [src, dst] = graph.edges()[e];
        std::visit(StampUpdate{channels, state, e, src, dst, state.t}, channels.policy(src, dst));
    }
    log_stamps(state, graph, log);
    return state;
}

DelayStats realized_delay_stats(const std::vector<ChannelRecord>& log) {
    DelayStats s;
    int max_t = 0;
    for (const auto& r : log) max_t = std::max(max_t, r.t);
    std::map<std::pair<int, int>, int> stale;  // (t, dst) -> count
    std::vector<int> td(max_t, 0), nd(max_t, 0);
    std::map<std::pair<int, int>, int> last_stamp;
    for (const auto& r : log) {
        td[r.t - 1] = std::max(td[r.t - 1], r.t - r.stamp);
        if (r.stamp < r.t) nd[r.t - 1] = std::max(nd[r.t - 1], ++stale[{r.t, r.dst}]);
        auto [it, inserted] = last_stamp.try_emplace({r.src, r.dst}, r.stamp);
        if (!inserted) {
            if (r.stamp < it->second) s.non_monotone = true;
            it->second = r.stamp;
        }
    }
    s.T_d_so_far.resize(max_t);
    s.N_d_so_far.resize(max_t);
    for (int k = 0; k < max_t; ++k) {
        s.realized_T_d = std::max(s.realized_T_d, td[k]);
        s.realized_N_d = std::max(s.realized_N_d, nd[k]);
        s.T_d_so_far[k] = s.realized_T_d;
        s.N_d_so_far[k] = s.realized_N_d;
    }
    s.log = log;
    return s;
}

TrackingTrace run_async_tracker(const InexactMapFamily& map, const DependencyGraph& graph,
                                const ChannelModel& channels, const Vector& x0, int horizon, const NormSpec& norm,
                                std::uint64_t seed) {
    if (horizon < 1) throw PreconditionFailed("run_async_tracker: horizon must be >= 1");
    return run_async_tracker(map, graph, channels, x0, horizon, norm,
                             compute_fixed_point_series(map.base, horizon, norm), seed);
}

TrackingTrace run_async_tracker(const InexactMapFamily& map, const DependencyGraph& graph,
                                const ChannelModel& channels, const Vector& x0, int horizon, const NormSpec& norm,
                                FixedPointSeries reference, std::uint64_t seed) {
    if (horizon < 1) throw PreconditionFailed("run_async_tracker: horizon must be >= 1");
    if (!map.domain().contains(x0)) throw DomainViolation("run_async_tracker: x0 outside the domain");
    std::vector<ChannelRecord> log;
    AsyncState state = initial_async_state(graph, x0);
    log_stamps(state, graph, &log);
    for (Tick t = 1; t < horizon; ++t) state = step_async(std::move(state), map, graph, channels, &log);

    // Score through the synchronous path's bookkeeping so both produce the
    // same trace layout.
    TrackingTrace trace;
    trace.norm = norm;
    trace.seed = seed;
    trace.iterates = std::move(state.history);
    if (reference.horizon < horizon) throw LengthMismatch("run_async_tracker: reference shorter than horizon");
    reference.points.resize(horizon);
    reference.residuals.resize(horizon);
    reference.sigma_series.resize(horizon - 1);
    reference.horizon = horizon;
    reference.sigma_sup = 0.0;
    for (double s : reference.sigma_series) reference.sigma_sup = std::max(reference.sigma_sup, s);
    trace.errors = tracking_error(trace.iterates, reference.points, norm);
    trace.reference = std::move(reference);
    for (Tick t = 1; t <= horizon; ++t) {
        trace.e_f_series.push_back(map.e_f_bound(t));
        trace.L_series.push_back(map.base.declared_L(t));
    }
    DelayStats stats = realized_delay_stats(log);
    stats.non_monotone = stats.non_monotone || state.non_monotone;
    for (const auto& [src, dst] : graph.edges())
        if (const auto* d = std::get_if<IidDrop>(&channels.policy(src, dst)))
            stats.drop_cap = std::max(stats.drop_cap, d->max_consecutive_drops);
    trace.delay = std::move(stats);
    return trace;
}

DependencyAudit audit_dependency_graph(const MapFamily& map, const DependencyGraph& graph, int probe_count,
                                       std::uint64_t seed, Tick t) {
    if (graph.dimension() != map.dimension) throw LengthMismatch("graph blocks do not match the map dimension");
    if (probe_count < 1) throw PreconditionFailed("audit_dependency_graph: probe_count must be >= 1");
    DomainSampler sampler(map.domain, seed);
    std::set<DependencyGraph::Edge> bad;
    for (int k = 0; k < probe_count; ++k) {
        const Vector x = sampler.next();
        const Vector other = sampler.next();
        const Vector fx = map(x, t);
        for (int j = 0; j < graph.agents(); ++j) {
            Vector xp = x;
            xp.segment(graph.offset(j), graph.block_size(j)) = other.segment(graph.offset(j), graph.block_size(j));
            if (!map.domain.is_product()) xp = map.domain.project(xp);
            const Vector fxp = map(xp, t);
            for (int i = 0; i < graph.agents(); ++i) {
                if (i == j || graph.has_edge(j, i)) continue;
                const auto a = fx.segment(graph.offset(i), graph.block_size(i));
                const auto b = fxp.segment(graph.offset(i), graph.block_size(i));
                const double scale = 1.0 + a.lpNorm<Eigen::Infinity>();
                if ((a - b).lpNorm<Eigen::Infinity>() > 1e-12 * scale) bad.insert({j, i});
            }
        }
    }
    DependencyAudit out;
    out.violations.assign(bad.begin(), bad.end());
    out.ok = out.violations.empty();
    return out;
}

DeliverySchedule read_schedule_csv(std::istream& in) {
    DeliverySchedule s;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("schedule CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,src,dst,delivered_stamp") throw ConfigError("schedule CSV header must be t,src,dst,delivered_stamp");
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        int v[4];
        char comma;
        if (!(ss >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3]))
            throw ConfigError("malformed schedule CSV row " + std::to_string(row));
        if (v[0] < 1 || v[3] < 1 || v[3] > v[0])
            throw ConfigError("schedule CSV row " + std::to_string(row) + ": stamp must lie in {1..t}");
        s.set(v[0], v[1], v[2], v[3]);
    }
    return s;
}

void write_channel_log_csv(std::ostream& out, const std::vector<ChannelRecord>& log) {
    out << "t,src,dst,delivered_stamp\n";
    for (const auto& r : log) out << r.t << ',' << r.src << ',' << r.dst << ',' << r.stamp << '\n';
}

}  // namespace tvfp
