#include "tvfp/async_sim.hpp"
#include "tvfp/bounds.hpp"
#include "tvfp/problems/affine.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace tvfp;

namespace {

BlockLayout units(int n) { return BlockLayout{std::vector<int>(n, 1)}; }

// f(x) = (0.5 x_1 + 1, 0.25 x_0).
MapFamily two_agent_map() {
    MapFamily f;
    f.name = "two-agent";
    f.dimension = 2;
    f.domain = DomainSpec::all_space(2);
    f.evaluator = [](const Vector& x, Tick) {
        Vector y(2);
        y << 0.5 * x(1) + 1.0, 0.25 * x(0);
        return y;
    };
    f.declared_L = [](Tick) { return 0.5; };
    f.declared_L_sup = 0.5;
    return f;
}

ChannelModel scheduled(DeliverySchedule s) {
    ChannelModel c;
    c.default_policy = Scheduled{};
    c.schedule = std::move(s);
    return c;
}

}  // namespace

TEST(DependencyGraph, Construction) {
    const auto g = DependencyGraph::chain(units(4));
    EXPECT_EQ(g.edges().size(), 6u);
    EXPECT_EQ(g.neighbors(1), (std::vector<int>{0, 2}));
    EXPECT_EQ(g.max_in_degree(), 2);
    EXPECT_TRUE(g.has_edge(2, 3));
    EXPECT_FALSE(g.has_edge(0, 2));
    EXPECT_EQ(DependencyGraph::complete(units(4)).edges().size(), 12u);
    EXPECT_THROW(DependencyGraph(units(2), {{0, 0}}), PreconditionFailed);
    EXPECT_THROW(DependencyGraph(units(2), {{0, 1}, {0, 1}}), PreconditionFailed);
    EXPECT_THROW(DependencyGraph(units(2), {{0, 2}}), IndexOutOfRange);
}

TEST(AsyncSim, IdealChannelsReproduceSynchronousRunBitwise) {
    for (auto pattern : {AffinePattern::Dense, AffinePattern::Tridiagonal}) {
        const auto prob = build_affine_family(6, NormKind::Inf, 0.7, DriftSpec::linear(0.05), 4, pattern);
        const auto map = with_additive_perturbation(prob.family, PerturbationMode::UniformBall,
                                                    [](Tick) { return 0.01; }, 0.01, NormSpec::inf(), 3);
        const auto g = pattern == AffinePattern::Dense ? DependencyGraph::complete(units(6))
                                                       : DependencyGraph::chain(units(6));
        const auto sync = run_online_tracker(map, Vector::Zero(6), 200, NormSpec::inf());
        const auto async = run_async_tracker(map, g, ChannelModel::ideal(), Vector::Zero(6), 200, NormSpec::inf());
        ASSERT_EQ(sync.iterates.size(), async.iterates.size());
        for (std::size_t k = 0; k < sync.iterates.size(); ++k) EXPECT_EQ(sync.iterates[k], async.iterates[k]);
        EXPECT_EQ(sync.errors, async.errors);
        EXPECT_EQ(async.delay->realized_T_d, 0);
        EXPECT_EQ(async.delay->realized_N_d, 0);
    }
}

TEST(AsyncSim, FixedDelayOneMatchesHandSimulation) {
    const auto f = two_agent_map();
    const auto g = DependencyGraph::complete(units(2));
    ChannelModel c;
    c.default_policy = FixedDelay{1};
    const auto tr = run_async_tracker(InexactMapFamily::exact(f), g, c, Vector::Zero(2), 12, NormSpec::inf());
    // Oracle: from tick 2 on, each agent reads its neighbor one tick late.
    std::vector<Vector> x{Vector::Zero(2)};
    x.push_back(f(x[0], 1));
    for (int t = 2; t < 12; ++t) {
        Vector y(2);
        y << 0.5 * x[t - 2](1) + 1.0, 0.25 * x[t - 2](0);
        x.push_back(y);
    }
    for (int k = 0; k < 12; ++k) EXPECT_EQ(tr.iterates[k], x[k]) << k;
    EXPECT_EQ(tr.delay->realized_T_d, 1);
    EXPECT_EQ(tr.delay->realized_N_d, 1);
    Vector expect(2);
    expect << 1.0, 0.25;
    EXPECT_EQ(tr.iterates[3], expect);
}

TEST(AsyncSim, MissingScheduleEntryKeepsStampAndValue) {
    const auto f = two_agent_map();
    const auto g = DependencyGraph::complete(units(2));
    DeliverySchedule s;
    for (int t = 2; t <= 6; ++t) s.set(t, 1, 0, t);
    // Edge (0 -> 1) gets nothing after tick 1.
    AsyncState st = initial_async_state(g, Vector::Zero(2));
    std::vector<ChannelRecord> log;
    const auto map = InexactMapFamily::exact(f);
    const auto c = scheduled(s);
    for (int k = 0; k < 5; ++k) st = step_async(std::move(st), map, g, c, &log);
    EXPECT_EQ(st.stamps[*g.edge_index(0, 1)], 1);
    EXPECT_EQ(st.stamps[*g.edge_index(1, 0)], 6);
    // Agent 1 always reads x_0 = 0 from tick 1.
    for (const auto& x : st.history) EXPECT_EQ(x(1), 0.0);
}

TEST(AsyncSim, DelayStatsMatchBruteForceScan) {
    const auto prob = build_affine_family(5, NormKind::Inf, 0.6, DriftSpec::linear(0.02), 9);
    const auto g = DependencyGraph::complete(units(5));
    ChannelModel c;
    c.default_policy = IidDrop{0.3, 4};
    c.seed = 77;
    const auto tr = run_async_tracker(InexactMapFamily::exact(prob.family), g, c, Vector::Zero(5), 400,
                                      NormSpec::inf());
    const auto& log = tr.delay->log;
    int td = 0, nd = 0;
    for (int t = 1; t <= 400; ++t) {
        for (int i = 0; i < 5; ++i) {
            int stale = 0;
            for (const auto& r : log)
                if (r.t == t && r.dst == i) {
                    td = std::max(td, t - r.stamp);
                    stale += r.stamp < t ? 1 : 0;
                }
            nd = std::max(nd, stale);
        }
        EXPECT_EQ(tr.delay->T_d_so_far[t - 1], td);
        EXPECT_EQ(tr.delay->N_d_so_far[t - 1], nd);
    }
    EXPECT_LE(td, 4);
    EXPECT_LE(nd, 4);
    EXPECT_EQ(tr.delay->drop_cap, 4);
    EXPECT_FALSE(tr.delay->non_monotone);
    // Stamps never go backwards.
    std::map<std::pair<int, int>, int> last;
    for (const auto& r : log) {
        auto& l = last[{r.src, r.dst}];
        EXPECT_GE(r.stamp, l);
        l = r.stamp;
    }
}

TEST(AsyncSim, DropProbabilityZeroAndCapZeroAreIdeal) {
    const auto prob = build_affine_family(3, NormKind::Inf, 0.5, DriftSpec::linear(0.05), 2);
    const auto g = DependencyGraph::complete(units(3));
    const auto map = InexactMapFamily::exact(prob.family);
    const auto ideal = run_async_tracker(map, g, ChannelModel::ideal(), Vector::Zero(3), 100, NormSpec::inf());
    for (auto policy : {IidDrop{0.0, 9}, IidDrop{0.9, 0}}) {
        ChannelModel c;
        c.default_policy = policy;
        const auto tr = run_async_tracker(map, g, c, Vector::Zero(3), 100, NormSpec::inf());
        EXPECT_EQ(tr.errors, ideal.errors);
    }
}

TEST(AsyncSim, NonMonotoneScheduleIsIgnoredUnlessAllowed) {
    const auto f = two_agent_map();
    const auto g = DependencyGraph::complete(units(2));
    DeliverySchedule s;
    s.set(3, 1, 0, 3);
    s.set(4, 1, 0, 2);
    const auto map = InexactMapFamily::exact(f);
    auto run = [&](bool allow) {
        s.allow_non_monotone = allow;
        AsyncState st = initial_async_state(g, Vector::Zero(2));
        for (int k = 0; k < 3; ++k) st = step_async(std::move(st), map, g, scheduled(s));
        return st;
    };
    const auto strict = run(false);
    EXPECT_EQ(strict.stamps[*g.edge_index(1, 0)], 3);
    EXPECT_FALSE(strict.non_monotone);
    const auto loose = run(true);
    EXPECT_EQ(loose.stamps[*g.edge_index(1, 0)], 2);
    EXPECT_TRUE(loose.non_monotone);
}

TEST(AsyncSim, StaleBeyondDeclaredCap) {
    const auto f = two_agent_map();
    const auto g = DependencyGraph::complete(units(2));
    DeliverySchedule s;
    s.declared_T_d = 2;
    const auto map = InexactMapFamily::exact(f);
    AsyncState st = initial_async_state(g, Vector::Zero(2));
    st = step_async(std::move(st), map, g, scheduled(s));
    st = step_async(std::move(st), map, g, scheduled(s));
    EXPECT_THROW(step_async(std::move(st), map, g, scheduled(s)), StaleBeyondCap);
}

TEST(AsyncSim, ScheduleStampFromFutureRejected) {
    const auto g = DependencyGraph::complete(units(2));
    DeliverySchedule s;
    s.set(2, 0, 1, 3);
    AsyncState st = initial_async_state(g, Vector::Zero(2));
    EXPECT_THROW(step_async(std::move(st), InexactMapFamily::exact(two_agent_map()), g, scheduled(s)),
                 PreconditionFailed);
}

TEST(AsyncSim, SawtoothAndStaggeredRespectCaps) {
    const auto g = DependencyGraph::complete(units(4));
    const auto saw = sawtooth_schedule(g, 3, 200, 5);
    const auto stag = staggered_schedule(g, 3, 200, 5);
    const auto prob = build_affine_family(4, NormKind::Inf, 0.6, DriftSpec::linear(0.05), 3);
    const auto map = InexactMapFamily::exact(prob.family);
    const auto a = run_async_tracker(map, g, scheduled(saw), Vector::Zero(4), 200, NormSpec::inf());
    EXPECT_EQ(a.delay->realized_T_d, 3);
    const auto b = run_async_tracker(map, g, scheduled(stag), Vector::Zero(4), 200, NormSpec::inf());
    EXPECT_EQ(b.delay->realized_T_d, 3);
    EXPECT_EQ(b.delay->realized_N_d, 1);
    // Max-norm bound check on the sawtooth run.
    BoundInputs in;
    in.L = 0.6;
    in.sigma = a.reference.sigma_sup;
    in.T_d = 3;
    in.norm = NormKind::Inf;
    EXPECT_LE(tail_max(a.errors, tail_window(200)), asymptotic_bound_async_inf(in) + 1e-9);
}

TEST(AsyncSim, DeterministicForFixedSeed) {
    const auto prob = build_affine_family(4, NormKind::Inf, 0.6, DriftSpec::linear(0.05), 3);
    const auto map = with_additive_perturbation(prob.family, PerturbationMode::UniformBall,
                                                [](Tick) { return 0.02; }, 0.02, NormSpec::inf(), 3);
    const auto g = DependencyGraph::complete(units(4));
    ChannelModel c;
    c.default_policy = IidDrop{0.2, 9};
    c.seed = 4;
    const auto a = run_async_tracker(map, g, c, Vector::Zero(4), 300, NormSpec::inf());
    const auto b = run_async_tracker(map, g, c, Vector::Zero(4), 300, NormSpec::inf());
    EXPECT_EQ(a.errors, b.errors);
    EXPECT_EQ(a.delay->log, b.delay->log);
}

TEST(DependencyAudit, DetectsUndeclaredEdges) {
    const auto prob = build_affine_family(4, NormKind::Inf, 0.6, DriftSpec::constant(), 3, AffinePattern::Tridiagonal);
    EXPECT_TRUE(audit_dependency_graph(prob.family, DependencyGraph::chain(units(4)), 50).ok);
    EXPECT_TRUE(audit_dependency_graph(prob.family, DependencyGraph::complete(units(4)), 50).ok);
    const auto bad = audit_dependency_graph(prob.family, DependencyGraph::empty(units(4)), 50);
    EXPECT_FALSE(bad.ok);
    const std::set<DependencyGraph::Edge> got(bad.violations.begin(), bad.violations.end());
    EXPECT_EQ(got, (std::set<DependencyGraph::Edge>{{0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 3}, {3, 2}}));
    const auto diag = build_affine_family(4, NormKind::Inf, 0.6, DriftSpec::constant(), 3, AffinePattern::Diagonal);
    EXPECT_TRUE(audit_dependency_graph(diag.family, DependencyGraph::empty(units(4)), 50).ok);
}

TEST(ScheduleCsv, RoundTripAndValidation) {
    const auto g = DependencyGraph::complete(units(3));
    const auto saw = sawtooth_schedule(g, 2, 30, 1);
    const auto prob = build_affine_family(3, NormKind::Inf, 0.5, DriftSpec::linear(0.05), 3);
    const auto map = InexactMapFamily::exact(prob.family);
    const auto a = run_async_tracker(map, g, scheduled(saw), Vector::Zero(3), 30, NormSpec::inf());
    std::stringstream csv;
    write_channel_log_csv(csv, a.delay->log);
    const auto replayed = read_schedule_csv(csv);
    const auto b = run_async_tracker(map, g, scheduled(replayed), Vector::Zero(3), 30, NormSpec::inf());
    EXPECT_EQ(a.errors, b.errors);
    EXPECT_EQ(a.delay->log, b.delay->log);

    std::istringstream bad_header("t,src,dst\n1,0,1\n");
    EXPECT_THROW(read_schedule_csv(bad_header), ConfigError);
    std::istringstream future("t,src,dst,delivered_stamp\n2,0,1,3\n");
    EXPECT_THROW(read_schedule_csv(future), ConfigError);
    std::istringstream junk("t,src,dst,delivered_stamp\n2,x,1,1\n");
    EXPECT_THROW(read_schedule_csv(junk), ConfigError);
}
