#include "tvfp/experiment.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tvfp;

namespace {

Json affine_cfg() {
    return Json::parse(R"({
      "problem": {"type": "affine", "m": 4, "target_L": 0.6, "drift": {"kind": "linear", "sigma": 0.05}},
      "mode": "sync", "norm": "ell_inf", "horizon": 300, "seed": 3
    })");
}

const Certificate* find(const ExperimentReport& r, const std::string& name) {
    for (const auto& c : r.certificates)
        if (c.name == name) return &c;
    return nullptr;
}

std::string csv_of(const ExperimentReport& r) {
    std::ostringstream s;
    write_trace_csv(s, r);
    return s.str();
}

}  // namespace

TEST(Config, RejectsUnknownAndInconsistentKeys) {
    auto j = affine_cfg();
    j["colour"] = "blue";
    EXPECT_THROW(parse_config(j), ConfigError);
    j = affine_cfg();
    j["problem"]["size"] = 3;
    EXPECT_THROW(parse_config(j), ConfigError);
    j = affine_cfg();
    j["channel"] = {{"kind", "iid_drop"}, {"p", 0.1}};
    EXPECT_THROW(parse_config(j), ConfigError);  // channel needs async mode
    j = affine_cfg();
    j["norm"] = "ell_1";
    EXPECT_THROW(parse_config(j), ConfigError);
    j = affine_cfg();
    j["problem"]["type"] = "lasso";
    EXPECT_THROW(parse_config(j), ConfigError);
    j = affine_cfg();
    j["horizon"] = "long";
    EXPECT_THROW(parse_config(j), ConfigError);
    j = affine_cfg();
    j.erase("problem");
    EXPECT_THROW(parse_config(j), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);

    const auto lf = Json::parse(R"({"problem": {"type": "loadflow", "network": "synthetic"}, "norm": "ell_2"})");
    EXPECT_THROW(build_experiment(parse_config(lf), 1), ConfigError);
}

TEST(Experiment, StaticAffineDecaysAndPassesSyncBound) {
    auto j = affine_cfg();
    j["problem"]["drift"] = {{"kind", "constant"}};
    j["horizon"] = 60;
    const auto r = run_experiment(parse_config(j));
    const auto& e = r.trace.errors;
    for (int t = 1; t < 60; ++t) EXPECT_LE(e[t], 0.6 * e[t - 1] + 1e-15);
    const auto* c = find(r, "theorem1_asymptotic");
    ASSERT_NE(c, nullptr);
    EXPECT_EQ(c->verdict, Verdict::Pass);
    EXPECT_EQ(find(r, "theorem1_per_iterate")->verdict, Verdict::Pass);
    EXPECT_TRUE(r.certificates_ok());
    EXPECT_TRUE(r.audit_ok());
}

TEST(Experiment, CsvIsByteIdenticalAcrossReruns) {
    auto j = affine_cfg();
    j["mode"] = "async";
    j["channel"] = {{"kind", "iid_drop"}, {"p", 0.2}};
    j["problem"]["perturbation"] = {{"mode", "uniform"}, {"bound", 0.01}};
    const auto c = parse_config(j);
    const std::string a = csv_of(run_experiment(c, 0)), b = csv_of(run_experiment(c, 0));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.substr(0, a.find('\n')),
              "t,error,per_iterate_bound,asymptotic_bound,realized_Td_so_far,realized_Nd_so_far");
    j["seed"] = 4;
    EXPECT_NE(a, csv_of(run_experiment(parse_config(j), 0)));
}

TEST(Experiment, ReportIsRecomputableFromTraceAndInputs) {
    auto j = affine_cfg();
    j["mode"] = "async";
    j["channel"] = {{"kind", "sawtooth"}, {"T_d", 3}};
    const auto r = run_experiment(parse_config(j), 0);
    const auto* c = find(r, "theorem2_async_inf");
    ASSERT_NE(c, nullptr);
    EXPECT_EQ(c->verdict, Verdict::Pass);
    EXPECT_EQ(r.inputs.T_d, 3);
    EXPECT_DOUBLE_EQ(c->bound, asymptotic_bound_async_inf(r.inputs));
    EXPECT_DOUBLE_EQ(c->observed, tail_max(r.trace.errors, r.window));
    const auto again = verify_bounds(r);
    ASSERT_EQ(again.size(), r.certificates.size());
    for (std::size_t k = 0; k < again.size(); ++k) EXPECT_EQ(again[k].verdict, r.certificates[k].verdict);
}

TEST(Experiment, InapplicableBoundsAreNotFailures) {
    auto j = Json::parse(R"({
      "problem": {"type": "affine", "m": 6, "target_L": 0.6, "drift": {"kind": "linear", "sigma": 0.05}},
      "mode": "async", "norm": "ell_2", "channel": {"kind": "fixed_delay", "delay": 1}, "horizon": 200
    })");
    const auto r = run_experiment(parse_config(j), 0);
    // Complete graph with every neighbor stale: N_d = 5, L sqrt(6) > 1.
    EXPECT_EQ(r.inputs.N_d, 5);
    EXPECT_EQ(find(r, "theorem3_async_l2")->verdict, Verdict::NotApplicable);
    EXPECT_EQ(find(r, "corollary1_async_l2")->verdict, Verdict::NotApplicable);
    EXPECT_TRUE(r.certificates_ok());
    EXPECT_TRUE(std::isnan(r.asymptotic_bound));
}

TEST(Experiment, FabricatedFailureIsReported) {
    auto j = affine_cfg();
    auto r = run_experiment(parse_config(j), 0);
    r.inputs.sigma = 0.0;  // lie about the drift
    r.certificates = verify_bounds(r);
    EXPECT_FALSE(r.certificates_ok());
}

TEST(Sweep, TdBoundColumnStrictlyIncreases) {
    auto j = affine_cfg();
    j["mode"] = "async";
    j["channel"] = {{"kind", "sawtooth"}, {"T_d", 0}};
    const auto s = sweep(parse_config(j), "T_d", {0, 1, 2, 3});
    EXPECT_EQ(s.bound_trend, "strictly_increasing");
    for (const auto& row : s.rows) EXPECT_TRUE(row.certificates_ok);
    EXPECT_THROW(sweep(parse_config(j), "gamma", {1.0}), ConfigError);
}

TEST(Sweep, StepWindowFlagFlipsAtTheEdge) {
    auto j = Json::parse(R"({
      "problem": {"type": "qp-gradient", "random": {"agents": 2, "gamma": 0.5, "eta": 1.0}, "alpha": 0.2},
      "mode": "async", "channel": {"kind": "fixed_delay", "delay": 1}, "horizon": 200
    })");
    const auto c = parse_config(j);
    const auto built = build_experiment(c, c.seed);
    ASSERT_TRUE(built.qp.has_value());
    const auto w = gradient_step_window(built.qp->smoothness(), built.qp->eta, 1);
    ASSERT_TRUE(w.has_value());
    const auto s = sweep(c, "alpha", {w->lo * (1 - 1e-9), w->lo * (1 + 1e-9), w->hi * (1 - 1e-9)});
    auto verdict = [&](std::size_t k) {
        for (const auto& cert : s.rows[k].certificates)
            if (cert.name == "step_window") return cert.verdict;
        return Verdict::Fail;
    };
    EXPECT_EQ(verdict(0), Verdict::NotApplicable);
    EXPECT_EQ(verdict(1), Verdict::Pass);
    EXPECT_EQ(verdict(2), Verdict::Pass);
}

TEST(Sweep, Trend) {
    EXPECT_EQ(trend({1, 2, 3}), "strictly_increasing");
    EXPECT_EQ(trend({1, 1, 3}), "nondecreasing");
    EXPECT_EQ(trend({3, 2, 2}), "nonincreasing");
    EXPECT_EQ(trend({1, 3, 2}), "mixed");
}

TEST(Output, AtomicWriteAndFormatting) {
    const auto dir = std::filesystem::temp_directory_path() / "tvfp_test_out";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "x.csv").string();
    write_file_atomic(path, "a\n");
    write_file_atomic(path, "b\n");
    std::ifstream in(path);
    std::string s;
    std::getline(in, s);
    EXPECT_EQ(s, "b");
    EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
    std::filesystem::remove_all(dir);
    EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(BoundsTable, AllFormulas) {
    const auto in = bound_inputs_from_json(
        Json::parse(R"({"L": 0.4, "e_f": 0, "sigma": 0.1, "T_d": 2, "N_d": 1, "m": 4, "norm": "ell_2"})"));
    const Json t = bounds_table(in);
    EXPECT_NEAR(t.at("corollary1_async_l2").get<double>(), 1.3, 1e-12);
    EXPECT_NEAR(t.at("theorem3_async_l2").get<double>(), 0.4907436, 1e-7);
    EXPECT_THROW(bound_inputs_from_json(Json::parse(R"({"L": 0.4, "sigma": 0.1, "bogus": 1})")), ConfigError);
}
