#include "tvfp/experiment.hpp"

#include "tvfp/problems/affine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace tvfp {

namespace {

constexpr double kSlack = 1e-9;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

void check_problem_keys(const std::string& type, const Json& p) {
    if (type == "affine")
        reject_unknown_keys(p, {"type", "m", "target_L", "pattern", "drift", "perturbation", "graph", "instance_seed",
                                "sigma_scale"},
                            "problem");
    else if (type == "qp-gradient")
        reject_unknown_keys(p, {"type", "instance", "random", "alpha", "noise_bound", "noise_mode", "formulation",
                                "instance_seed", "sigma_scale"},
                            "problem");
    else if (type == "loadflow")
        reject_unknown_keys(p, {"type", "network", "loads", "noise_bound", "noise_mode", "rho", "formulation",
                                "instance_seed", "sigma_scale"},
                            "problem");
    else
        throw ConfigError("problem.type must be affine, qp-gradient or loadflow (got '" + type + "')");
    if (p.contains("drift"))
        reject_unknown_keys(p.at("drift"), {"kind", "sigma", "step_bound", "fast_start", "fast_end", "fast_factor"},
                            "problem.drift");
    if (p.contains("perturbation")) reject_unknown_keys(p.at("perturbation"), {"mode", "bound"}, "problem.perturbation");
    if (p.contains("random")) reject_unknown_keys(p.at("random"), {"agents", "gamma", "eta"}, "problem.random");
}

PerturbationMode mode_from(const Json& j, const char* key, const std::string& where) {
    try {
        return parse_perturbation_mode(get_or<std::string>(j, key, "uniform", where));
    } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

double median(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::NotApplicable: return "not_applicable";
    }
    return "?";
}

ExperimentConfig parse_config(const Json& j, const std::string& base_dir) {
    reject_unknown_keys(j, {"problem", "mode", "norm", "channel", "horizon", "tail_fraction", "transient", "seed",
                            "seeds", "output", "report", "audit_samples", "x0"},
                        "config");
    ExperimentConfig c;
    c.raw = j;
    c.base_dir = base_dir;
    if (!j.contains("problem") || !j.at("problem").is_object()) throw ConfigError("config: 'problem' object is required");
    c.problem_params = j.at("problem");
    c.problem = get_or<std::string>(c.problem_params, "type", "", "problem");
    check_problem_keys(c.problem, c.problem_params);

    const std::string mode = get_or<std::string>(j, "mode", "sync", "config");
    if (mode != "sync" && mode != "async") throw ConfigError("config.mode must be sync or async");
    c.async = mode == "async";
    if (j.contains("norm")) {
        try {
            c.norm = parse_norm_kind(get_or<std::string>(j, "norm", "", "config"));
        } catch (const Error& e) {
            throw ConfigError(std::string("config.norm: ") + e.what());
        }
    }
    c.horizon = get_or<int>(j, "horizon", 1000, "config");
    c.tail_fraction = get_or<double>(j, "tail_fraction", 0.1, "config");
    c.transient = get_or<int>(j, "transient", 0, "config");
    c.seed = get_or<std::uint64_t>(j, "seed", 0, "config");
    c.seeds = get_or<int>(j, "seeds", 1, "config");
    c.output = get_or<std::string>(j, "output", "", "config");
    c.report = get_or<std::string>(j, "report", "", "config");
    c.audit_samples = get_or<int>(j, "audit_samples", 1000, "config");
    if (j.contains("x0")) c.x0 = j.at("x0");
    if (c.horizon < 2) throw ConfigError("config.horizon must be >= 2");
    if (!(c.tail_fraction > 0.0 && c.tail_fraction <= 1.0)) throw ConfigError("config.tail_fraction must lie in (0, 1]");
    if (c.transient < 0 || c.transient >= c.horizon) throw ConfigError("config.transient must lie in [0, horizon)");
    if (c.seeds < 1) throw ConfigError("config.seeds must be >= 1");
    if (c.audit_samples < 0) throw ConfigError("config.audit_samples must be >= 0");
    if (!(c.x0.is_string() || c.x0.is_array())) throw ConfigError("config.x0 must be \"anchor\" or an array");

    if (j.contains("channel")) {
        const Json& ch = j.at("channel");
        reject_unknown_keys(ch, {"kind", "delay", "p", "max_consecutive_drops", "T_d", "phase", "file", "declared_T_d",
                                 "allow_non_monotone"},
                            "channel");
        ChannelConfig& k = c.channel;
        k.kind = get_or<std::string>(ch, "kind", "none", "channel");
        k.delay = get_or<int>(ch, "delay", 0, "channel");
        k.p = get_or<double>(ch, "p", 0.0, "channel");
        k.max_consecutive_drops = get_or<int>(ch, "max_consecutive_drops", 9, "channel");
        k.T_d = get_or<int>(ch, "T_d", 0, "channel");
        if (ch.contains("phase")) k.phase = get_or<std::uint64_t>(ch, "phase", 0, "channel");
        k.file = get_or<std::string>(ch, "file", "", "channel");
        if (ch.contains("declared_T_d")) k.declared_T_d = get_or<int>(ch, "declared_T_d", 0, "channel");
        k.allow_non_monotone = get_or<bool>(ch, "allow_non_monotone", false, "channel");
        static const std::set<std::string> kinds{"none", "fixed_delay", "iid_drop", "schedule", "sawtooth", "staggered"};
        if (!kinds.count(k.kind)) throw ConfigError("channel.kind '" + k.kind + "' is not supported");
        if (k.delay < 0 || k.T_d < 0 || k.max_consecutive_drops < 0) throw ConfigError("channel: delays and caps must be >= 0");
        if (!(k.p >= 0.0 && k.p < 1.0)) throw ConfigError("channel.p must lie in [0, 1)");
        if (k.kind == "schedule" && k.file.empty()) throw ConfigError("channel.file is required for kind schedule");
    }
    if (!c.async && c.channel.kind != "none") throw ConfigError("a channel model requires mode async");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_config(j, dir.empty() ? "." : dir.string());
}

namespace {

DependencyGraph scalar_graph(const std::string& kind, int m) {
    BlockLayout blocks{std::vector<int>(m, 1)};
    if (kind == "complete") return DependencyGraph::complete(blocks);
    if (kind == "chain") return DependencyGraph::chain(blocks);
    if (kind == "empty") return DependencyGraph::empty(blocks);
    throw ConfigError("problem.graph must be complete, chain or empty");
}

void build_affine(const ExperimentConfig& c, std::uint64_t seed, BuiltExperiment& b) {
    const Json& p = c.problem_params;
    const double rate = get_or<double>(p, "sigma_scale", 1.0, "problem");
    const auto inst = get_or<std::uint64_t>(p, "instance_seed", 1, "problem");
    const int m = get_or<int>(p, "m", 0, "problem");
    const double L = get_or<double>(p, "target_L", 0.0, "problem");
    if (m < 1) throw ConfigError("problem.m must be >= 1");
    if (!(L > 0.0 && L < 1.0)) throw ConfigError("problem.target_L must lie in (0, 1)");
    const std::string pattern_name = get_or<std::string>(p, "pattern", "dense", "problem");
    const AffinePattern pattern = parse_affine_pattern(pattern_name);
    const NormKind norm = c.norm.value_or(NormKind::Two);

    DriftSpec drift;
    if (p.contains("drift")) {
        const Json& d = p.at("drift");
        drift.kind = parse_drift_kind(get_or<std::string>(d, "kind", "constant", "problem.drift"));
        drift.sigma = rate * get_or<double>(d, "sigma", 0.0, "problem.drift");
        drift.step_bound = rate * get_or<double>(d, "step_bound", 0.0, "problem.drift");
        drift.fast_start = get_or<int>(d, "fast_start", 0, "problem.drift");
        drift.fast_end = get_or<int>(d, "fast_end", 0, "problem.drift");
        drift.fast_factor = get_or<double>(d, "fast_factor", 1.0, "problem.drift");
        drift.horizon = c.horizon;
    }
    AffineProblem prob = build_affine_family(m, norm, L, drift, inst, pattern);
    b.norm = NormSpec(norm);
    double bound = 0.0;
    PerturbationMode mode = PerturbationMode::UniformBall;
    if (p.contains("perturbation")) {
        bound = get_or<double>(p.at("perturbation"), "bound", 0.0, "problem.perturbation");
        mode = mode_from(p.at("perturbation"), "mode", "problem.perturbation");
        if (bound < 0.0) throw ConfigError("problem.perturbation.bound must be >= 0");
    }
    b.map = bound > 0.0 ? with_additive_perturbation(prob.family, mode, [bound](Tick) { return bound; }, bound, b.norm, seed)
                        : InexactMapFamily::exact(prob.family);
    const std::string def = pattern == AffinePattern::Dense ? "complete"
                            : pattern == AffinePattern::Tridiagonal ? "chain"
                                                                    : "empty";
    b.graph = scalar_graph(get_or<std::string>(p, "graph", def, "problem"), m);
    b.agents = m;
}

void build_qp(const ExperimentConfig& c, std::uint64_t seed, BuiltExperiment& b) {
    const Json& p = c.problem_params;
    const double rate = get_or<double>(p, "sigma_scale", 1.0, "problem");
    const auto inst = get_or<std::uint64_t>(p, "instance_seed", 1, "problem");
    TimeVaryingQP qp;
    if (p.contains("instance")) {
        qp = qp_from_json(p.at("instance"), rate);
    } else if (p.contains("random")) {
        const Json& r = p.at("random");
        qp = random_qp(get_or<int>(r, "agents", 7, "problem.random"), get_or<double>(r, "gamma", 1.0, "problem.random"),
                       get_or<double>(r, "eta", 0.1, "problem.random"), inst);
        if (rate != 1.0) {
            const ScalarSeries w = qp.w, rr = qp.r;
            qp.w = [w, rate](Tick t) { return w(static_cast<Tick>(std::lround(rate * t))); };
            qp.r = [rr, rate](Tick t) { return rr(static_cast<Tick>(std::lround(rate * t))); };
        }
    } else {
        throw ConfigError("problem: qp-gradient needs 'instance' or 'random'");
    }
    const double alpha = get_or<double>(p, "alpha", 0.0, "problem");
    const double nb = get_or<double>(p, "noise_bound", 0.0, "problem");
    if (!(alpha > 0.0)) throw ConfigError("problem.alpha must be positive");
    if (nb < 0.0) throw ConfigError("problem.noise_bound must be >= 0");
    const PerturbationMode mode = mode_from(p, "noise_mode", "problem");
    const std::string form = get_or<std::string>(p, "formulation", "flat", "problem");
    if (form == "flat") {
        b.norm = NormSpec(c.norm.value_or(NormKind::Two));
        b.map = build_feedback_gradient_map(qp, alpha, nb, seed, b.norm, mode);
        b.graph = DependencyGraph::complete(BlockLayout{std::vector<int>(qp.agents(), 1)});
        b.agents = qp.agents();
    } else if (form == "star") {
        if (c.norm.value_or(NormKind::Two) != NormKind::Two) throw ConfigError("the star formulation is certified in ell_2 only");
        b.norm = NormSpec::two();
        StarFeedbackModel model = build_star_feedback_map(qp, alpha, nb, seed, mode);
        b.map = std::move(model.map);
        b.graph = std::move(model.graph);
        b.agents = qp.agents() + 1;
    } else {
        throw ConfigError("problem.formulation must be flat or star");
    }
    b.qp = qp;
    b.alpha = alpha;
}

void build_loadflow(const ExperimentConfig& c, std::uint64_t seed, BuiltExperiment& b) {
    const Json& p = c.problem_params;
    const double rate = get_or<double>(p, "sigma_scale", 1.0, "problem");
    const auto inst = get_or<std::uint64_t>(p, "instance_seed", 1, "problem");
    if (c.norm && *c.norm != NormKind::Inf) throw ConfigError("load flow is certified in the (weighted) ell_inf norm only");
    const Json net_json = p.value("network", Json("synthetic"));
    const PowerNetwork net = network_from_json(net_json);
    const LoadProfile loads =
        loads_from_json(p.value("loads", Json::object()), net, net_json.is_string(), c.horizon, inst, rate);
    const double nb = get_or<double>(p, "noise_bound", 0.0, "problem");
    if (nb < 0.0) throw ConfigError("problem.noise_bound must be >= 0");
    const std::string form = get_or<std::string>(p, "formulation", "multiarea", "problem");
    if (form == "multiarea") {
        MultiAreaModel model = build_multiarea_maps(net, loads, nb, seed, c.horizon, mode_from(p, "noise_mode", "problem"),
                                                    get_or<double>(p, "rho", 0.5, "problem"));
        b.map = std::move(model.map);
        b.norm = model.norm;
        b.graph = std::move(model.graph);
        b.agents = net.areas();
    } else if (form == "monolithic") {
        if (c.async) throw ConfigError("the monolithic load flow has a single agent; use formulation multiarea for async");
        if (nb != 0.0) throw ConfigError("the monolithic load flow has no measured quantities (noise_bound must be 0)");
        b.map = InexactMapFamily::exact(build_loadflow_map(net, loads));
        b.norm = NormSpec::inf();
        b.agents = 1;
    } else {
        throw ConfigError("problem.formulation must be multiarea or monolithic");
    }
}

ChannelModel build_channels(const ExperimentConfig& c, const DependencyGraph* graph, std::uint64_t seed) {
    ChannelModel m;
    m.seed = seed;
    const ChannelConfig& k = c.channel;
    if (k.kind == "none") return m;
    if (k.kind == "fixed_delay") {
        m.default_policy = FixedDelay{k.delay};
        return m;
    }
    if (k.kind == "iid_drop") {
        m.default_policy = IidDrop{k.p, k.max_consecutive_drops};
        return m;
    }
    m.default_policy = Scheduled{};
    const std::uint64_t phase = k.phase.value_or(seed);
    if (k.kind == "sawtooth") m.schedule = sawtooth_schedule(*graph, k.T_d, c.horizon, phase);
    else if (k.kind == "staggered") m.schedule = staggered_schedule(*graph, k.T_d, c.horizon, phase);
    else {
        const auto path = std::filesystem::path(c.base_dir) / k.file;
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open schedule '" + path.string() + "'");
        m.schedule = read_schedule_csv(in);
    }
    if (k.declared_T_d) m.schedule.declared_T_d = k.declared_T_d;
    m.schedule.allow_non_monotone = k.allow_non_monotone;
    return m;
}

}  // namespace

BuiltExperiment build_experiment(const ExperimentConfig& c, std::uint64_t seed) {
    BuiltExperiment b;
    try {
        if (c.problem == "affine") build_affine(c, seed, b);
        else if (c.problem == "qp-gradient") build_qp(c, seed, b);
        else build_loadflow(c, seed, b);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("problem: ") + e.what());
    }
    if (c.async) b.channels = build_channels(c, &*b.graph, seed);

    const DomainSpec& D = b.map.domain();
    if (c.x0.is_string()) {
        if (c.x0.get<std::string>() != "anchor") throw ConfigError("config.x0: the only named start is \"anchor\"");
        b.x0 = D.anchor();
    } else {
        Vector x(static_cast<int>(c.x0.size()));
        for (std::size_t i = 0; i < c.x0.size(); ++i) x(static_cast<int>(i)) = c.x0[i].get<double>();
        if (x.size() != b.map.dimension()) throw ConfigError("config.x0 has the wrong length");
        if (!D.contains(x)) throw ConfigError("config.x0 lies outside the map's domain");
        b.x0 = x;
    }
    return b;
}

bool ExperimentReport::certificates_ok() const {
    return std::none_of(certificates.begin(), certificates.end(),
                        [](const Certificate& c) { return c.verdict == Verdict::Fail; });
}

bool ExperimentReport::audit_ok() const {
    return std::all_of(audit.begin(), audit.end(), [](const AuditItem& a) { return a.ok; });
}

std::vector<Certificate> verify_bounds(const ExperimentReport& r) {
    std::vector<Certificate> out;
    const BoundInputs& in = r.inputs;
    const double tail = tail_max(r.trace.errors, r.window);
    auto tail_check = [&](const std::string& name, auto&& bound_fn) {
        Certificate c;
        c.name = name;
        c.observed = tail;
        try {
            c.bound = bound_fn(in);
            c.verdict = tail <= c.bound + kSlack ? Verdict::Pass : Verdict::Fail;
        } catch (const PreconditionFailed& e) {
            c.verdict = Verdict::NotApplicable;
            c.bound = kNaN;
            c.note = e.what();
        }
        out.push_back(std::move(c));
    };

    if (!r.async) {
        Certificate c;
        c.name = "theorem1_per_iterate";
        c.verdict = Verdict::Pass;
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < r.per_iterate_bound.size() && k < r.trace.errors.size(); ++k) {
            const double gap = r.trace.errors[k] - r.per_iterate_bound[k];
            if (gap > worst) {
                worst = gap;
                c.bound = r.per_iterate_bound[k];
                c.observed = r.trace.errors[k];
                c.note = "tightest at t=" + std::to_string(k + 1);
            }
            if (gap > kSlack) c.verdict = Verdict::Fail;
        }
        out.push_back(std::move(c));
        tail_check("theorem1_asymptotic", asymptotic_bound_sync);
        for (const char* name : {"theorem2_async_inf", "corollary1_async_l2", "theorem3_async_l2"})
            out.push_back({name, Verdict::NotApplicable, kNaN, tail, "synchronous run"});
    } else {
        out.push_back({"theorem1_per_iterate", Verdict::NotApplicable, kNaN, tail, "asynchronous run"});
        out.push_back({"theorem1_asymptotic", Verdict::NotApplicable, kNaN, tail, "asynchronous run"});
        tail_check("theorem2_async_inf", asymptotic_bound_async_inf);
        tail_check("corollary1_async_l2", asymptotic_bound_async_l2_equiv);
        tail_check("theorem3_async_l2", asymptotic_bound_async_l2_refined);

        Certificate lemma{"lemma1_recursion", Verdict::NotApplicable, kNaN, kNaN, ""};
        if (in.norm == NormKind::Inf && in.L > 0.0 && in.L < 1.0) {
            const int T = in.T_d + 1;
            std::vector<double> initial(T);
            for (int k = 0; k < T; ++k)
                initial[k] = r.trace.errors[std::min<std::size_t>(k, r.trace.errors.size() - 1)];
            const double b = in.e_f + in.sigma * (1.0 + in.L * in.T_d);
            const int horizon = std::max<int>(static_cast<int>(r.trace.errors.size()), 10 * T + 10);
            const auto chk = check_delayed_recursion_limsup(b, in.L, T, [T](int t) { return 1 + t % T; }, initial, horizon);
            lemma.bound = chk.bound;
            lemma.observed = chk.empirical_limsup;
            lemma.verdict = chk.pass ? Verdict::Pass : Verdict::Fail;
        } else {
            lemma.note = "needs the infinity norm and 0 < L < 1";
        }
        out.push_back(std::move(lemma));
    }

    if (r.step_window || r.alpha > 0.0) {
        Certificate c{"step_window", Verdict::NotApplicable, kNaN, r.alpha, ""};
        if (r.step_window) {
            c.bound = r.step_window->hi;
            c.note = "window [" + format_double(r.step_window->lo) + ", " + format_double(r.step_window->hi) + "]";
            if (r.step_window->contains(r.alpha)) c.verdict = Verdict::Pass;
            else c.note += " does not contain alpha";
        } else {
            c.note = "empty window: regularization below the minimum";
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<AuditItem> audit_experiment(const BuiltExperiment& b, const ExperimentConfig& c, int samples) {
    std::vector<AuditItem> out;
    const MapFamily& f = b.map.base;
    out.push_back({"contraction_declared", f.declared_L_sup < 1.0, f.declared_L_sup, 1.0, "declared L_sup < 1"});
    if (samples <= 0) return out;
    std::set<Tick> ticks{1, (c.horizon + 1) / 2, c.horizon};
    AuditItem lip{"lipschitz_estimate", true, 0.0, 0.0, ""};
    AuditItem self{"self_map", true, static_cast<double>(samples), 0.0, ""};
    AuditItem self_inexact{"self_map_inexact", true, static_cast<double>(samples), 0.0, ""};
    AuditItem ef{"inexactness", true, 0.0, 0.0, ""};
    double worst_lip = -std::numeric_limits<double>::infinity();
    double worst_ef = -std::numeric_limits<double>::infinity();
    for (Tick t : ticks) {
        const std::uint64_t s = c.seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(t);
        DomainSampler sampler(f.domain, s);
        const auto est = estimate_lipschitz(f, t, sampler, samples, b.norm);
        const double dl = f.declared_L(t);
        if (est.value - dl > worst_lip) {
            worst_lip = est.value - dl;
            lip.value = est.value;
            lip.limit = dl;
            lip.note = "worst at t=" + std::to_string(t);
        }
        if (est.value > dl + kSlack) lip.ok = false;

        DomainSampler s2(f.domain, s + 1);
        if (!verify_self_map(f, t, s2, samples).ok) {
            self.ok = false;
            self.note = "counterexample at t=" + std::to_string(t);
        }
        DomainSampler s3(f.domain, s + 2);
        if (!verify_self_map(f.domain, b.map.evaluator, t, s3, samples).ok) {
            self_inexact.ok = false;
            self_inexact.note = "counterexample at t=" + std::to_string(t);
        }
        DomainSampler s4(f.domain, s + 3);
        const double e = estimate_inexactness(b.map, t, s4, samples, b.norm);
        const double eb = b.map.e_f_bound(t);
        if (e - eb > worst_ef) {
            worst_ef = e - eb;
            ef.value = e;
            ef.limit = eb;
            ef.note = "worst at t=" + std::to_string(t);
        }
        if (e > eb + kSlack) ef.ok = false;
    }
    out.push_back(lip);
    out.push_back(self);
    out.push_back(self_inexact);
    out.push_back(ef);
    if (b.graph) {
        const auto dep = audit_dependency_graph(f, *b.graph, std::min(samples, 1000), c.seed);
        AuditItem a{"dependency_graph", dep.ok, static_cast<double>(dep.violations.size()), 0.0, ""};
        for (const auto& [src, dst] : dep.violations)
            a.note += "(" + std::to_string(src) + "," + std::to_string(dst) + ") ";
        out.push_back(a);
    }
    return out;
}

ExperimentReport run_experiment(const ExperimentConfig& c, int audit_samples) {
    if (audit_samples < 0) audit_samples = c.audit_samples;
    ExperimentReport r;
    r.problem = c.problem;
    r.async = c.async;
    r.window = tail_window(c.horizon, c.tail_fraction, c.transient);
    std::optional<BuiltExperiment> first;
    for (int k = 0; k < c.seeds; ++k) {
        const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(k);
        BuiltExperiment b = build_experiment(c, seed);
        TrackingTrace trace = c.async ? run_async_tracker(b.map, *b.graph, b.channels, b.x0, c.horizon, b.norm, seed)
                                      : run_online_tracker(b.map, b.x0, c.horizon, b.norm, seed);
        r.seeds.push_back(seed);
        r.seed_tail_errors.push_back(tail_max(trace.errors, r.window));
        if (k == 0) {
            r.trace = std::move(trace);
            first = std::move(b);
        }
    }
    r.median_tail_error = median(r.seed_tail_errors);
    r.tail_error = r.seed_tail_errors.front();

    const TrackingTrace& tr = r.trace;
    BoundInputs& in = r.inputs;
    in.L = *std::max_element(tr.L_series.begin(), tr.L_series.end());
    in.e_f = *std::max_element(tr.e_f_series.begin(), tr.e_f_series.end());
    in.sigma = tr.reference.sigma_sup;
    in.T_d = tr.delay ? tr.delay->realized_T_d : 0;
    in.N_d = tr.delay ? tr.delay->realized_N_d : 0;
    in.m = first->agents;
    in.norm = first->norm.kind();

    if (!c.async) {
        r.per_iterate_bound = per_iterate_bound_series(tr.errors.front(), tr.e_f_series,
                                                       tr.reference.sigma_series, tr.L_series, c.horizon);
    }
    auto try_bound = [&](auto fn) {
        try {
            return fn(in);
        } catch (const PreconditionFailed&) {
            return kNaN;
        }
    };
    if (!c.async) r.asymptotic_bound = try_bound(asymptotic_bound_sync);
    else if (in.norm == NormKind::Inf) r.asymptotic_bound = try_bound(asymptotic_bound_async_inf);
    else {
        r.asymptotic_bound = try_bound(asymptotic_bound_async_l2_refined);
        if (std::isnan(r.asymptotic_bound)) r.asymptotic_bound = try_bound(asymptotic_bound_async_l2_equiv);
    }

    if (first->qp) {
        r.alpha = first->alpha;
        r.step_window = gradient_step_window(first->qp->smoothness(), std::max(first->qp->eta, 1e-300),
                                             c.async ? in.N_d : 0);
    }
    r.certificates = verify_bounds(r);
    r.audit = audit_experiment(*first, c, audit_samples);
    return r;
}

void write_trace_csv(std::ostream& out, const ExperimentReport& r) {
    out << "t,error,per_iterate_bound,asymptotic_bound,realized_Td_so_far,realized_Nd_so_far\n";
    const auto& tr = r.trace;
    for (std::size_t k = 0; k < tr.errors.size(); ++k) {
        const double pib = k < r.per_iterate_bound.size() ? r.per_iterate_bound[k] : kNaN;
        const int td = tr.delay ? tr.delay->T_d_so_far[k] : 0;
        const int nd = tr.delay ? tr.delay->N_d_so_far[k] : 0;
        out << (k + 1) << ',' << format_double(tr.errors[k]) << ',' << format_double(pib) << ','
            << format_double(r.asymptotic_bound) << ',' << td << ',' << nd << '\n';
    }
}

Json report_to_json(const ExperimentReport& r) {
    Json j;
    j["problem"] = r.problem;
    j["mode"] = r.async ? "async" : "sync";
    j["horizon"] = r.trace.errors.size();
    j["norm"] = std::string(to_string(r.inputs.norm));
    j["inputs"] = {{"L", r.inputs.L},     {"e_f", r.inputs.e_f}, {"sigma", r.inputs.sigma},
                   {"T_d", r.inputs.T_d}, {"N_d", r.inputs.N_d}, {"m", r.inputs.m}};
    j["tail_window"] = {r.window.first, r.window.last};
    j["tail_error"] = r.tail_error;
    j["seeds"] = r.seeds;
    j["seed_tail_errors"] = r.seed_tail_errors;
    j["median_tail_error"] = r.median_tail_error;
    j["asymptotic_bound"] = r.asymptotic_bound;
    if (r.trace.delay) {
        const DelayStats& d = *r.trace.delay;
        j["delay"] = {{"realized_T_d", d.realized_T_d},
                      {"realized_N_d", d.realized_N_d},
                      {"drop_cap", d.drop_cap},
                      {"non_monotone", d.non_monotone}};
    }
    if (r.alpha > 0.0) {
        j["alpha"] = r.alpha;
        j["step_window"] = r.step_window ? Json{r.step_window->lo, r.step_window->hi} : Json(nullptr);
    }
    Json certs = Json::array();
    for (const auto& c : r.certificates)
        certs.push_back({{"name", c.name}, {"verdict", to_string(c.verdict)}, {"bound", c.bound},
                         {"observed", c.observed}, {"note", c.note}});
    j["certificates"] = certs;
    Json audit = Json::array();
    for (const auto& a : r.audit)
        audit.push_back({{"name", a.name}, {"ok", a.ok}, {"value", a.value}, {"limit", a.limit}, {"note", a.note}});
    j["audit"] = audit;
    j["certificates_ok"] = r.certificates_ok();
    j["audit_ok"] = r.audit_ok();
    return j;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp + "'");
        out << contents;
        if (!out) throw Error("write to '" + tmp + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

std::string trend(const std::vector<double>& v) {
    bool strict = true, nondec = true, noninc = true;
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (!(v[k] > v[k - 1])) strict = false;
        if (!(v[k] >= v[k - 1])) nondec = false;
        if (!(v[k] <= v[k - 1])) noninc = false;
    }
    if (strict) return "strictly_increasing";
    if (nondec) return "nondecreasing";
    if (noninc) return "nonincreasing";
    return "mixed";
}

SweepResult sweep(const ExperimentConfig& c, const std::string& param, const std::vector<double>& values) {
    static const std::set<std::string> params{"drop_probability", "T_d", "alpha", "noise_bound", "sigma_scale"};
    if (!params.count(param))
        throw ConfigError("sweep parameter must be one of drop_probability, T_d, alpha, noise_bound, sigma_scale");
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    SweepResult out;
    out.parameter = param;
    std::vector<double> errors, bounds;
    for (double v : values) {
        Json j = c.raw;
        Json& p = j["problem"];
        if (param == "drop_probability") {
            if (!c.async) throw ConfigError("drop_probability sweeps need mode async");
            if (c.channel.kind != "none" && c.channel.kind != "iid_drop")
                throw ConfigError("drop_probability sweeps need channel kind iid_drop");
            j["channel"]["kind"] = "iid_drop";
            j["channel"]["p"] = v;
        } else if (param == "T_d") {
            const int td = static_cast<int>(std::lround(v));
            if (c.channel.kind == "fixed_delay") j["channel"]["delay"] = td;
            else if (c.channel.kind == "sawtooth" || c.channel.kind == "staggered") j["channel"]["T_d"] = td;
            else throw ConfigError("T_d sweeps need channel kind fixed_delay, sawtooth or staggered");
        } else if (param == "alpha") {
            if (c.problem != "qp-gradient") throw ConfigError("alpha sweeps apply to qp-gradient problems");
            p["alpha"] = v;
        } else if (param == "noise_bound") {
            if (c.problem == "affine") p["perturbation"]["bound"] = v;
            else p["noise_bound"] = v;
        } else {
            p["sigma_scale"] = v;
        }
        const ExperimentConfig cell = parse_config(j, c.base_dir);
        const ExperimentReport r = run_experiment(cell, 0);
        SweepRow row{v, r.median_tail_error, r.asymptotic_bound, r.certificates_ok(), r.certificates};
        errors.push_back(row.median_tail_error);
        bounds.push_back(row.asymptotic_bound);
        out.rows.push_back(std::move(row));
    }
    out.error_trend = trend(errors);
    out.bound_trend = trend(bounds);
    return out;
}

Json sweep_to_json(const SweepResult& s) {
    Json rows = Json::array();
    for (const auto& r : s.rows) {
        Json certs = Json::object();
        for (const auto& c : r.certificates) certs[c.name] = to_string(c.verdict);
        rows.push_back({{"value", r.value}, {"median_tail_error", r.median_tail_error},
                        {"asymptotic_bound", r.asymptotic_bound}, {"certificates_ok", r.certificates_ok},
                        {"certificates", certs}});
    }
    return {{"parameter", s.parameter}, {"rows", rows}, {"error_trend", s.error_trend}, {"bound_trend", s.bound_trend}};
}

BoundInputs bound_inputs_from_json(const Json& j) {
    reject_unknown_keys(j, {"L", "e_f", "sigma", "T_d", "N_d", "m", "norm", "M", "eta"}, "bounds");
    BoundInputs in;
    in.L = get_or<double>(j, "L", 0.0, "bounds");
    in.e_f = get_or<double>(j, "e_f", 0.0, "bounds");
    in.sigma = get_or<double>(j, "sigma", 0.0, "bounds");
    in.T_d = get_or<int>(j, "T_d", 0, "bounds");
    in.N_d = get_or<int>(j, "N_d", 0, "bounds");
    in.m = get_or<int>(j, "m", 1, "bounds");
    try {
        in.norm = parse_norm_kind(get_or<std::string>(j, "norm", "ell_2", "bounds"));
        in.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("bounds: ") + e.what());
    }
    return in;
}

Json bounds_table(const BoundInputs& in) {
    Json j;
    auto entry = [&](const char* name, auto fn) {
        try {
            j[name] = fn(in);
        } catch (const PreconditionFailed& e) {
            j[name] = {{"not_applicable", e.what()}};
        }
    };
    entry("theorem1_sync", asymptotic_bound_sync);
    entry("theorem2_async_inf", asymptotic_bound_async_inf);
    entry("corollary1_async_l2", asymptotic_bound_async_l2_equiv);
    entry("theorem3_async_l2", asymptotic_bound_async_l2_refined);
    return j;
}

}  // namespace tvfp
