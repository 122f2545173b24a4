#pragma once

#include "tvfp/async_sim.hpp"
#include "tvfp/bounds.hpp"
#include "tvfp/core.hpp"
#include "tvfp/problems/gradient.hpp"
#include "tvfp/problems/io.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tvfp {

struct ChannelConfig {
    /// none | fixed_delay | iid_drop | schedule | sawtooth | staggered
    std::string kind = "none";
    int delay = 0;
    double p = 0.0;
    int max_consecutive_drops = 9;
    int T_d = 0;
    std::optional<std::uint64_t> phase;
    std::string file;
    std::optional<int> declared_T_d;
    bool allow_non_monotone = false;
};

struct ExperimentConfig {
    /// The document as given; sweeps edit it and re-parse.
    Json raw;
    std::string base_dir = ".";

    std::string problem;  // affine | qp-gradient | loadflow
    Json problem_params;
    bool async = false;
    std::optional<NormKind> norm;
    ChannelConfig channel;
    int horizon = 1000;
    double tail_fraction = 0.1;
    int transient = 0;
    std::uint64_t seed = 0;
    int seeds = 1;
    std::string output;
    std::string report;
    int audit_samples = 1000;
    Json x0 = "anchor";
};

/// Validates everything that can be checked without building the problem;
/// unknown keys are rejected. Throws ConfigError.
ExperimentConfig parse_config(const Json& j, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// A problem instance ready to run for one seed.
struct BuiltExperiment {
    InexactMapFamily map;
    NormSpec norm;
    std::optional<DependencyGraph> graph;
    ChannelModel channels;
    Vector x0;
    int agents = 1;
    /// Set for qp-gradient problems.
    std::optional<TimeVaryingQP> qp;
    double alpha = 0.0;
};

BuiltExperiment build_experiment(const ExperimentConfig& config, std::uint64_t seed);

enum class Verdict { Pass, Fail, NotApplicable };
std::string to_string(Verdict v);

struct Certificate {
    std::string name;
    Verdict verdict = Verdict::NotApplicable;
    double bound = 0.0;
    double observed = 0.0;
    std::string note;
};

struct AuditItem {
    std::string name;
    bool ok = true;
    double value = 0.0;
    double limit = 0.0;
    std::string note;
};

struct ExperimentReport {
    std::string problem;
    bool async = false;
    TrackingTrace trace;
    BoundInputs inputs;
    TailWindow window;
    double tail_error = 0.0;
    /// Entry k bounds error k+1; empty for asynchronous runs.
    std::vector<double> per_iterate_bound;
    /// The bound drawn in the CSV: the sync bound, the infinity-norm or
    /// the best applicable l2 bound (async); NaN when none applies.
    double asymptotic_bound = 0.0;
    std::vector<std::uint64_t> seeds;
    std::vector<double> seed_tail_errors;
    double median_tail_error = 0.0;
    std::optional<StepWindow> step_window;
    double alpha = 0.0;
    std::vector<Certificate> certificates;
    std::vector<AuditItem> audit;

    bool certificates_ok() const;
    bool audit_ok() const;
};

/// Tail-window maxima against every theorem applicable to the trace, with
/// 1e-9 slack. Uses only the trace, the bound inputs and the step window.
std::vector<Certificate> verify_bounds(const ExperimentReport& report);

/// Runs every seed, fills bounds and certificates and, when audit_samples
/// > 0, the assumption audit of the first seed's instance.
ExperimentReport run_experiment(const ExperimentConfig& config, int audit_samples = -1);

std::vector<AuditItem> audit_experiment(const BuiltExperiment& built, const ExperimentConfig& config, int samples);

/// t,error,per_iterate_bound,asymptotic_bound,realized_Td_so_far,realized_Nd_so_far
void write_trace_csv(std::ostream& out, const ExperimentReport& report);
Json report_to_json(const ExperimentReport& report);

/// Writes via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& contents);

struct SweepRow {
    double value = 0.0;
    double median_tail_error = 0.0;
    double asymptotic_bound = 0.0;
    bool certificates_ok = true;
    std::vector<Certificate> certificates;
};

struct SweepResult {
    std::string parameter;
    std::vector<SweepRow> rows;
    /// "strictly_increasing", "nondecreasing", "nonincreasing" or "mixed".
    std::string error_trend;
    std::string bound_trend;
};

/// parameter: drop_probability | T_d | alpha | noise_bound | sigma_scale.
SweepResult sweep(const ExperimentConfig& config, const std::string& parameter, const std::vector<double>& values);
Json sweep_to_json(const SweepResult& result);
std::string trend(const std::vector<double>& values);

BoundInputs bound_inputs_from_json(const Json& j);
/// Every bound formula for the inputs; inapplicable ones carry the reason.
Json bounds_table(const BoundInputs& in);

/// %.17g
std::string format_double(double v);

}  // namespace tvfp
