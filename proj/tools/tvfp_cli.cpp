// Command-line front end: run, sweep, bounds, audit.

#include "tvfp/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kCertificate = 3, kAudit = 4 };

void emit(const tvfp::ExperimentConfig& c, const tvfp::ExperimentReport& r) {
    if (!c.output.empty()) {
        std::ostringstream csv;
        tvfp::write_trace_csv(csv, r);
        tvfp::write_file_atomic(c.output, csv.str());
    }
    const std::string json = tvfp::report_to_json(r).dump(2) + "\n";
    if (!c.report.empty()) tvfp::write_file_atomic(c.report, json);
    std::cout << json;
}

int cmd_run(const std::string& path) {
    const auto c = tvfp::load_config(path);
    const auto r = tvfp::run_experiment(c);
    emit(c, r);
    if (!r.certificates_ok()) return kCertificate;
    if (!r.audit_ok()) return kAudit;
    return kOk;
}

int cmd_sweep(const std::string& path, const std::string& param, const std::vector<double>& values) {
    const auto c = tvfp::load_config(path);
    const auto s = tvfp::sweep(c, param, values);
    std::cout << tvfp::sweep_to_json(s).dump(2) << "\n";
    for (const auto& row : s.rows)
        if (!row.certificates_ok) return kCertificate;
    return kOk;
}

int cmd_bounds(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw tvfp::ConfigError("cannot open '" + path + "'");
    tvfp::Json j;
    try {
        j = tvfp::Json::parse(in);
    } catch (const tvfp::Json::exception& e) {
        throw tvfp::ConfigError(e.what());
    }
    const auto inputs = tvfp::bound_inputs_from_json(j);
    tvfp::Json out = tvfp::bounds_table(inputs);
    if (j.contains("M") && j.contains("eta")) {
        const double M = j.at("M").get<double>(), eta = j.at("eta").get<double>();
        try {
            const auto w = tvfp::gradient_step_window(M, eta, inputs.N_d);
            out["step_window"] = w ? tvfp::Json{w->lo, w->hi} : tvfp::Json(nullptr);
            out["min_regularization"] = tvfp::min_regularization(M, inputs.N_d);
            out["window_kappa"] = tvfp::window_kappa(inputs.N_d);
        } catch (const tvfp::PreconditionFailed& e) {
            throw tvfp::ConfigError(e.what());
        }
    }
    std::cout << out.dump(2) << "\n";
    return kOk;
}

int cmd_audit(const std::string& path) {
    const auto c = tvfp::load_config(path);
    const auto b = tvfp::build_experiment(c, c.seed);
    const auto items = tvfp::audit_experiment(b, c, c.audit_samples);
    tvfp::Json j = tvfp::Json::array();
    bool ok = true;
    for (const auto& a : items) {
        ok = ok && a.ok;
        j.push_back({{"name", a.name}, {"ok", a.ok}, {"value", a.value}, {"limit", a.limit}, {"note", a.note}});
    }
    std::cout << tvfp::Json{{"audit", j}, {"audit_ok", ok}}.dump(2) << "\n";
    return ok ? kOk : kAudit;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online and asynchronous fixed-point tracking experiments"};
    app.require_subcommand(1);

    std::string config, param, inputs;
    std::vector<double> values;
    auto* run = app.add_subcommand("run", "Run an experiment and check its bound certificates");
    run->add_option("config", config, "Experiment JSON")->required();
    auto* sw = app.add_subcommand("sweep", "Run one experiment per parameter value");
    sw->add_option("config", config, "Experiment JSON")->required();
    sw->add_option("--param", param, "drop_probability | T_d | alpha | noise_bound | sigma_scale")->required();
    sw->add_option("--values", values, "Values to sweep")->required()->delimiter(',');
    auto* bounds = app.add_subcommand("bounds", "Print every bound for the given constants");
    bounds->add_option("inputs", inputs, "JSON with L, e_f, sigma, T_d, N_d, m, norm")->required();
    auto* audit = app.add_subcommand("audit", "Check the assumptions of an experiment's maps");
    audit->add_option("config", config, "Experiment JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*run) return cmd_run(config);
        if (*sw) return cmd_sweep(config, param, values);
        if (*bounds) return cmd_bounds(inputs);
        if (*audit) return cmd_audit(config);
    } catch (const tvfp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const tvfp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
