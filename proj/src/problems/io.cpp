#include "tvfp/problems/io.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

namespace tvfp {

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& item : j.items()) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
        if (!ok) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

namespace {

double number(const Json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

double number_or(const Json& j, const char* key, double fallback, const std::string& where) {
    return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
}

Vector vector_from(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nonempty array of numbers");
    Vector v(static_cast<int>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = number(j[i], where);
    return v;
}

Complex complex_from(const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": expected [re, im]");
    return {number(j[0], where), number(j[1], where)};
}

ComplexVector complex_vector_from(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected an array of [re, im] pairs");
    ComplexVector v(static_cast<int>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = complex_from(j[i], where);
    return v;
}

}  // namespace

ScalarSeries series_from_json(const Json& j, const std::string& where, double rate) {
    if (j.is_number()) {
        const double v = j.get<double>();
        return [v](Tick) { return v; };
    }
    if (j.is_array()) {
        const Vector v = vector_from(j, where);
        return [v](Tick t) { return v(std::clamp<int>(t, 1, static_cast<int>(v.size())) - 1); };
    }
    if (!j.is_object() || !j.contains("kind")) throw ConfigError(where + ": expected a number, an array or a {kind} object");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "sinusoid") {
        reject_unknown_keys(j, {"kind", "offset", "amplitude", "period", "phase"}, where);
        const double off = number_or(j, "offset", 0.0, where), amp = number_or(j, "amplitude", 0.0, where);
        const double period = number_or(j, "period", 100.0, where), phase = number_or(j, "phase", 0.0, where);
        if (!(period > 0.0)) throw ConfigError(where + ": period must be positive");
        const double omega = 2.0 * std::numbers::pi * rate / period;
        return [off, amp, omega, phase](Tick t) { return off + amp * std::sin(omega * t + phase); };
    }
    if (kind == "ramp") {
        reject_unknown_keys(j, {"kind", "start", "slope"}, where);
        const double start = number_or(j, "start", 0.0, where), slope = rate * number_or(j, "slope", 0.0, where);
        return [start, slope](Tick t) { return start + slope * (t - 1); };
    }
    throw ConfigError(where + ": unknown series kind '" + kind + "'");
}

TimeVaryingQP qp_from_json(const Json& j, double rate) {
    reject_unknown_keys(j, {"a", "c", "lo", "hi", "gamma", "eta", "w", "r"}, "qp");
    for (const char* k : {"a", "c", "lo", "hi"})
        if (!j.contains(k)) throw ConfigError(std::string("qp: missing '") + k + "'");
    TimeVaryingQP qp;
    qp.a = vector_from(j.at("a"), "qp.a");
    qp.c = vector_from(j.at("c"), "qp.c");
    qp.lo = vector_from(j.at("lo"), "qp.lo");
    qp.hi = vector_from(j.at("hi"), "qp.hi");
    qp.gamma = number_or(j, "gamma", 1.0, "qp");
    qp.eta = number_or(j, "eta", 0.0, "qp");
    qp.w = series_from_json(j.value("w", Json(0.0)), "qp.w", rate);
    qp.r = series_from_json(j.value("r", Json(0.0)), "qp.r", rate);
    try {
        qp.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return qp;
}

PowerNetwork network_from_json(const Json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "synthetic") return synthetic_three_area_network();
        throw ConfigError("network: the only named network is 'synthetic'");
    }
    reject_unknown_keys(j, {"buses", "slack_voltage", "lines", "areas", "ball_radius"}, "network");
    PowerNetwork net;
    if (!j.contains("buses") || !j.contains("lines")) throw ConfigError("network: 'buses' and 'lines' are required");
    net.buses = j.at("buses").get<int>();
    if (j.contains("slack_voltage")) net.slack_voltage = complex_from(j.at("slack_voltage"), "network.slack_voltage");
    for (const auto& l : j.at("lines")) {
        reject_unknown_keys(l, {"from", "to", "z"}, "network.lines[]");
        net.lines.push_back({l.at("from").get<int>(), l.at("to").get<int>(), complex_from(l.at("z"), "network.lines[].z")});
    }
    net.area = j.contains("areas") ? j.at("areas").get<std::vector<int>>() : std::vector<int>(net.buses, 0);
    net.ball_radius = number_or(j, "ball_radius", 0.2, "network");
    try {
        net.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return net;
}

LoadProfile loads_from_json(const Json& j, const PowerNetwork& net, bool synthetic, int horizon,
                            std::uint64_t seed, double rate) {
    reject_unknown_keys(j, {"kind", "base", "step", "spread", "amplitude", "period", "values"}, "loads");
    const std::string kind = j.value("kind", std::string("constant"));
    const int n = net.load_buses();
    ComplexVector base;
    if (j.contains("base")) base = complex_vector_from(j.at("base"), "loads.base");
    else if (synthetic) base = synthetic_base_loads();
    else if (kind != "series") throw ConfigError("loads: 'base' is required for custom networks");
    if (kind != "series" && base.size() != n) throw ConfigError("loads: one base injection per load bus is required");

    try {
        if (kind == "constant") return constant_loads(base);
        if (kind == "random_walk")
            return random_walk_loads(base, rate * number_or(j, "step", 0.01, "loads"), number_or(j, "spread", 0.3, "loads"),
                                     horizon, seed);
        if (kind == "sinusoid")
            return sinusoidal_loads(base, number_or(j, "amplitude", 0.2, "loads"),
                                    number_or(j, "period", 200.0, "loads") / rate);
    } catch (const PreconditionFailed& e) {
        throw ConfigError(e.what());
    }
    if (kind == "series") {
        if (!j.contains("values") || !j.at("values").is_array() || j.at("values").empty())
            throw ConfigError("loads.values: expected one array of injections per tick");
        auto path = std::make_shared<std::vector<ComplexVector>>();
        Vector limit = Vector::Zero(n);
        for (const auto& row : j.at("values")) {
            path->push_back(complex_vector_from(row, "loads.values"));
            if (path->back().size() != n) throw ConfigError("loads.values: one injection per load bus per tick");
            limit = limit.cwiseMax(path->back().cwiseAbs());
        }
        LoadProfile p;
        p.limit = limit;
        p.s = [path](Tick t) { return (*path)[static_cast<std::size_t>(std::clamp<Tick>(t, 1, static_cast<Tick>(path->size())) - 1)]; };
        return p;
    }
    throw ConfigError("loads: unknown kind '" + kind + "'");
}

}  // namespace tvfp
