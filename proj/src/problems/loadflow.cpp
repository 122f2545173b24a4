#include "tvfp/problems/loadflow.hpp"

#include "tvfp/core.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

namespace tvfp {

namespace {

constexpr double kMinVoltage = 1e-6;
const double kSqrt2 = std::sqrt(2.0);

Complex at_or_throw(const ComplexVector& v, int j, const char* who) {
    if (std::abs(v(j)) < kMinVoltage)
        throw DomainViolation(std::string(who) + ": near-zero voltage at load bus " + std::to_string(j + 1));
    return v(j);
}

ComplexMatrix admittance(int n, const std::vector<Line>& lines) {
    ComplexMatrix Y = ComplexMatrix::Zero(n, n);
    for (const auto& l : lines) {
        const Complex y = 1.0 / l.z;
        Y(l.from, l.from) += y;
        Y(l.to, l.to) += y;
        Y(l.from, l.to) -= y;
        Y(l.to, l.from) -= y;
    }
    return Y;
}

/// Local network with node 0 as source and nodes 1..k as loads: returns
/// Z = inv(Y_LL) and e = -Z Y_L0 so that v = e v_source + Z conj(s ./ v).
std::pair<ComplexMatrix, ComplexVector> reduce(int nodes, const std::vector<Line>& lines) {
    const ComplexMatrix Y = admittance(nodes, lines);
    const int k = nodes - 1;
    Eigen::FullPivLU<ComplexMatrix> lu(Y.bottomRightCorner(k, k));
    if (!lu.isInvertible()) throw PreconditionFailed("load-flow: singular admittance block (is every bus connected?)");
    ComplexMatrix Z = lu.inverse();
    ComplexVector e = -Z * Y.bottomLeftCorner(k, 1);
    return {std::move(Z), std::move(e)};
}

/// sum_j |Z_ij| lim_j per row. Over |v_j| >= v_min, sqrt(2) times its max over
/// v_min^2 bounds the l_inf Lipschitz constant, its max over v_min the deviation.
Vector weighted_row_sums(const ComplexMatrix& Z, const Vector& lim) {
    Vector out(Z.rows());
    for (int i = 0; i < Z.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < Z.cols(); ++j) s += std::abs(Z(i, j)) * lim(j);
        out(i) = s;
    }
    return out;
}

double real_gain(const ComplexVector& e) {
    double g = 0.0;
    for (int i = 0; i < e.size(); ++i) g = std::max(g, std::abs(e(i).real()) + std::abs(e(i).imag()));
    return g;
}

}  // namespace

int PowerNetwork::areas() const {
    int k = 0;
    for (int a : area) k = std::max(k, a + 1);
    return k;
}

void PowerNetwork::validate() const {
    if (buses < 2) throw PreconditionFailed("network: needs the slack bus and at least one load bus");
    if (static_cast<int>(area.size()) != buses) throw LengthMismatch("network: one area entry per bus is required");
    if (!(ball_radius > 0.0)) throw PreconditionFailed("network: ball radius must be positive");
    for (const auto& l : lines) {
        if (l.from < 0 || l.from >= buses || l.to < 0 || l.to >= buses || l.from == l.to)
            throw PreconditionFailed("network: bad line endpoints");
        if (std::abs(l.z) == 0.0) throw PreconditionFailed("network: zero line impedance");
    }
    for (int a : area)
        if (a < 0) throw PreconditionFailed("network: area indices must be nonnegative");
    if (std::abs(slack_voltage) < kMinVoltage) throw PreconditionFailed("network: slack voltage is zero");
}

LoadProfile constant_loads(ComplexVector s) {
    LoadProfile p;
    p.limit = s.cwiseAbs();
    p.s = [s](Tick) { return s; };
    return p;
}

LoadProfile random_walk_loads(ComplexVector base, double step, double spread, int horizon, std::uint64_t seed) {
    if (horizon < 1 || step < 0.0 || spread < 0.0 || spread >= 1.0)
        throw PreconditionFailed("random_walk_loads: need horizon >= 1, step >= 0, 0 <= spread < 1");
    const int n = static_cast<int>(base.size());
    auto path = std::make_shared<std::vector<ComplexVector>>();
    auto rng = make_rng(seed, 0x10ad);
    std::uniform_real_distribution<double> u(-step, step);
    Vector factor = Vector::Ones(n);
    for (int t = 1; t <= horizon; ++t) {
        if (t > 1)
            for (int j = 0; j < n; ++j) factor(j) = std::clamp(factor(j) + u(rng), 1.0 - spread, 1.0 + spread);
        path->push_back(base.cwiseProduct(factor.cast<Complex>()));
    }
    LoadProfile p;
    p.limit = base.cwiseAbs() * (1.0 + spread);
    p.s = [path](Tick t) { return (*path)[static_cast<std::size_t>(std::clamp<Tick>(t, 1, static_cast<Tick>(path->size())) - 1)]; };
    return p;
}

LoadProfile sinusoidal_loads(ComplexVector base, double amplitude, double period) {
    if (amplitude < 0.0 || amplitude >= 1.0 || !(period > 0.0))
        throw PreconditionFailed("sinusoidal_loads: need 0 <= amplitude < 1 and period > 0");
    const int n = static_cast<int>(base.size());
    LoadProfile p;
    p.limit = base.cwiseAbs() * (1.0 + amplitude);
    p.s = [base, amplitude, period, n](Tick t) {
        ComplexVector s(n);
        for (int j = 0; j < n; ++j)
            s(j) = base(j) * (1.0 + amplitude * std::sin(2.0 * std::numbers::pi * t / period + 0.5 * j));
        return s;
    };
    return p;
}

PowerNetwork synthetic_three_area_network() {
    PowerNetwork net;
    net.buses = 13;
    const Complex z{0.01, 0.02};
    for (auto [f, t] : {std::pair{0, 1}, {1, 2}, {2, 3}, {2, 4}, {3, 5}, {5, 6}, {6, 7}, {6, 8}, {7, 9}, {9, 10},
                        {10, 11}, {10, 12}})
        net.lines.push_back({f, t, z});
    net.area = {0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};
    return net;
}

ComplexVector synthetic_base_loads(std::uint64_t seed) {
    auto rng = make_rng(seed, 0x5b);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    ComplexVector s(12);
    for (int j = 0; j < 12; ++j) s(j) = -Complex(0.03, 0.01) * (1.0 + u(rng));
    return s;
}

PowerNetwork two_bus_network(Complex z, Complex slack_voltage) {
    PowerNetwork net;
    net.buses = 2;
    net.slack_voltage = slack_voltage;
    net.lines.push_back({0, 1, z});
    net.area = {0, 0};
    return net;
}

ComplexMatrix impedance_matrix(const PowerNetwork& net) {
    net.validate();
    return reduce(net.buses, net.lines).first;
}

Vector to_real(const ComplexVector& v) {
    Vector x(2 * v.size());
    for (int j = 0; j < v.size(); ++j) {
        x(2 * j) = v(j).real();
        x(2 * j + 1) = v(j).imag();
    }
    return x;
}

ComplexVector to_complex(const Vector& x) {
    if (x.size() % 2 != 0) throw LengthMismatch("to_complex: odd length");
    ComplexVector v(x.size() / 2);
    for (int j = 0; j < v.size(); ++j) v(j) = Complex(x(2 * j), x(2 * j + 1));
    return v;
}

MapFamily build_loadflow_map(const PowerNetwork& net, const LoadProfile& loads) {
    net.validate();
    const int n = net.load_buses();
    if (loads.limit.size() != n) throw LengthMismatch("build_loadflow_map: one load limit per load bus");
    auto [Z, e] = reduce(net.buses, net.lines);
    const ComplexVector w = e * net.slack_voltage;

    const double r = net.ball_radius;
    const double v_min = w.cwiseAbs().minCoeff() - kSqrt2 * r;
    if (!(v_min > 0.0)) throw ContractionUncertified("load-flow: ball reaches zero voltage");
    const Vector sums = weighted_row_sums(Z, loads.limit);
    const double L = kSqrt2 * sums.maxCoeff() / (v_min * v_min);
    const double reach = sums.maxCoeff() / v_min;
    if (!(L < 1.0))
        throw ContractionUncertified("load-flow: Lipschitz bound " + std::to_string(L) + " >= 1 on the declared ball");
    if (reach > r)
        throw ContractionUncertified("load-flow: map can leave the declared ball (deviation bound " +
                                     std::to_string(reach) + " > radius " + std::to_string(r) + ")");

    MapFamily f;
    f.name = "loadflow";
    f.dimension = 2 * n;
    f.domain = DomainSpec::ball(to_real(w), r, NormKind::Inf);
    const auto s = loads.s;
    f.evaluator = [Z = Z, w, s, n](const Vector& x, Tick t) -> Vector {
        const ComplexVector v = to_complex(x);
        const ComplexVector st = s(t);
        ComplexVector q(n);
        for (int j = 0; j < n; ++j) q(j) = std::conj(st(j) / at_or_throw(v, j, "loadflow"));
        return to_real(w + Z * q);
    };
    f.declared_L = [L](Tick) { return L; };
    f.declared_L_sup = L;
    return f;
}

Complex two_bus_fixed_point(Complex z, double w, Complex s) {
    if (!(w > 0.0)) throw PreconditionFailed("two_bus_fixed_point: w must be positive");
    // v conj(v) - w conj(v) = z conj(s) with v = w + p + iq.
    const Complex k = z * std::conj(s);
    const double q = k.imag() / w;
    const double disc = w * w - 4.0 * (q * q - k.real());
    if (disc < 0.0) throw PreconditionFailed("two_bus_fixed_point: no real solution (load too heavy)");
    const double p = (-w + std::sqrt(disc)) / 2.0;
    return {w + p, q};
}

AreaChain area_chain(const PowerNetwork& net) {
    net.validate();
    const int K = net.areas();
    AreaChain c;
    c.first_bus.assign(K, -1);
    c.bus_count.assign(K, 0);
    c.connection_bus.assign(K, -1);
    c.entry_bus.assign(K, -1);
    c.tie_z.assign(K, Complex{});
    if (net.area[0] != 0) throw PartitionUnsupported("area partition: the slack bus must belong to area 0");
    for (int b = 1; b < net.buses; ++b) {
        const int a = net.area[b];
        if (c.first_bus[a] < 0) c.first_bus[a] = b;
        else if (net.area[b - 1] != a) throw PartitionUnsupported("area partition: buses of each area must be contiguous");
        ++c.bus_count[a];
    }
    for (int a = 0; a < K; ++a)
        if (c.bus_count[a] == 0) throw PartitionUnsupported("area partition: area " + std::to_string(a) + " has no load bus");
    for (int a = 1; a < K; ++a)
        if (c.first_bus[a] < c.first_bus[a - 1]) throw PartitionUnsupported("area partition: areas must appear in order");
    for (const auto& l : net.lines) {
        int af = net.area[l.from], at = net.area[l.to];
        if (af == at) continue;
        int up = l.from, down = l.to;
        if (af > at) {
            std::swap(up, down);
            std::swap(af, at);
        }
        if (at != af + 1) throw PartitionUnsupported("area partition: tie line skips an area (not a chain)");
        if (up == 0) throw PartitionUnsupported("area partition: the slack bus may not sit on a tie line");
        if (c.connection_bus[at] >= 0) throw PartitionUnsupported("area partition: more than one tie line between areas");
        c.connection_bus[at] = up;
        c.entry_bus[at] = down;
        c.tie_z[at] = l.z;
    }
    for (int a = 1; a < K; ++a)
        if (c.connection_bus[a] < 0) throw PartitionUnsupported("area partition: area " + std::to_string(a) + " is not connected upstream");
    return c;
}

Vector boundary_injection(const Vector& v_area_j, const Vector& v_connection, const PowerNetwork& net, int area_j) {
    const AreaChain chain = area_chain(net);
    if (area_j < 1 || area_j >= net.areas()) throw IndexOutOfRange("boundary_injection: area has no upstream tie line");
    if (v_area_j.size() != 2 * chain.bus_count[area_j] || v_connection.size() != 2)
        throw LengthMismatch("boundary_injection: voltage vectors do not match the area");
    const int k = chain.entry_bus[area_j] - chain.first_bus[area_j];
    const Complex ve(v_area_j(2 * k), v_area_j(2 * k + 1));
    const Complex vc(v_connection(0), v_connection(1));
    if (std::abs(vc) < kMinVoltage) throw DomainViolation("boundary_injection: near-zero connection voltage");
    const Complex g = vc * std::conj((vc - ve) / chain.tie_z[area_j]);
    Vector out(2);
    out << g.real(), g.imag();
    return out;
}

namespace {

struct AreaData {
    int first = 0;  // first load-bus index (0-based among load buses)
    int count = 0;
    ComplexMatrix Z;
    ComplexVector e;
    int conn_local = -1;  // local index of the downstream connection bus, -1 for the last area
};

}  // namespace

MultiAreaModel build_multiarea_maps(const PowerNetwork& net, const LoadProfile& loads, double noise_bound,
                                    std::uint64_t seed, int horizon, PerturbationMode mode, double rho) {
    const AreaChain chain = area_chain(net);
    const int K = net.areas();
    const int n = net.load_buses();
    if (loads.limit.size() != n) throw LengthMismatch("build_multiarea_maps: one load limit per load bus");
    if (!(noise_bound >= 0.0)) throw PreconditionFailed("build_multiarea_maps: noise_bound must be >= 0");
    if (!(rho > 0.0 && rho < 1.0)) throw PreconditionFailed("build_multiarea_maps: rho must lie in (0, 1)");
    if (horizon < 1) throw PreconditionFailed("build_multiarea_maps: horizon must be >= 1");

    // Monolithic solution: source of the measured boundary flows and the reference.
    const MapFamily mono = build_loadflow_map(net, loads);
    const FixedPointSeries ref = compute_fixed_point_series(mono, horizon, NormSpec::inf());

    std::vector<AreaData> areas(K);
    for (int a = 0; a < K; ++a) {
        AreaData& d = areas[a];
        d.first = chain.first_bus[a] - 1;
        d.count = chain.bus_count[a];
        // Local node 0 is the source (slack or upstream connection bus).
        std::vector<Line> local;
        auto local_index = [&](int bus) {
            if (a == 0 && bus == 0) return 0;
            if (a > 0 && bus == chain.connection_bus[a]) return 0;
            if (net.area[bus] == a && bus != 0) return bus - chain.first_bus[a] + 1;
            return -1;
        };
        for (const auto& l : net.lines) {
            const int f = local_index(l.from), t = local_index(l.to);
            if (f < 0 || t < 0) continue;
            local.push_back({f, t, l.z});
        }
        std::tie(d.Z, d.e) = reduce(d.count + 1, local);
        if (a + 1 < K) d.conn_local = chain.connection_bus[a + 1] - chain.first_bus[a];
    }

    // Magnitude limits per area, including the boundary draw at the
    // downstream connection bus (bounded on the monolithic ball).
    const double w_abs = std::abs(net.slack_voltage);
    const double r_mono = net.ball_radius;
    const double vlo = w_abs - kSqrt2 * r_mono, vhi = w_abs + kSqrt2 * r_mono;
    std::vector<Vector> lim(K);
    for (int a = 0; a < K; ++a) {
        lim[a] = loads.limit.segment(areas[a].first, areas[a].count);
        if (a + 1 < K) {
            double downstream = 0.0;
            for (int j = areas[a + 1].first; j < n; ++j) downstream += loads.limit(j);
            lim[a](areas[a].conn_local) += vhi * downstream / vlo + noise_bound;
        }
    }

    // Per-area box radii: deviation from flat of the source plus what the
    // area's own loads can add, inflated by 20%.
    std::vector<double> R(K), vmin(K), area_L(K), gain(K, 0.0);
    double upstream = 0.0;
    for (int a = 0; a < K; ++a) {
        const double sums = weighted_row_sums(areas[a].Z, lim[a]).maxCoeff();
        if (a > 0) gain[a] = real_gain(areas[a].e);
        const double carried = gain[a] * upstream;
        double Ra = carried;
        for (int it = 0; it < 200; ++it) {
            const double vm = w_abs - kSqrt2 * Ra;
            if (!(vm > 0.0)) throw ContractionUncertified("multi-area: voltage box reaches zero in area " + std::to_string(a));
            const double next = carried + 1.2 * sums / vm;
            if (std::abs(next - Ra) < 1e-15) break;
            Ra = next;
        }
        R[a] = Ra;
        vmin[a] = w_abs - kSqrt2 * Ra;
        if (!(vmin[a] > 0.0) || carried + sums / vmin[a] > Ra)
            throw ContractionUncertified("multi-area: no invariant box for area " + std::to_string(a));
        area_L[a] = kSqrt2 * sums / (vmin[a] * vmin[a]);
        upstream = Ra;
    }
    double L = 0.0;
    for (int a = 0; a < K; ++a) L = std::max(L, area_L[a] + rho * gain[a]);
    if (!(L < 1.0))
        throw ContractionUncertified("multi-area: weighted constant " + std::to_string(L) + " >= 1; try another rho");

    // Weighted block max-norm and e_f.
    std::vector<int> sizes(K);
    std::vector<double> weights(K);
    double e_f = 0.0;
    for (int a = 0; a < K; ++a) {
        sizes[a] = 2 * areas[a].count;
        weights[a] = std::pow(rho, a);
        if (a + 1 < K) {
            double col = 0.0;
            for (int i = 0; i < areas[a].count; ++i) col = std::max(col, std::abs(areas[a].Z(i, areas[a].conn_local)));
            e_f = std::max(e_f, weights[a] * col * noise_bound / vmin[a]);
        }
    }
    const BlockLayout layout{sizes};
    const NormSpec norm(NormKind::Inf, layout, weights);

    Vector lo(2 * n), hi(2 * n);
    const Vector flat = to_real(ComplexVector::Constant(n, net.slack_voltage));
    for (int a = 0; a < K; ++a)
        for (int k = 2 * areas[a].first; k < 2 * (areas[a].first + areas[a].count); ++k) {
            lo(k) = flat(k) - R[a];
            hi(k) = flat(k) + R[a];
        }
    const DomainSpec domain = DomainSpec::box(lo, hi);

    auto points = std::make_shared<const std::vector<Vector>>(ref.points);
    auto shared_areas = std::make_shared<const std::vector<AreaData>>(areas);
    const Complex w = net.slack_voltage;
    const auto s = loads.s;

    // Boundary flow into area a+1 evaluated at the voltages in x.
    auto flow = [chain](const ComplexVector& v, int down) {
        const Complex vc = v(chain.connection_bus[down] - 1);
        const Complex ve = v(chain.entry_bus[down] - 1);
        return vc * std::conj((vc - ve) / chain.tie_z[down]);
    };
    // Area maps given the boundary draws g[a] at each area's downstream connection.
    auto areas_step = [shared_areas, chain, w, s, K, n](const Vector& x, Tick t, const std::vector<Complex>& g) {
        const ComplexVector v = to_complex(x);
        const ComplexVector st = s(t);
        ComplexVector out(n);
        for (int a = 0; a < K; ++a) {
            const AreaData& d = (*shared_areas)[a];
            const Complex source = a == 0 ? w : v(chain.connection_bus[a] - 1);
            ComplexVector q(d.count);
            for (int i = 0; i < d.count; ++i) {
                Complex si = st(d.first + i);
                if (i == d.conn_local) si -= g[a];
                q(i) = std::conj(si / at_or_throw(v, d.first + i, "multi-area"));
            }
            out.segment(d.first, d.count) = d.e * source + d.Z * q;
        }
        return to_real(out);
    };
    auto measured = [points, flow, horizon, K](Tick t) {
        if (t < 1 || t > horizon) throw IndexOutOfRange("multi-area: boundary measurements exist for ticks 1..horizon only");
        const ComplexVector v = to_complex((*points)[static_cast<std::size_t>(t - 1)]);
        std::vector<Complex> g(K, Complex{});
        for (int a = 0; a + 1 < K; ++a) g[a] = flow(v, a + 1);
        return g;
    };
    auto noise = [noise_bound, seed, mode, K](Tick t) {
        std::vector<Complex> nu(K, Complex{});
        if (noise_bound == 0.0) return nu;
        for (int a = 0; a + 1 < K; ++a) {
            if (mode == PerturbationMode::ConstantOffset) {
                nu[a] = noise_bound;
                continue;
            }
            const auto stream = (0x1f00 + static_cast<std::uint64_t>(a)) << 1;
            const auto tick = static_cast<std::uint64_t>(t);
            const double rad = noise_bound * std::sqrt(counter_uniform(seed, stream, tick));
            nu[a] = std::polar(rad, 2.0 * std::numbers::pi * counter_uniform(seed, stream | 1, tick));
        }
        return nu;
    };

    MapFamily base;
    base.name = "loadflow-multiarea";
    base.dimension = 2 * n;
    base.domain = domain;
    base.evaluator = [areas_step, measured](const Vector& x, Tick t) { return areas_step(x, t, measured(t)); };
    base.declared_L = [L](Tick) { return L; };
    base.declared_L_sup = L;
    base.closed_form_fixed_point = [points, horizon](Tick t) -> Vector {
        if (t < 1 || t > horizon) throw IndexOutOfRange("multi-area: reference exists for ticks 1..horizon only");
        return (*points)[static_cast<std::size_t>(t - 1)];
    };

    MapFamily coupled = base;
    coupled.name = "loadflow-coupled";
    coupled.evaluator = [areas_step, flow, K](const Vector& x, Tick t) {
        const ComplexVector v = to_complex(x);
        std::vector<Complex> g(K, Complex{});
        for (int a = 0; a + 1 < K; ++a) g[a] = flow(v, a + 1);
        return areas_step(x, t, g);
    };
    coupled.closed_form_fixed_point = {};

    InexactMapFamily map;
    map.base = std::move(base);
    map.evaluator = [areas_step, measured, noise, K](const Vector& x, Tick t) {
        std::vector<Complex> g = measured(t);
        const std::vector<Complex> nu = noise(t);
        for (int a = 0; a + 1 < K; ++a) g[a] += nu[a];
        return areas_step(x, t, g);
    };
    map.e_f_bound = [e_f](Tick) { return e_f; };
    map.e_f_sup = e_f;

    std::vector<DependencyGraph::Edge> edges;
    for (int a = 0; a + 1 < K; ++a) {
        edges.emplace_back(a + 1, a);
        edges.emplace_back(a, a + 1);
    }
    return MultiAreaModel{std::move(map),  DependencyGraph(layout, std::move(edges)), norm, rho, area_L,
                          std::move(coupled), ref.points};
}

}  // namespace tvfp
