#pragma once

#include "tvfp/async_sim.hpp"
#include "tvfp/common.hpp"
#include "tvfp/map_family.hpp"
#include "tvfp/norm.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

namespace tvfp {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

struct Line {
    int from = 0;
    int to = 0;
    Complex z;
};

/// Single-phase equivalent network in per-unit. Bus 0 is the slack bus; the
/// unknowns are the voltages of buses 1..n-1, stacked as (re, im) pairs.
/// Areas are 0-based, bus 0 belongs to area 0, and every area's buses must be
/// contiguous in bus order.
struct PowerNetwork {
    int buses = 0;
    Complex slack_voltage{1.0, 0.0};
    std::vector<Line> lines;
    std::vector<int> area;
    /// Radius of the max-norm ball around flat voltage on which the
    /// monolithic map is certified.
    double ball_radius = 0.2;

    int load_buses() const noexcept { return buses - 1; }
    int areas() const;
    /// Throws PreconditionFailed on bad indices, zero impedances, or an
    /// area list of the wrong size.
    void validate() const;
};

/// Per-bus injections s^(t) of buses 1..n-1 (loads are negative) and the
/// magnitude limits |s_j^(t)| <= limit_j they respect at every tick.
struct LoadProfile {
    std::function<ComplexVector(Tick)> s;
    Vector limit;
};

LoadProfile constant_loads(ComplexVector s);
/// Each bus scales its base injection by a factor following a seeded random
/// walk with steps in [-step, step], clamped to [1 - spread, 1 + spread].
/// Precomputed for ticks 1..horizon and frozen afterwards.
LoadProfile random_walk_loads(ComplexVector base, double step, double spread, int horizon, std::uint64_t seed);
/// base_j (1 + amplitude sin(2 pi t / period + phase_j)), phases spread over buses.
LoadProfile sinusoidal_loads(ComplexVector base, double amplitude, double period);

/// Twelve load buses plus the slack in three radial areas of four buses,
/// chained by single tie lines (3-5 and 7-9), every line 0.01 + 0.02j.
PowerNetwork synthetic_three_area_network();
/// Base injections for the synthetic network (about -(0.03 + 0.01j) per bus).
ComplexVector synthetic_base_loads(std::uint64_t seed = 7);
/// Slack bus and one load bus joined by impedance z.
PowerNetwork two_bus_network(Complex z, Complex slack_voltage = {1.0, 0.0});

/// Inverse of the non-slack block of the bus admittance matrix.
ComplexMatrix impedance_matrix(const PowerNetwork& net);

Vector to_real(const ComplexVector& v);
ComplexVector to_complex(const Vector& x);

/// v -> w 1 + Z conj(s^(t) ./ v) over R^(2(n-1)) on the declared ball.
/// Throws DomainViolation when |v_j| < 1e-6 and ContractionUncertified when
/// the network and load limits do not give a certified contraction.
MapFamily build_loadflow_map(const PowerNetwork& net, const LoadProfile& loads);

/// High-voltage root of v = w + z conj(s / v) for a real slack voltage w.
Complex two_bus_fixed_point(Complex z, double w, Complex s);

/// Power flowing from the upstream area into area j over its tie line, as
/// (P, Q): g = v_c conj((v_c - v_e) / z_tie) where v_c is the upstream
/// connection voltage and v_e the entry bus of area j.
Vector boundary_injection(const Vector& v_area_j, const Vector& v_connection, const PowerNetwork& net, int area_j);

/// The area chain derived from the tie lines.
struct AreaChain {
    std::vector<int> first_bus;  // first load bus of each area
    std::vector<int> bus_count;
    /// For area k > 0: the upstream connection bus (in area k-1), the entry
    /// bus (in area k) and the tie-line impedance. Entry 0 is unused.
    std::vector<int> connection_bus;
    std::vector<int> entry_bus;
    std::vector<Complex> tie_z;
};

/// Throws PartitionUnsupported unless the areas form a chain joined by
/// single tie lines with the slack in area 0.
AreaChain area_chain(const PowerNetwork& net);

struct MultiAreaModel {
    /// Each area solves its own load flow: the slack (area 0) or the
    /// upstream connection voltage from the neighbor's iterate acts as its
    /// source, and the power drawn by the downstream area enters as a
    /// measured injection g* + nu with |nu| <= noise_bound.
    InexactMapFamily map;
    DependencyGraph graph;
    /// Weighted block max-norm with weights rho^k in which the stacked map
    /// contracts.
    NormSpec norm;
    double rho = 0.5;
    std::vector<double> area_L;
    /// The stacked area equations with the boundary flow computed from the
    /// iterate itself (no measurement). Shares the monolithic fixed point but
    /// is not a self-map of the area boxes, so it is only evaluated, never
    /// iterated.
    MapFamily coupled;
    /// Monolithic reference fixed points, t = 1..horizon.
    std::vector<Vector> reference;
};

/// `horizon` bounds the ticks on which the measured boundary flows are
/// available (they are taken from the monolithic solution).
MultiAreaModel build_multiarea_maps(const PowerNetwork& net, const LoadProfile& loads, double noise_bound,
                                    std::uint64_t seed, int horizon,
                                    PerturbationMode mode = PerturbationMode::UniformBall, double rho = 0.5);

}  // namespace tvfp
