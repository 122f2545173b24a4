#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace tvfp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Discrete time index; the first tick is 1.
using Tick = int;

// Error hierarchy. Every failure the library reports derives from Error so
// callers (the CLI in particular) can map them to exit codes in one place.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, Tick t, double residual)
        : Error(what), tick_(t), residual_(residual) {}
    Tick tick() const noexcept { return tick_; }
    double residual() const noexcept { return residual_; }

private:
    Tick tick_;
    double residual_;
};

class DomainViolation : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class PreconditionFailed : public Error {
public:
    using Error::Error;
};

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

class StaleBeyondCap : public Error {
public:
    using Error::Error;
};

class ContractionUncertified : public Error {
public:
    using Error::Error;
};

class PartitionUnsupported : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Deterministic generator for a (seed, stream, substream) triple. Streams
/// are independent of one another, so results never depend on the order in
/// which callers draw from them.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0,
                                std::uint64_t substream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(substream),
                      static_cast<std::uint32_t>(substream >> 32), 0x74766670u};
    return std::mt19937_64(seq);
}

/// splitmix64 finalizer; the basis of the counter-based draws below.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1) that depends only on (seed, a, b). Used for
/// per-edge, per-tick channel decisions so they are independent of the order
/// in which edges are processed.
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
    const std::uint64_t h = mix64(mix64(mix64(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ull));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace tvfp
