#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace ocelad {

/// Seedable random source whose complete state is the engine state, so it
/// can be checkpointed as text and restored bit-exactly. Distributions are
/// constructed per draw for that reason.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::mt19937_64 &engine() noexcept { return engine_; }

    std::string state() const;
    void set_state(const std::string &state);

    /// Independent stream seed derived from a master seed (splitmix64 mix).
    static std::uint64_t derive(std::uint64_t master, std::uint64_t stream);

    friend bool operator==(const Rng &a, const Rng &b) { return a.engine_ == b.engine_; }

  private:
    std::mt19937_64 engine_;
};

} // namespace ocelad
