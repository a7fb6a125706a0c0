#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace lcscreen {

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Seed for replicate / sub-stream `stream` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Mersenne-Twister engine seeded from a 64-bit seed through SplitMix64, plus
// the handful of draws the samplers need. Bit-reproducible for a given seed
// and standard library.
class Rng {
 public:
    explicit Rng(std::uint64_t seed);

    double uniform();  // (0, 1)
    double normal();
    double normal(double mean, double sd);
    double gamma(double shape, double rate);
    // log of a Gamma(shape, 1) draw; stays finite for tiny shapes.
    double log_gamma(double shape);
    bool bernoulli(double p);
    std::size_t categorical(std::span<const double> probs);
    // Draw from unnormalized log weights (-inf entries are never chosen).
    std::size_t categorical_log(std::span<const double> log_weights);
    std::vector<double> dirichlet(std::span<const double> alpha);
    // log of a Dirichlet draw, computed without underflow.
    std::vector<double> log_dirichlet(std::span<const double> alpha);

    std::mt19937_64& engine() { return engine_; }

 private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

double log_sum_exp(std::span<const double> v);

}  // namespace lcscreen
