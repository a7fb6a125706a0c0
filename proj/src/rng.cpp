#include "lcscreen/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lcscreen {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

Rng::Rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(seed)), static_cast<std::uint32_t>(splitmix64(seed) >> 32),
                      static_cast<std::uint32_t>(splitmix64(seed + 1)),
                      static_cast<std::uint32_t>(splitmix64(seed + 1) >> 32)};
    engine_.seed(seq);
}

double Rng::uniform() {
    // 53 random bits mapped into the open interval (0, 1).
    constexpr double scale = 1.0 / 9007199254740992.0;
    return (static_cast<double>(engine_() >> 11) + 0.5) * scale;
}

double Rng::normal() { return normal_(engine_); }

double Rng::normal(double mean, double sd) { return mean + sd * normal_(engine_); }

double Rng::gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("gamma: shape and rate must be > 0");
    return std::exp(log_gamma(shape)) / rate;
}

double Rng::log_gamma(double shape) {
    if (shape < 1.0) {
        // G(a) = G(a + 1) * U^(1/a)
        const double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(engine_);
        return std::log(g) + std::log(uniform()) / shape;
    }
    const double g = std::gamma_distribution<double>(shape, 1.0)(engine_);
    return std::log(std::max(g, std::numeric_limits<double>::min()));
}

bool Rng::bernoulli(double p) { return uniform() < p; }

std::size_t Rng::categorical(std::span<const double> probs) {
    double total = 0.0;
    for (double p : probs) total += p;
    double u = uniform() * total;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        u -= probs[i];
        if (u <= 0.0 && probs[i] > 0.0) return i;
    }
    for (std::size_t i = probs.size(); i-- > 0;) {
        if (probs[i] > 0.0) return i;
    }
    throw std::invalid_argument("categorical: all weights are zero");
}

std::size_t Rng::categorical_log(std::span<const double> log_weights) {
    const double mx = *std::max_element(log_weights.begin(), log_weights.end());
    if (!std::isfinite(mx)) throw std::invalid_argument("categorical_log: no finite weight");
    std::vector<double> w(log_weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - mx);
    return categorical(w);
}

std::vector<double> Rng::dirichlet(std::span<const double> alpha) {
    auto lg = log_dirichlet(alpha);
    for (double& v : lg) v = std::exp(v);
    return lg;
}

std::vector<double> Rng::log_dirichlet(std::span<const double> alpha) {
    std::vector<double> lg(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) lg[i] = log_gamma(alpha[i]);
    const double norm = log_sum_exp(lg);
    for (double& v : lg) v -= norm;
    return lg;
}

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) return -std::numeric_limits<double>::infinity();
    const double mx = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace lcscreen
