#include "lcscreen/likelihood.hpp"

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <stdexcept>

namespace lcscreen {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

OrthoBasis build_helmert(int n) {
    OrthoBasis b;
    b.n = n;
    b.p.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    const double first = 1.0 / std::sqrt(static_cast<double>(n));
    for (int r = 0; r < n; ++r) b.p[static_cast<std::size_t>(r * n)] = first;
    for (int k = 1; k < n; ++k) {
        const double norm = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
        for (int r = 0; r < k; ++r) b.p[static_cast<std::size_t>(r * n + k)] = norm;
        b.p[static_cast<std::size_t>(k * n + k)] = -static_cast<double>(k) * norm;
    }
    return b;
}

struct BasisCache {
    std::shared_mutex mu;
    std::map<int, std::unique_ptr<const OrthoBasis>> bases;
};

BasisCache& cache() {
    static BasisCache c;
    return c;
}

}  // namespace

CsParams cs_params(double tau_s, double tau_w, double tau_e, int n) {
    if (!(tau_s > 0.0) || !(tau_w > 0.0) || !(tau_e > 0.0)) {
        throw std::invalid_argument("cs_params: precisions must be > 0");
    }
    return cs_params_from_variances(1.0 / tau_s + 1.0 / tau_w, 1.0 / tau_e, n);
}

CsParams cs_params_from_variances(double shared_variance, double residual_variance, int n) {
    if (!(shared_variance >= 0.0) || !(residual_variance > 0.0)) {
        throw std::invalid_argument("cs_params: variances must be nonnegative (residual > 0)");
    }
    if (n < 1) throw std::invalid_argument("cs_params: dimension must be >= 1");
    CsParams cs;
    cs.sigma2_tilde = shared_variance + residual_variance;
    cs.rho = shared_variance / cs.sigma2_tilde;
    cs.n = n;
    return cs;
}

const OrthoBasis& helmert_basis(int n) {
    if (n < 1) throw std::invalid_argument("helmert_basis: n must be >= 1");
    // Entries are immutable once published, so a per-thread pointer table
    // avoids taking the shared lock on the hot path.
    thread_local std::array<const OrthoBasis*, 64> local{};
    if (n < 64 && local[static_cast<std::size_t>(n)]) return *local[static_cast<std::size_t>(n)];
    auto& c = cache();
    {
        std::shared_lock lock(c.mu);
        auto it = c.bases.find(n);
        if (it != c.bases.end()) {
            if (n < 64) local[static_cast<std::size_t>(n)] = it->second.get();
            return *it->second;
        }
    }
    std::unique_lock lock(c.mu);
    auto& slot = c.bases[n];
    if (!slot) slot = std::make_unique<const OrthoBasis>(build_helmert(n));
    if (n < 64) local[static_cast<std::size_t>(n)] = slot.get();
    return *slot;
}

double cs_mvn_logdensity(std::span<const double> obs, std::span<const double> mean, const CsParams& cs) {
    const int n = cs.n;
    if (obs.size() != static_cast<std::size_t>(n) || mean.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("cs_mvn_logdensity: dimension mismatch");
    }
    const OrthoBasis& P = helmert_basis(n);
    const double v_lead = cs.leading_variance();
    const double v_rest = cs.residual_variance();
    double total = 0.0;
    for (int col = 0; col < n; ++col) {
        // u = P^T (obs - mean); the rotation is linear so the transformed mean
        // is subtracted implicitly.
        double u = 0.0;
        for (int row = 0; row < n; ++row) u += P(row, col) * (obs[static_cast<std::size_t>(row)] - mean[static_cast<std::size_t>(row)]);
        total += normal_logpdf(u, 0.0, col == 0 ? v_lead : v_rest);
    }
    return total;
}

std::vector<double> class_mean(std::span<const double> times, double baseline, double beta0, double beta1,
                               double beta2, double beta0_base) {
    std::vector<double> out(times.size());
    const double level = beta0 + beta0_base * baseline;
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double t = times[j];
        out[j] = level + beta1 * t + beta2 * t * t;
    }
    return out;
}

double normal_logpdf(double x, double mean, double variance) {
    const double d = x - mean;
    return -0.5 * (kLog2Pi + std::log(variance) + d * d / variance);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_interval_prob(double lo, double hi, double mean, double sd) {
    if (!(hi > lo)) return 0.0;
    const double a = (lo - mean) / sd;
    const double b = (hi - mean) / sd;
    if (a >= 0.0) {
        // upper tail: Q(a) - Q(b)
        return 0.5 * (std::erfc(a / std::numbers::sqrt2) - std::erfc(b / std::numbers::sqrt2));
    }
    if (b <= 0.0) return 0.5 * (std::erfc(-b / std::numbers::sqrt2) - std::erfc(-a / std::numbers::sqrt2));
    return 1.0 - 0.5 * std::erfc(-a / std::numbers::sqrt2) - 0.5 * std::erfc(b / std::numbers::sqrt2);
}

}  // namespace lcscreen
