#pragma once

#include <span>
#include <vector>

namespace lcscreen {

// Compound-symmetry covariance sigma2_tilde * [(1 - rho) I + rho 11^T] of
// dimension n.
struct CsParams {
    double sigma2_tilde = 1.0;
    double rho = 0.0;
    int n = 1;

    // Eigenvalue along the all-ones direction, and along its complement.
    double leading_variance() const { return sigma2_tilde * (1.0 + (n - 1) * rho); }
    double residual_variance() const { return sigma2_tilde * (1.0 - rho); }
};

// Covariance implied by additive site, subject and residual effects with the
// given precisions.
CsParams cs_params(double tau_s, double tau_w, double tau_e, int n);

// Same, from the shared (off-diagonal) and residual variance directly. A
// shared variance of zero yields rho = 0.
CsParams cs_params_from_variances(double shared_variance, double residual_variance, int n);

// Helmert orthonormal basis: column 0 is 1/sqrt(n), column k (k >= 1) is
// proportional to (1, ..., 1, -k, 0, ..., 0) with k leading ones.
struct OrthoBasis {
    int n = 0;
    std::vector<double> p;  // row-major n x n

    double operator()(int row, int col) const { return p[static_cast<std::size_t>(row * n + col)]; }
};

// Cached per n; safe to call concurrently. The reference stays valid for the
// life of the process.
const OrthoBasis& helmert_basis(int n);

// Log density of MVN(mean, Sigma_cs) evaluated through the Helmert rotation,
// as a sum of n univariate normal log densities.
double cs_mvn_logdensity(std::span<const double> obs, std::span<const double> mean, const CsParams& cs);

// beta0 + beta0_base * baseline + beta1 * t + beta2 * t^2 at each time.
std::vector<double> class_mean(std::span<const double> times, double baseline, double beta0, double beta1,
                               double beta2, double beta0_base);

double normal_logpdf(double x, double mean, double variance);
double normal_cdf(double z);
// P(lo < X <= hi) for X ~ N(mean, sd^2); accurate in both tails.
double normal_interval_prob(double lo, double hi, double mean, double sd);

}  // namespace lcscreen
