// Independent reference computations used by the tests. Nothing here calls
// into the library's density or predictive code.
#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "lcscreen/core_types.hpp"
#include "lcscreen/sampler.hpp"

namespace oracle {

// Closed-form compound-symmetry log density: det from the two eigenvalues,
// inverse by Sherman-Morrison, quadratic form by explicit double loop.
inline double cs_logdensity_closed_form(const std::vector<double>& obs, const std::vector<double>& mean,
                                        double sigma2, double rho) {
    const int n = static_cast<int>(obs.size());
    const double a = sigma2 * (1.0 - rho);  // diagonal part
    const double b = sigma2 * rho;          // rank-one part
    const double logdet = n * std::log(sigma2) + (n - 1) * std::log(1.0 - rho) + std::log(1.0 + (n - 1) * rho);
    const double k = b / (a + n * b);
    double quad = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double inv = ((i == j ? 1.0 : 0.0) - k) / a;
            quad += (obs[i] - mean[i]) * inv * (obs[j] - mean[j]);
        }
    }
    return -0.5 * (n * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

inline Eigen::MatrixXd cs_matrix(int n, double shared, double resid) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Constant(n, n, shared);
    s.diagonal().array() += resid;
    return s;
}

// Dense MVN log density through an LDLT factorization.
inline double mvn_logdensity(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    const Eigen::VectorXd d = x - mean;
    const double quad = d.dot(ldlt.solve(d));
    const double logdet = ldlt.vectorD().array().log().sum();
    return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

struct Conditional {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Law of the trailing block given the leading `nh` coordinates (Schur complement).
inline Conditional condition_on_leading(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                        const Eigen::VectorXd& leading_values) {
    const int nh = static_cast<int>(leading_values.size());
    const int nf = static_cast<int>(mean.size()) - nh;
    const Eigen::MatrixXd s_hh = cov.topLeftCorner(nh, nh);
    const Eigen::MatrixXd s_fh = cov.bottomLeftCorner(nf, nh);
    const Eigen::MatrixXd s_ff = cov.bottomRightCorner(nf, nf);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(s_hh);
    Conditional c;
    c.mean = mean.tail(nf) + s_fh * ldlt.solve(leading_values - mean.head(nh));
    c.cov = s_ff - s_fh * ldlt.solve(s_fh.transpose());
    return c;
}

inline double log_sum_exp(const std::vector<double>& v) {
    double mx = -INFINITY;
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

// Dense evaluation of the class-mixture predictive density for one endpoint
// block: returns log f(values | class c of draw d), site and subject effects
// marginalized.
inline double endpoint_block(const lcscreen::ParameterDraw& d, const lcscreen::ModelConfig& cfg, int c,
                             lcscreen::Endpoint e, double baseline, const std::vector<double>& times,
                             const std::vector<double>& values) {
    if (times.empty()) return 0.0;
    const auto& p = d.at(c, e);
    const int n = static_cast<int>(times.size());
    Eigen::VectorXd mean(n);
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) {
        const double t = times[static_cast<std::size_t>(j)];
        mean(j) = p.beta0 + d.com(e).beta0_base * baseline + p.beta1 * t + p.beta2 * t * t;
        x(j) = values[static_cast<std::size_t>(j)];
    }
    double shared = 0.0;
    if (cfg.site_effects) shared += 1.0 / p.tau_s;
    if (cfg.subject_effects) shared += 1.0 / d.com(e).tau_w;
    return mvn_logdensity(x, mean, cs_matrix(n, shared, 1.0 / d.com(e).tau_e));
}

// Batch-means Monte Carlo standard error of the mean of a chain.
inline double batch_means_se(const std::vector<double>& chain, int batches = 40) {
    const std::size_t per = chain.size() / static_cast<std::size_t>(batches);
    std::vector<double> means;
    for (int b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t k = 0; k < per; ++k) s += chain[static_cast<std::size_t>(b) * per + k];
        means.push_back(s / static_cast<double>(per));
    }
    double m = 0.0;
    for (double x : means) m += x;
    m /= batches;
    double v = 0.0;
    for (double x : means) v += (x - m) * (x - m);
    v /= (batches - 1);
    return std::sqrt(v / batches);
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

// Standard error of the sample variance of iid draws (uses the fourth moment).
inline double variance_se(const std::vector<double>& v) {
    const double m = mean(v);
    double m2 = 0.0;
    double m4 = 0.0;
    for (double x : v) {
        const double d = (x - m) * (x - m);
        m2 += d;
        m4 += d * d;
    }
    const double n = static_cast<double>(v.size());
    m2 /= n;
    m4 /= n;
    return std::sqrt((m4 - m2 * m2) / n);
}

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace oracle
