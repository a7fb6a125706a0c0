#include "lcscreen/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>

#include "lcscreen/errors.hpp"
#include "lcscreen/likelihood.hpp"
#include "lcscreen/parallel.hpp"

namespace lcscreen {

namespace {

// Gamma full conditionals under very diffuse priors can wander to extreme
// precisions for unoccupied classes; draws are kept inside this band.
constexpr double kMinPrecision = 1e-12;
constexpr double kMaxPrecision = 1e12;

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

// Lower Cholesky factor of a symmetric positive definite 3x3 matrix.
Mat3 cholesky3(const Mat3& a) {
    Mat3 l{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[i][j];
            for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (!(s > 0.0)) throw NumericError("coefficient precision matrix is not positive definite");
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    return l;
}

// Draw from N(A^{-1} b, A^{-1}) given the Cholesky factor L of A.
Vec3 sample_canonical_normal(const Mat3& l, const Vec3& b, Rng& rng) {
    // forward: L y = b
    Vec3 y{};
    for (int i = 0; i < 3; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= l[i][k] * y[k];
        y[i] = s / l[i][i];
    }
    // back: L^T x = y + eps
    Vec3 x{};
    for (int i = 2; i >= 0; --i) {
        double s = y[i] + rng.normal();
        for (int k = i + 1; k < 3; ++k) s -= l[k][i] * x[k];
        x[i] = s / l[i][i];
    }
    return x;
}

double dirichlet_log_density_kernel(double alpha, int classes, std::span<const double> log_pi) {
    const double a = alpha / classes;
    double s = 0.0;
    for (double lp : log_pi) s += lp;
    return std::lgamma(alpha) - classes * std::lgamma(a) + (a - 1.0) * s;
}

}  // namespace

void ParameterDraw::check(const ModelConfig& config) const {
    auto bad = [](const std::string& what) { throw NumericError("invalid draw: " + what); };
    if (classes != config.classes) bad("class count does not match configuration");
    if (cls.size() != static_cast<std::size_t>(classes) || pi.size() != static_cast<std::size_t>(classes)) {
        bad("per-class vectors have the wrong length");
    }
    if (p.size() != static_cast<std::size_t>(sites * classes) || v.size() != static_cast<std::size_t>(sites * classes * 2)) {
        bad("site arrays have the wrong length");
    }
    if (w.size() != z.size() * 2) bad("subject effects do not match assignments");
    double s = 0.0;
    for (double x : pi) {
        if (!(x >= 0.0) || !std::isfinite(x)) bad("pi has a negative or non-finite entry");
        s += x;
    }
    if (std::abs(s - 1.0) > 1e-10) bad("pi does not sum to 1");
    for (int c = 0; c < classes; ++c) {
        double col = 0.0;
        for (int m = 0; m < sites; ++m) col += site_profile(m, c);
        if (std::abs(col - 1.0) > 1e-10) bad("site profile column does not sum to 1");
    }
    auto positive = [](double t) { return t > 0.0 && std::isfinite(t); };
    for (const auto& c : cls) {
        for (const auto& e : c) {
            if (!positive(e.tau_s)) bad("tau_s must be positive");
            if (!std::isfinite(e.beta0) || !std::isfinite(e.beta1) || !std::isfinite(e.beta2)) bad("non-finite beta");
        }
    }
    for (const auto& c : common) {
        for (double t : {c.tau_w, c.tau_e, c.tau0, c.tau1, c.tau2, c.tau0_base}) {
            if (!positive(t)) bad("precision must be positive");
        }
        if (!std::isfinite(c.beta0_base)) bad("non-finite beta0_base");
    }
    for (int zi : z) {
        if (zi < 1 || zi > classes) bad("assignment out of range");
    }
    for (double x : v) {
        if (!std::isfinite(x)) bad("non-finite site effect");
    }
    for (double x : w) {
        if (!std::isfinite(x)) bad("non-finite subject effect");
    }
    if (!(alpha >= config.alpha_lo && alpha <= config.alpha_hi)) bad("alpha outside its prior support");
}

void McmcConfig::validate() const {
    if (burn_in < 0) throw std::invalid_argument("mcmc: burn_in must be >= 0");
    if (keep < 1) throw std::invalid_argument("mcmc: keep must be >= 1");
    if (thin < 1) throw std::invalid_argument("mcmc: thin must be >= 1");
    if (!(alpha_step > 0.0)) throw std::invalid_argument("mcmc: alpha_step must be > 0");
    if (threads < 1) throw std::invalid_argument("mcmc: threads must be >= 1");
}

std::vector<double> conditional_class_prob(std::span<const int> counts_without_i, double alpha, int classes, int n) {
    if (counts_without_i.size() != static_cast<std::size_t>(classes)) {
        throw std::invalid_argument("conditional_class_prob: counts length must equal C");
    }
    std::vector<double> out(counts_without_i.size());
    const double denom = n - 1 + alpha;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = (counts_without_i[c] + alpha / classes) / denom;
    return out;
}

GibbsSampler::GibbsSampler(const Dataset& data, const ModelConfig& config, std::uint64_t seed)
    : config_(config), sites_(data.sites), rng_(seed) {
    config_.validate();
    subjects_.reserve(data.subjects.size());
    for (const auto& s : data.subjects) {
        SubjectData sd;
        sd.site = s.site - 1;
        sd.baseline = s.baseline;
        for (Endpoint e : kEndpoints) {
            for (const auto& o : s.obs(e)) {
                sd.times[idx(e)].push_back(o.time);
                sd.values[idx(e)].push_back(o.value);
            }
        }
        subjects_.push_back(std::move(sd));
    }
}

double GibbsSampler::mean_at(std::size_t i, int c, Endpoint e, std::size_t j) const {
    const auto& ce = state_.at(c, e);
    const double t = subjects_[i].times[idx(e)][j];
    return ce.beta0 + state_.com(e).beta0_base * subjects_[i].baseline[idx(e)] + ce.beta1 * t + ce.beta2 * t * t;
}

double GibbsSampler::site_term(std::size_t i, int c, Endpoint e) const {
    return config_.site_effects ? state_.site_effect(subjects_[i].site, c, e) : 0.0;
}

double GibbsSampler::precision_draw(double shape, double rate) {
    return std::clamp(rng_.gamma(shape, rate), kMinPrecision, kMaxPrecision);
}

void GibbsSampler::initialize(bool permute_labels) {
    const int C = config_.classes;
    const std::size_t n = subjects_.size();
    state_ = ParameterDraw{};
    state_.classes = C;
    state_.sites = sites_;
    state_.cls.assign(static_cast<std::size_t>(C), {});
    for (Endpoint e : kEndpoints) {
        auto& com = state_.com(e);
        com = CommonEndpointParams{};
        const double h = config_.fixed_hyper_precision.value_or(1.0);
        com.tau0 = com.tau1 = com.tau2 = com.tau0_base = h;
    }
    state_.pi.assign(static_cast<std::size_t>(C), 1.0 / C);
    state_.p.assign(static_cast<std::size_t>(sites_ * C), 1.0 / sites_);
    state_.v.assign(static_cast<std::size_t>(sites_ * C * 2), 0.0);
    state_.w.assign(n * 2, 0.0);
    state_.alpha = 0.5 * (config_.alpha_lo + config_.alpha_hi);

    // Per-subject quadratic least squares (lightly ridged) as clustering features.
    std::vector<std::array<double, 6>> feat(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (Endpoint e : kEndpoints) {
            const auto& t = subjects_[i].times[idx(e)];
            const auto& y = subjects_[i].values[idx(e)];
            Mat3 a{};
            Vec3 b{};
            for (std::size_t j = 0; j < t.size(); ++j) {
                const double x[3] = {1.0, t[j], t[j] * t[j]};
                for (int r = 0; r < 3; ++r) {
                    b[r] += x[r] * y[j];
                    for (int k = 0; k < 3; ++k) a[r][k] += x[r] * x[k];
                }
            }
            for (int r = 0; r < 3; ++r) a[r][r] += 1e-3;
            const Mat3 l = cholesky3(a);
            Vec3 yv{};
            for (int r = 0; r < 3; ++r) {
                double s = b[r];
                for (int k = 0; k < r; ++k) s -= l[r][k] * yv[k];
                yv[r] = s / l[r][r];
            }
            Vec3 coef{};
            for (int r = 2; r >= 0; --r) {
                double s = yv[r];
                for (int k = r + 1; k < 3; ++k) s -= l[k][r] * coef[k];
                coef[r] = s / l[r][r];
            }
            for (int r = 0; r < 3; ++r) feat[i][static_cast<std::size_t>(idx(e) * 3 + r)] = coef[r];
        }
    }
    for (std::size_t k = 0; k < 6; ++k) {
        double mean = 0.0;
        for (const auto& f : feat) mean += f[k];
        mean /= static_cast<double>(std::max<std::size_t>(n, 1));
        double var = 0.0;
        for (const auto& f : feat) var += (f[k] - mean) * (f[k] - mean);
        const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 1.0;
        for (auto& f : feat) f[k] = (f[k] - mean) / (sd > 0.0 ? sd : 1.0);
    }

    // k-means++ seeding followed by Lloyd iterations.
    const std::size_t K = std::min<std::size_t>(static_cast<std::size_t>(C), n);
    auto dist2 = [&](const std::array<double, 6>& a, const std::array<double, 6>& b) {
        double s = 0.0;
        for (std::size_t k = 0; k < 6; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
        return s;
    };
    std::vector<std::array<double, 6>> centers;
    centers.push_back(feat[std::min(n - 1, static_cast<std::size_t>(rng_.uniform() * static_cast<double>(n)))]);
    std::vector<double> d2(n);
    while (centers.size() < K) {
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) best = std::min(best, dist2(feat[i], c));
            d2[i] = best;
        }
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0.0) {
            pick = rng_.categorical(d2);
        } else {
            pick = std::min(n - 1, static_cast<std::size_t>(rng_.uniform() * static_cast<double>(n)));
        }
        centers.push_back(feat[pick]);
    }
    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < centers.size(); ++k) {
                const double dk = dist2(feat[i], centers[k]);
                if (dk < bd) {
                    bd = dk;
                    best = static_cast<int>(k);
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<std::array<double, 6>> sum(centers.size(), std::array<double, 6>{});
        std::vector<int> cnt(centers.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < 6; ++k) sum[static_cast<std::size_t>(assign[i])][k] += feat[i][k];
            ++cnt[static_cast<std::size_t>(assign[i])];
        }
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (cnt[k] == 0) continue;
            for (std::size_t f = 0; f < 6; ++f) centers[k][f] = sum[k][f] / cnt[k];
        }
    }

    std::vector<int> label(static_cast<std::size_t>(C));
    std::iota(label.begin(), label.end(), 0);
    if (permute_labels) {
        for (std::size_t i = label.size(); i > 1; --i) {
            const auto j = std::min(i - 1, static_cast<std::size_t>(rng_.uniform() * static_cast<double>(i)));
            std::swap(label[i - 1], label[j]);
        }
    }
    state_.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) state_.z[i] = label[static_cast<std::size_t>(assign[i])] + 1;
    iteration_ = 0;
    refresh_caches();
}

void GibbsSampler::set_state(ParameterDraw s) {
    state_ = std::move(s);
    refresh_caches();
}

void GibbsSampler::refresh_caches() {
    const int C = config_.classes;
    log_pi_.resize(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) log_pi_[static_cast<std::size_t>(c)] = std::log(state_.pi[static_cast<std::size_t>(c)]);
    log_p_.resize(state_.p.size());
    for (std::size_t k = 0; k < state_.p.size(); ++k) log_p_[k] = std::log(state_.p[k]);
    class_counts_.assign(static_cast<std::size_t>(C), 0);
    for (int zi : state_.z) ++class_counts_[static_cast<std::size_t>(zi - 1)];
}

double GibbsSampler::subject_class_loglik(std::size_t i, int c) const {
    double total = 0.0;
    const auto& sd = subjects_[i];
    for (Endpoint e : kEndpoints) {
        const auto& y = sd.values[idx(e)];
        if (y.empty()) continue;
        const auto& com = state_.com(e);
        const int n = static_cast<int>(y.size());
        std::vector<double> mean(y.size());
        const double offset = site_term(i, c, e);
        for (std::size_t j = 0; j < y.size(); ++j) mean[j] = mean_at(i, c, e, j) + offset;
        const CsParams cs =
            cs_params_from_variances(config_.subject_effects ? 1.0 / com.tau_w : 0.0, 1.0 / com.tau_e, n);
        total += cs_mvn_logdensity(y, mean, cs);
    }
    return total;
}

void GibbsSampler::sample_subject_effect(std::size_t i) {
    const int c = state_.z[i] - 1;
    const auto& sd = subjects_[i];
    for (Endpoint e : kEndpoints) {
        const auto& com = state_.com(e);
        const auto& y = sd.values[idx(e)];
        double r = 0.0;
        const double offset = site_term(i, c, e);
        for (std::size_t j = 0; j < y.size(); ++j) r += y[j] - mean_at(i, c, e, j) - offset;
        const double prec = com.tau_w + com.tau_e * static_cast<double>(y.size());
        state_.subject_effect(i, e) = rng_.normal(com.tau_e * r / prec, 1.0 / std::sqrt(prec));
    }
}

void GibbsSampler::update_assignments() {
    const auto C = static_cast<std::size_t>(config_.classes);
    const std::size_t n = subjects_.size();
    // Class log weights depend only on the parameters, so they are computed
    // for every subject up front; the draws below stay sequential.
    std::vector<double> lw(n * C);
    parallel_for(n, threads_, [&](std::size_t i) {
        const auto site = static_cast<std::size_t>(subjects_[i].site);
        bool any_finite = false;
        for (std::size_t c = 0; c < C; ++c) {
            const double l = log_pi_[c] + log_p_[site * C + c] + subject_class_loglik(i, static_cast<int>(c));
            if (std::isnan(l)) {
                throw NumericError("non-finite likelihood at iteration " + std::to_string(iteration_) +
                                   " (subject index " + std::to_string(i) + ")");
            }
            any_finite = any_finite || std::isfinite(l);
            lw[i * C + c] = l;
        }
        if (!any_finite) {
            throw NumericError("non-finite likelihood at iteration " + std::to_string(iteration_) +
                               " (subject index " + std::to_string(i) + ")");
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        const int old = state_.z[i] - 1;
        const int next = static_cast<int>(rng_.categorical_log(std::span<const double>(lw.data() + i * C, C)));
        --class_counts_[static_cast<std::size_t>(old)];
        ++class_counts_[static_cast<std::size_t>(next)];
        state_.z[i] = next + 1;
        // (z_i, w_i) is updated as a block: w_i was integrated out above.
        if (config_.subject_effects) sample_subject_effect(i);
    }
}

void GibbsSampler::update_weights() {
    const int C = config_.classes;
    std::vector<double> a(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) a[static_cast<std::size_t>(c)] = state_.alpha / C + class_counts_[static_cast<std::size_t>(c)];
    log_pi_ = rng_.log_dirichlet(a);
    for (int c = 0; c < C; ++c) state_.pi[static_cast<std::size_t>(c)] = std::exp(log_pi_[static_cast<std::size_t>(c)]);
}

void GibbsSampler::update_site_profiles() {
    const int C = config_.classes;
    std::vector<int> counts(static_cast<std::size_t>(sites_ * C), 0);
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
        ++counts[static_cast<std::size_t>(subjects_[i].site * C + state_.z[i] - 1)];
    }
    std::vector<double> a(static_cast<std::size_t>(sites_));
    for (int c = 0; c < C; ++c) {
        for (int m = 0; m < sites_; ++m) a[static_cast<std::size_t>(m)] = 1.0 + counts[static_cast<std::size_t>(m * C + c)];
        const auto lp = rng_.log_dirichlet(a);
        for (int m = 0; m < sites_; ++m) {
            const auto k = static_cast<std::size_t>(m * C + c);
            log_p_[k] = lp[static_cast<std::size_t>(m)];
            state_.p[k] = std::exp(lp[static_cast<std::size_t>(m)]);
        }
    }
}

void GibbsSampler::update_coefficients() {
    const int C = config_.classes;
    for (Endpoint e : kEndpoints) {
        const auto& com = state_.com(e);
        std::vector<Mat3> xtx(static_cast<std::size_t>(C), Mat3{});
        std::vector<Vec3> xtr(static_cast<std::size_t>(C), Vec3{});
        for (std::size_t i = 0; i < subjects_.size(); ++i) {
            const int c = state_.z[i] - 1;
            const auto& sd = subjects_[i];
            const auto& t = sd.times[idx(e)];
            const auto& y = sd.values[idx(e)];
            const double offset =
                com.beta0_base * sd.baseline[idx(e)] + site_term(i, c, e) + state_.subject_effect(i, e);
            auto& a = xtx[static_cast<std::size_t>(c)];
            auto& b = xtr[static_cast<std::size_t>(c)];
            for (std::size_t j = 0; j < t.size(); ++j) {
                const double x[3] = {1.0, t[j], t[j] * t[j]};
                const double r = y[j] - offset;
                for (int p = 0; p < 3; ++p) {
                    b[p] += x[p] * r;
                    for (int q = 0; q < 3; ++q) a[p][q] += x[p] * x[q];
                }
            }
        }
        const double prior[3] = {com.tau0, com.tau1, com.tau2};
        for (int c = 0; c < C; ++c) {
            Mat3 a = xtx[static_cast<std::size_t>(c)];
            Vec3 b = xtr[static_cast<std::size_t>(c)];
            for (int p = 0; p < 3; ++p) {
                b[p] *= com.tau_e;
                for (int q = 0; q < 3; ++q) a[p][q] *= com.tau_e;
                a[p][p] += prior[p];
            }
            const Vec3 beta = sample_canonical_normal(cholesky3(a), b, rng_);
            auto& ce = state_.at(c, e);
            ce.beta0 = beta[0];
            ce.beta1 = beta[1];
            ce.beta2 = beta[2];
        }
    }
}

void GibbsSampler::update_baseline_coefficients() {
    for (Endpoint e : kEndpoints) {
        auto& com = state_.com(e);
        const auto& pr = config_.prior(e);
        double prec = com.tau0_base;
        double lin = com.tau0_base * pr.mu0_base;
        for (std::size_t i = 0; i < subjects_.size(); ++i) {
            const int c = state_.z[i] - 1;
            const auto& sd = subjects_[i];
            const auto& ce = state_.at(c, e);
            const auto& t = sd.times[idx(e)];
            const auto& y = sd.values[idx(e)];
            const double base = sd.baseline[idx(e)];
            const double offset = site_term(i, c, e) + state_.subject_effect(i, e);
            double r = 0.0;
            for (std::size_t j = 0; j < t.size(); ++j) {
                r += y[j] - (ce.beta0 + ce.beta1 * t[j] + ce.beta2 * t[j] * t[j]) - offset;
            }
            prec += com.tau_e * static_cast<double>(t.size()) * base * base;
            lin += com.tau_e * base * r;
        }
        com.beta0_base = rng_.normal(lin / prec, 1.0 / std::sqrt(prec));
    }
}

void GibbsSampler::update_effects() {
    update_site_effects();
    update_subject_effects();
}

void GibbsSampler::update_site_effects() {
    if (!config_.site_effects) return;
    const int C = config_.classes;
    const std::size_t cells = static_cast<std::size_t>(sites_ * C * 2);
    std::vector<double> sum_r(cells, 0.0);
    std::vector<double> n_obs(cells, 0.0);
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
        const int c = state_.z[i] - 1;
        const auto& sd = subjects_[i];
        for (Endpoint e : kEndpoints) {
            const auto& y = sd.values[idx(e)];
            const auto k = static_cast<std::size_t>((sd.site * C + c) * 2 + idx(e));
            for (std::size_t j = 0; j < y.size(); ++j) sum_r[k] += y[j] - mean_at(i, c, e, j) - state_.subject_effect(i, e);
            n_obs[k] += static_cast<double>(y.size());
        }
    }
    for (int m = 0; m < sites_; ++m) {
        for (int c = 0; c < C; ++c) {
            for (Endpoint e : kEndpoints) {
                const auto k = static_cast<std::size_t>((m * C + c) * 2 + idx(e));
                const double tau_e = state_.com(e).tau_e;
                const double prec = state_.at(c, e).tau_s + tau_e * n_obs[k];
                state_.site_effect(m, c, e) = rng_.normal(tau_e * sum_r[k] / prec, 1.0 / std::sqrt(prec));
            }
        }
    }
}

void GibbsSampler::update_subject_effects() {
    if (!config_.subject_effects) return;
    for (std::size_t i = 0; i < subjects_.size(); ++i) sample_subject_effect(i);
}

void GibbsSampler::update_precisions() {
    const int C = config_.classes;
    for (Endpoint e : kEndpoints) {
        auto& com = state_.com(e);
        const auto& pr = config_.prior(e);
        double ssr = 0.0;
        double n_obs = 0.0;
        double ssw = 0.0;
        for (std::size_t i = 0; i < subjects_.size(); ++i) {
            const int c = state_.z[i] - 1;
            const auto& y = subjects_[i].values[idx(e)];
            const double offset = site_term(i, c, e) + state_.subject_effect(i, e);
            for (std::size_t j = 0; j < y.size(); ++j) {
                const double r = y[j] - mean_at(i, c, e, j) - offset;
                ssr += r * r;
            }
            n_obs += static_cast<double>(y.size());
            ssw += state_.subject_effect(i, e) * state_.subject_effect(i, e);
        }
        com.tau_e = precision_draw(pr.gamma_e + 0.5 * n_obs, pr.gamma_e + 0.5 * ssr);
        if (config_.subject_effects) {
            com.tau_w = precision_draw(pr.gamma_w + 0.5 * static_cast<double>(subjects_.size()), pr.gamma_w + 0.5 * ssw);
        }
        if (config_.site_effects) {
            for (int c = 0; c < C; ++c) {
                double ssv = 0.0;
                for (int m = 0; m < sites_; ++m) ssv += state_.site_effect(m, c, e) * state_.site_effect(m, c, e);
                state_.at(c, e).tau_s = precision_draw(pr.gamma_sc + 0.5 * sites_, pr.gamma_sc + 0.5 * ssv);
            }
        }
    }
}

void GibbsSampler::update_alpha() {
    const double lo = config_.alpha_lo;
    const double hi = config_.alpha_hi;
    double prop = state_.alpha + alpha_step_ * rng_.normal();
    // reflect into [lo, hi]; the reflected random walk stays symmetric
    while (prop < lo || prop > hi) prop = prop < lo ? 2.0 * lo - prop : 2.0 * hi - prop;
    const int C = config_.classes;
    const double cur = dirichlet_log_density_kernel(state_.alpha, C, log_pi_);
    const double nxt = dirichlet_log_density_kernel(prop, C, log_pi_);
    ++alpha_proposals_;
    if (std::log(rng_.uniform()) < nxt - cur) {
        state_.alpha = prop;
        ++alpha_accepts_;
    }
}

void GibbsSampler::update_hyper_precisions() {
    if (config_.fixed_hyper_precision) return;
    const int C = config_.classes;
    for (Endpoint e : kEndpoints) {
        auto& com = state_.com(e);
        const auto& pr = config_.prior(e);
        double s0 = 0.0;
        double s1 = 0.0;
        double s2 = 0.0;
        for (int c = 0; c < C; ++c) {
            const auto& ce = state_.at(c, e);
            s0 += ce.beta0 * ce.beta0;
            s1 += ce.beta1 * ce.beta1;
            s2 += ce.beta2 * ce.beta2;
        }
        com.tau0 = precision_draw(pr.gamma0 + 0.5 * C, pr.gamma0 + 0.5 * s0);
        com.tau1 = precision_draw(pr.gamma1 + 0.5 * C, pr.gamma1 + 0.5 * s1);
        com.tau2 = precision_draw(pr.gamma2 + 0.5 * C, pr.gamma2 + 0.5 * s2);
        const double d = com.beta0_base - pr.mu0_base;
        com.tau0_base = precision_draw(pr.gamma0_base + 0.5, pr.gamma0_base + 0.5 * d * d);
    }
}

void GibbsSampler::sweep(bool include_assignments) {
    if (include_assignments) update_assignments();
    update_weights();
    update_site_profiles();
    update_coefficients();
    update_baseline_coefficients();
    update_effects();
    update_precisions();
    update_alpha();
    update_hyper_precisions();
    ++iteration_;
}

double GibbsSampler::alpha_acceptance_rate() const {
    return alpha_proposals_ == 0 ? 0.0 : static_cast<double>(alpha_accepts_) / static_cast<double>(alpha_proposals_);
}

DrawStore fit(const Dataset& data, const ModelConfig& config, const McmcConfig& run, const FitProgress& progress) {
    config.validate();
    run.validate();
    if (data.subjects.empty()) throw DataError("fit: empty dataset");
    const auto violations = validate_dataset(data);
    if (!violations.empty()) {
        const auto& v = violations.front();
        throw DataError("fit: invalid dataset: subject " + v.subject_id + " " + v.field + ": " + v.rule);
    }
    for (const auto& s : data.subjects) {
        if (s.obs(Endpoint::x).empty() && s.obs(Endpoint::y).empty()) {
            throw DataError("fit: subject " + s.subject_id + " has no post-baseline observations");
        }
    }

    DrawStore store;
    store.config = config;
    store.run = run;
    store.run.threads = 1;  // not part of the stored record
    store.dataset_digest = dataset_digest(data);
    store.sites = data.sites;
    for (const auto& s : data.subjects) store.subject_ids.push_back(s.subject_id);

    GibbsSampler sampler(data, config, run.seed);
    sampler.set_alpha_step(run.alpha_step);
    sampler.set_threads(run.threads);
    sampler.initialize(run.permute_initial_labels);
    const long total = run.burn_in + run.keep * run.thin;
    store.draws.reserve(static_cast<std::size_t>(run.keep));
    for (long it = 0; it < total; ++it) {
        // The first sweep keeps the k-means assignment while coefficients
        // adapt to it.
        sampler.sweep(it > 0);
        if (it >= run.burn_in && (it - run.burn_in + 1) % run.thin == 0) {
            sampler.state().check(config);
            store.draws.push_back(sampler.state());
        }
        if (progress && ((it + 1) % 1000 == 0 || it + 1 == total)) progress(it + 1, total);
    }
    store.alpha_acceptance = sampler.alpha_acceptance_rate();
    return store;
}

}  // namespace lcscreen
