#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lcscreen/core_types.hpp"
#include "lcscreen/rng.hpp"

namespace lcscreen {

struct ClassEndpointParams {
    double beta0 = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double tau_s = 1.0;

    bool operator==(const ClassEndpointParams&) const = default;
};

struct CommonEndpointParams {
    double beta0_base = 0.0;
    double tau_w = 1.0;
    double tau_e = 1.0;
    // hyper-precisions of the coefficient priors
    double tau0 = 1.0;
    double tau1 = 1.0;
    double tau2 = 1.0;
    double tau0_base = 1.0;

    bool operator==(const CommonEndpointParams&) const = default;
};

// One posterior sample of every model parameter.
struct ParameterDraw {
    int classes = 0;  // C
    int sites = 0;    // M
    std::vector<std::array<ClassEndpointParams, 2>> cls;  // [c][endpoint]
    std::array<CommonEndpointParams, 2> common{};
    std::vector<double> pi;  // C
    std::vector<double> p;   // M x C row-major; each column sums to 1
    std::vector<int> z;      // 1-based class per training subject
    std::vector<double> v;   // [(m * C + c) * 2 + endpoint]
    std::vector<double> w;   // [i * 2 + endpoint]
    double alpha = 2.0;

    const ClassEndpointParams& at(int c, Endpoint e) const { return cls[static_cast<std::size_t>(c)][idx(e)]; }
    ClassEndpointParams& at(int c, Endpoint e) { return cls[static_cast<std::size_t>(c)][idx(e)]; }
    const CommonEndpointParams& com(Endpoint e) const { return common[idx(e)]; }
    CommonEndpointParams& com(Endpoint e) { return common[idx(e)]; }
    double& site_profile(int m, int c) { return p[static_cast<std::size_t>(m * classes + c)]; }
    double site_profile(int m, int c) const { return p[static_cast<std::size_t>(m * classes + c)]; }
    double& site_effect(int m, int c, Endpoint e) {
        return v[static_cast<std::size_t>((m * classes + c) * 2 + idx(e))];
    }
    double site_effect(int m, int c, Endpoint e) const {
        return v[static_cast<std::size_t>((m * classes + c) * 2 + idx(e))];
    }
    double& subject_effect(std::size_t i, Endpoint e) { return w[i * 2 + static_cast<std::size_t>(idx(e))]; }
    double subject_effect(std::size_t i, Endpoint e) const { return w[i * 2 + static_cast<std::size_t>(idx(e))]; }

    // Throws NumericError naming the first broken invariant.
    void check(const ModelConfig& config) const;

    bool operator==(const ParameterDraw&) const = default;
};

struct McmcConfig {
    long burn_in = 50000;
    long keep = 1000;
    int thin = 1;
    std::uint64_t seed = 1;
    double alpha_step = 0.25;
    // Apply a seeded random relabeling to the initial assignment.
    bool permute_initial_labels = false;
    // Workers for the per-subject likelihood pass. Draws do not depend on it
    // and it is not written to the store.
    int threads = 1;

    void validate() const;
    bool operator==(const McmcConfig&) const = default;
};

struct DrawStore {
    ModelConfig config;
    McmcConfig run;
    std::string dataset_digest;
    std::vector<std::string> subject_ids;  // order of ParameterDraw::z
    int sites = 0;
    double alpha_acceptance = 0.0;
    std::vector<ParameterDraw> draws;

    std::size_t size() const { return draws.size(); }
    bool operator==(const DrawStore&) const = default;
};

// Newline-delimited JSON: one header record, then one record per draw.
void write_draw_store(std::ostream& out, const DrawStore& store);
std::string write_draw_store(const DrawStore& store);
DrawStore read_draw_store(std::istream& in);
DrawStore read_draw_store_file(const std::string& path);

// (n_{-i,c} + alpha / C) / (n - 1 + alpha) for each class c.
std::vector<double> conditional_class_prob(std::span<const int> counts_without_i, double alpha, int classes, int n);

// Metropolis-within-Gibbs sampler. The update steps are public so that each
// full conditional can be exercised in isolation.
class GibbsSampler {
 public:
    GibbsSampler(const Dataset& data, const ModelConfig& config, std::uint64_t seed);

    // k-means start on per-subject quadratic fits; coefficients at zero,
    // precisions at one, uniform weights, alpha at the midpoint.
    void initialize(bool permute_labels = false);

    // One full sweep in the fixed order: assignments, weights, site profiles,
    // coefficients, effects, precisions, alpha, hyper-precisions.
    void sweep(bool include_assignments = true);

    void update_assignments();
    void update_weights();
    void update_site_profiles();
    void update_coefficients();
    void update_baseline_coefficients();
    void update_effects();
    void update_site_effects();
    void update_subject_effects();
    void update_precisions();
    void update_alpha();
    void update_hyper_precisions();

    const ParameterDraw& state() const { return state_; }
    // Replaces the chain state; cached summaries are rebuilt.
    void set_state(ParameterDraw s);

    double alpha_acceptance_rate() const;
    void set_alpha_step(double step) { alpha_step_ = step; }
    void set_threads(int threads) { threads_ = threads; }
    long iteration() const { return iteration_; }
    std::size_t subject_count() const { return subjects_.size(); }

    // Log likelihood of subject i's data under class c with the subject effect
    // integrated out (site effect held at its current value).
    double subject_class_loglik(std::size_t i, int c) const;

 private:
    struct SubjectData {
        int site = 0;  // 0-based
        std::array<double, 2> baseline{};
        std::array<std::vector<double>, 2> times;
        std::array<std::vector<double>, 2> values;
    };

    double mean_at(std::size_t i, int c, Endpoint e, std::size_t j) const;
    double site_term(std::size_t i, int c, Endpoint e) const;
    double precision_draw(double shape, double rate);
    void sample_subject_effect(std::size_t i);
    void refresh_caches();

    ModelConfig config_;
    std::vector<SubjectData> subjects_;
    int sites_ = 0;
    Rng rng_;
    ParameterDraw state_;
    std::vector<double> log_pi_;
    std::vector<double> log_p_;
    std::vector<int> class_counts_;
    long iteration_ = 0;
    long alpha_proposals_ = 0;
    long alpha_accepts_ = 0;
    double alpha_step_ = 0.25;
    int threads_ = 1;
};

using FitProgress = std::function<void(long iteration, long total)>;

DrawStore fit(const Dataset& data, const ModelConfig& config, const McmcConfig& run,
              const FitProgress& progress = {});

}  // namespace lcscreen
