#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lcscreen/core_types.hpp"

namespace lcscreen {

// Trajectory parameters of one true class for one endpoint.
struct SimClassParams {
    double beta0 = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double site_variance = 0.0;  // 1 / tau_sc
};

// Parameters shared by all classes for one endpoint.
struct SimCommonParams {
    double beta0_base = 0.0;
    double mu0_base = 0.0;
    double tau0_base = 1.0;  // precision of the baseline distribution
    double tau_w = 1.0;
    double tau_e = 1.0;
};

struct SimScheme {
    int n_sites = 50;
    int n_subjects = 700;
    std::vector<double> class_probs;
    // classes[c][endpoint]
    std::vector<std::array<SimClassParams, 2>> classes;
    std::array<SimCommonParams, 2> common{};
    // Added to (beta1, beta2) of both endpoints for placebo subjects.
    double shift_beta1 = 0.0;
    double shift_beta2 = 0.0;
    std::vector<double> visit_times;
    int min_postbaseline_visits = 3;
    // Probabilities over the candidate final visits
    // visit_times[min_postbaseline_visits - 1], ..., visit_times.back().
    std::vector<double> completion_probs;
    double train_fraction = 0.7;

    const SimClassParams& cls(std::size_t c, Endpoint e) const { return classes[c][idx(e)]; }
    const SimCommonParams& com(Endpoint e) const { return common[idx(e)]; }

    // Throws std::invalid_argument on an inconsistent scheme.
    void validate() const;
};

SimScheme default_sim_scheme();

struct TruthRecord {
    std::string subject_id;
    int true_class = 0;  // 1-based
    std::string arm;     // "placebo" or "treatment"
    double final_visit = 0.0;

    bool operator==(const TruthRecord&) const = default;
};

struct TruthLabels {
    std::vector<TruthRecord> records;
    // site_effects[site-1][class-1][endpoint]
    std::vector<std::vector<std::array<double, 2>>> site_effects;
    // subject_effects[i][endpoint], aligned with records
    std::vector<std::array<double, 2>> subject_effects;
    std::vector<double> site_probs;
};

struct SimulatedStudy {
    Dataset data;
    TruthLabels truth;
};

SimulatedStudy simulate_study(const SimScheme& scheme, std::uint64_t seed);

struct StudySplit {
    Dataset train;
    Dataset test;
    TruthLabels train_truth;
    TruthLabels test_truth;
};

// Subject-level random split; the training part has round(n * fraction)
// subjects. Relative subject order is preserved within each part.
StudySplit split_train_test(const Dataset& d, const TruthLabels& labels, double fraction, std::uint64_t seed);

// CSV `subject_id,true_class,arm,final_visit`.
std::string emit_truth_csv(const TruthLabels& labels);
TruthLabels ingest_truth_csv(const std::string& text);

}  // namespace lcscreen
