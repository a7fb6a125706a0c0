#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lcscreen/core_types.hpp"
#include "lcscreen/parallel.hpp"
#include "lcscreen/predictive.hpp"
#include "lcscreen/region.hpp"
#include "lcscreen/sampler.hpp"
#include "lcscreen/simgen.hpp"

namespace lcscreen {

// Which visit is screened for a subject, and what it is conditioned on.
struct Horizon {
    enum class Kind {
        // Latest visit with both endpoints observed, given everything before
        // it; falls back to `next` when no such visit exists.
        latest,
        // Earliest scheduled time after the last observation (no verdict).
        next,
        // Visit k+1 given the first k post-baseline visits (k = 0: baseline only).
        first_k,
    };
    Kind kind = Kind::latest;
    int k = 0;
    std::vector<double> schedule;  // visit times used by `next`

    static Horizon latest_observed(std::vector<double> schedule = {}) { return {Kind::latest, 0, std::move(schedule)}; }
    static Horizon next_visit(std::vector<double> schedule) { return {Kind::next, 0, std::move(schedule)}; }
    static Horizon first_k_visits(int k) { return {Kind::first_k, k, {}}; }
    static Horizon baseline_only() { return first_k_visits(0); }
};

struct ScreenOptions {
    GridSpec grid;
    double target = 0.8;
    RegionAlgorithm algorithm = RegionAlgorithm::hdr;
    std::optional<double> c_quick;  // branch only; default 0.9 * target
    Horizon horizon;
};

struct ScreeningResult {
    std::string subject_id;
    int site = 0;
    double future_time = 0.0;
    RegionAlgorithm algorithm = RegionAlgorithm::hdr;
    CellField field;
    CredibleRegion region;
    std::optional<std::pair<double, double>> observed;
    Verdict verdict = Verdict::not_yet_observed;
    double region_mass_at_observed = 0.0;  // mass of the observed cell; 0 off the grid
};

// Request for `subject` predicting `future_time` from every observation
// strictly before it.
PredictionRequest build_request(const SubjectRecord& subject, double future_time);

// Screened time for the subject, or nullopt if the horizon does not apply
// (for first_k: fewer than k + 1 complete visits).
std::optional<double> screening_time(const SubjectRecord& subject, const Horizon& horizon);

// Throws std::invalid_argument if the horizon does not apply to the subject.
ScreeningResult screen_subject(const SubjectRecord& subject, const DrawStore& store, const ScreenOptions& options);

struct MetricsSummary {
    RegionAlgorithm algorithm = RegionAlgorithm::hdr;
    double target = 0.0;
    std::size_t n_subjects = 0;       // screened
    std::size_t n_observed = 0;       // screened with an observed value
    std::size_t n_inside = 0;
    std::size_t n_off_grid = 0;       // also counted as outside
    std::size_t n_ineligible = 0;     // horizon did not apply
    std::size_t n_grid_failures = 0;  // grid could not hold the target mass; skipped
    double coverage_proportion = 0.0;
    double bias = 0.0;  // mean(p_sum - target)
    double rmse = 0.0;  // sqrt(mean((p_sum - target)^2))
    double coverage_minus_target = 0.0;
};

std::string metrics_to_json(const std::vector<MetricsSummary>& summaries);

struct CohortReport {
    std::vector<ScreeningResult> results;  // dataset order
    MetricsSummary summary;
};

// Screens every eligible subject. Results do not depend on `threads`.
CohortReport evaluate_cohort(const Dataset& test, const DrawStore& store, const ScreenOptions& options,
                             int threads = 1);

MetricsSummary summarize(const std::vector<ScreeningResult>& results, RegionAlgorithm algorithm, double target);

// subject_id,site,future_time,algorithm,target,p_sum,observed_x,observed_y,verdict,cell_mass
std::string write_report_csv(const std::vector<ScreeningResult>& results, double target);

// Reads a report back into results carrying subject, time, algorithm, p_sum,
// observation and verdict (no field or cells); enough to recompute metrics.
struct ReportRows {
    std::vector<ScreeningResult> results;
    std::vector<double> targets;  // per row
};
ReportRows read_report_csv(const std::string& text);

struct BestConfiguration {
    std::size_t draw = 0;  // index of the chosen draw
    double loss = 0.0;
    std::vector<int> z;
};

// Least-squares partition: the retained draw closest to the posterior
// co-clustering matrix (earliest draw on ties).
BestConfiguration dahl_best_configuration(const DrawStore& store);

// "c(count)" for occupied classes, largest first (ties by class label).
std::string class_size_summary(const std::vector<int>& z);

// One simulation replicate: simulate, split, fit on the training part and
// screen the test part with both algorithms.
struct ReplicateConfig {
    SimScheme scheme = default_sim_scheme();
    ModelConfig model;
    McmcConfig mcmc;
    GridSpec grid;
    double target = 0.8;
    std::optional<double> c_quick;
    Horizon horizon = Horizon::first_k_visits(2);
};

struct ReplicateResult {
    std::uint64_t seed = 0;
    MetricsSummary branch;
    MetricsSummary hdr;
};

ReplicateResult run_replicate(const ReplicateConfig& config, std::uint64_t seed);

// Replicate r uses derive_seed(seed, r); output order is replicate order for
// any thread count.
std::vector<ReplicateResult> run_replicates(const ReplicateConfig& config, int replicates, std::uint64_t seed,
                                            int threads = 1);

struct ReplicateTableRow {
    RegionAlgorithm algorithm = RegionAlgorithm::hdr;
    double coverage_mean = 0.0;
    double coverage_sd = 0.0;
    double bias_mean = 0.0;
    double bias_sd = 0.0;
    double rmse_mean = 0.0;
    double rmse_sd = 0.0;
};

std::vector<ReplicateTableRow> replicate_table(const std::vector<ReplicateResult>& results);

}  // namespace lcscreen
