#pragma once

#include <array>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace lcscreen {

enum class Endpoint : int { x = 0, y = 1 };
inline constexpr std::array<Endpoint, 2> kEndpoints{Endpoint::x, Endpoint::y};

inline constexpr int idx(Endpoint e) { return static_cast<int>(e); }
inline constexpr const char* name(Endpoint e) { return e == Endpoint::x ? "x" : "y"; }

// One post-baseline measurement: change from baseline at `time` weeks.
struct Observation {
    double time = 0.0;
    double value = 0.0;

    bool operator==(const Observation&) const = default;
};

using Series = std::vector<Observation>;

struct SubjectRecord {
    std::string subject_id;
    int site = 1;  // 1-based
    std::array<double, 2> baseline{0.0, 0.0};
    std::array<Series, 2> series;  // indexed by Endpoint
    std::optional<std::string> arm;

    const Series& obs(Endpoint e) const { return series[idx(e)]; }
    Series& obs(Endpoint e) { return series[idx(e)]; }
    double base(Endpoint e) const { return baseline[idx(e)]; }

    bool operator==(const SubjectRecord&) const = default;
};

struct Dataset {
    std::vector<SubjectRecord> subjects;
    int sites = 0;  // M
    std::map<std::string, std::string> metadata;

    std::size_t observation_count() const;
    const SubjectRecord* find(const std::string& subject_id) const;

    bool operator==(const Dataset&) const = default;
};

// Gamma(shape = rate = gamma) hyperparameters for one endpoint. The prior mean
// of the baseline coefficient is mu0_base.
struct EndpointPriors {
    double gamma0 = 0.01;
    double gamma1 = 0.01;
    double gamma2 = 0.01;
    double gamma_sc = 0.01;
    double gamma_w = 0.01;
    double gamma_e = 0.01;
    double mu0_base = 0.0;
    double gamma0_base = 0.01;

    bool operator==(const EndpointPriors&) const = default;
};

struct ModelConfig {
    int classes = 30;  // C
    std::array<EndpointPriors, 2> priors{};
    double alpha_lo = 1.0;
    double alpha_hi = 3.0;

    // Structural switches. Disabling an effect clamps it to zero in the
    // sampler and removes its variance from predictive covariances.
    bool site_effects = true;
    bool subject_effects = true;

    // When set, the coefficient hyper-precisions tau0, tau1, tau2 and
    // tau0_base are held at this value instead of being sampled.
    std::optional<double> fixed_hyper_precision;

    const EndpointPriors& prior(Endpoint e) const { return priors[idx(e)]; }

    // Throws std::invalid_argument on the first violated bound.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

struct Violation {
    std::string subject_id;
    std::string field;
    std::string rule;

    bool operator==(const Violation&) const = default;
};

// Reads the long CSV format
//   subject_id,site,endpoint,time,baseline,value[,arm]
// Rows at time 0 define baselines. Leading lines of the form
// "#meta key=value" populate Dataset::metadata. Throws DataError with the
// offending line number on malformed input.
Dataset ingest_dataset(std::istream& in);
Dataset ingest_dataset_file(const std::string& path);

// Writes the same format, preceded by "#sites M". ingest_dataset(emit_dataset(d))
// == d whenever subjects are ordered by id, which is the order ingest produces.
void emit_dataset(std::ostream& out, const Dataset& d);
std::string emit_dataset(const Dataset& d);

std::vector<Violation> validate_dataset(const Dataset& d);

// 64-bit FNV-1a over the canonical CSV emission.
std::string dataset_digest(const Dataset& d);

}  // namespace lcscreen
