#include "lcscreen/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "lcscreen/errors.hpp"
#include "lcscreen/rng.hpp"
#include "lcscreen/text_io.hpp"

namespace lcscreen {

namespace {

bool sums_to_one(const std::vector<double>& v) {
    const double s = std::accumulate(v.begin(), v.end(), 0.0);
    return std::abs(s - 1.0) < 1e-9 && std::all_of(v.begin(), v.end(), [](double p) { return p >= 0.0; });
}

std::string subject_name(int i, int n) {
    const int width = static_cast<int>(std::to_string(std::max(n, 1)).size());
    std::string num = std::to_string(i);
    return "S" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(num.size()))), '0') + num;
}

}  // namespace

void SimScheme::validate() const {
    if (n_sites < 1) throw std::invalid_argument("scheme: n_sites must be >= 1");
    if (n_subjects < 1) throw std::invalid_argument("scheme: n_subjects must be >= 1");
    if (class_probs.empty() || class_probs.size() != classes.size()) {
        throw std::invalid_argument("scheme: class_probs and classes must have equal nonzero length");
    }
    if (!sums_to_one(class_probs)) throw std::invalid_argument("scheme: class_probs must sum to 1");
    for (const auto& c : classes) {
        for (const auto& p : c) {
            if (!(p.site_variance >= 0.0)) throw std::invalid_argument("scheme: site variances must be >= 0");
        }
    }
    for (const auto& c : common) {
        if (!(c.tau0_base > 0.0) || !(c.tau_w > 0.0) || !(c.tau_e > 0.0)) {
            throw std::invalid_argument("scheme: precisions must be > 0");
        }
    }
    if (visit_times.empty()) throw std::invalid_argument("scheme: visit_times must be nonempty");
    for (std::size_t j = 0; j < visit_times.size(); ++j) {
        if (!(visit_times[j] > 0.0) || (j > 0 && !(visit_times[j] > visit_times[j - 1]))) {
            throw std::invalid_argument("scheme: visit_times must be positive and strictly increasing");
        }
    }
    if (min_postbaseline_visits < 1 || min_postbaseline_visits > static_cast<int>(visit_times.size())) {
        throw std::invalid_argument("scheme: min_postbaseline_visits out of range");
    }
    const std::size_t n_final = visit_times.size() - static_cast<std::size_t>(min_postbaseline_visits) + 1;
    if (completion_probs.size() != n_final) {
        throw std::invalid_argument("scheme: completion_probs must have one entry per candidate final visit");
    }
    if (!sums_to_one(completion_probs)) throw std::invalid_argument("scheme: completion_probs must sum to 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("scheme: train_fraction must be in (0, 1)");
    }
}

SimScheme default_sim_scheme() {
    SimScheme s;
    s.n_sites = 50;
    s.n_subjects = 700;
    s.class_probs = {1.0 / 8, 1.0 / 8, 1.0 / 4, 1.0 / 4, 1.0 / 8, 1.0 / 8};

    const double b0x[] = {1.74, -0.10, 5.53, 1.01, 2.16, 6.51};
    const double b1x[] = {-0.38, -0.17, -1.18, -0.19, -0.07, 0.16};
    const double b2x[] = {0.016, 0.007, 0.049, 0.011, 0.023, -0.006};
    const double vx[] = {0.75, 0.75, 1.25, 1.25, 2.0, 2.0};
    const double b0y[] = {4.05, -0.69, 10.52, 2.37, 4.02, 10.73};
    const double b1y[] = {-0.81, -0.43, -0.67, -0.26, 0.11, 0.17};
    const double b2y[] = {0.032, 0.017, 0.000, 0.017, 0.018, -0.011};
    const double vy[] = {0.9375, 0.9375, 1.5625, 1.5625, 2.5, 2.5};
    for (int c = 0; c < 6; ++c) {
        s.classes.push_back({SimClassParams{b0x[c], b1x[c], b2x[c], vx[c]}, SimClassParams{b0y[c], b1y[c], b2y[c], vy[c]}});
    }
    s.common[idx(Endpoint::x)] = SimCommonParams{-0.4, 10.0, 1.0 / 12.0, 1.0, 1.0};
    s.common[idx(Endpoint::y)] = SimCommonParams{-0.6, 16.0, 1.0 / 12.0, 1.25, 1.25};
    s.shift_beta1 = 0.25;
    s.shift_beta2 = -0.0025;
    s.visit_times = {2, 4, 6, 8, 10, 12, 14};
    s.min_postbaseline_visits = 3;
    s.completion_probs = {0.01, 0.02, 0.04, 0.08, 0.85};
    s.train_fraction = 0.7;
    return s;
}

SimulatedStudy simulate_study(const SimScheme& scheme, std::uint64_t seed) {
    scheme.validate();
    Rng rng(seed);
    SimulatedStudy out;
    auto& truth = out.truth;
    auto& data = out.data;
    data.sites = scheme.n_sites;

    const std::size_t n_classes = scheme.classes.size();
    truth.site_probs = rng.dirichlet(std::vector<double>(static_cast<std::size_t>(scheme.n_sites), 1.0));
    truth.site_effects.assign(static_cast<std::size_t>(scheme.n_sites),
                              std::vector<std::array<double, 2>>(n_classes, {0.0, 0.0}));
    for (auto& site : truth.site_effects) {
        for (std::size_t c = 0; c < n_classes; ++c) {
            for (Endpoint e : kEndpoints) {
                site[c][idx(e)] = rng.normal(0.0, std::sqrt(scheme.cls(c, e).site_variance));
            }
        }
    }

    const std::size_t first_final = static_cast<std::size_t>(scheme.min_postbaseline_visits) - 1;
    for (int i = 1; i <= scheme.n_subjects; ++i) {
        SubjectRecord rec;
        rec.subject_id = subject_name(i, scheme.n_subjects);
        rec.site = static_cast<int>(rng.categorical(truth.site_probs)) + 1;
        const std::size_t c = rng.categorical(scheme.class_probs);
        const bool placebo = rng.bernoulli(0.5);
        const std::size_t last = first_final + rng.categorical(scheme.completion_probs);

        std::array<double, 2> w{};
        for (Endpoint e : kEndpoints) {
            const auto& com = scheme.com(e);
            rec.baseline[idx(e)] = rng.normal(com.mu0_base, 1.0 / std::sqrt(com.tau0_base));
            w[idx(e)] = rng.normal(0.0, 1.0 / std::sqrt(com.tau_w));
        }
        for (Endpoint e : kEndpoints) {
            const auto& com = scheme.com(e);
            const auto& cp = scheme.cls(c, e);
            const double b1 = cp.beta1 + (placebo ? scheme.shift_beta1 : 0.0);
            const double b2 = cp.beta2 + (placebo ? scheme.shift_beta2 : 0.0);
            const double offset = truth.site_effects[static_cast<std::size_t>(rec.site - 1)][c][idx(e)] + w[idx(e)];
            const double sd_e = 1.0 / std::sqrt(com.tau_e);
            for (std::size_t j = 0; j <= last; ++j) {
                const double t = scheme.visit_times[j];
                const double mean = cp.beta0 + com.beta0_base * rec.base(e) + b1 * t + b2 * t * t;
                rec.obs(e).push_back({t, mean + offset + rng.normal(0.0, sd_e)});
            }
        }
        truth.records.push_back(
            {rec.subject_id, static_cast<int>(c) + 1, placebo ? "placebo" : "treatment", scheme.visit_times[last]});
        truth.subject_effects.push_back(w);
        data.subjects.push_back(std::move(rec));
    }
    data.metadata["generator"] = "simgen";
    data.metadata["seed"] = std::to_string(seed);
    return out;
}

StudySplit split_train_test(const Dataset& d, const TruthLabels& labels, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split: fraction must be in (0, 1)");
    const std::size_t n = d.subjects.size();
    if (labels.records.size() != n) throw std::invalid_argument("split: labels do not match dataset");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
    std::vector<char> in_train(n, 0);
    for (std::size_t k = 0; k < n_train; ++k) in_train[order[k]] = 1;

    StudySplit s;
    for (auto* part : {&s.train, &s.test}) {
        part->sites = d.sites;
        part->metadata = d.metadata;
    }
    for (auto* part : {&s.train_truth, &s.test_truth}) {
        part->site_effects = labels.site_effects;
        part->site_probs = labels.site_probs;
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto& data = in_train[i] ? s.train : s.test;
        auto& truth = in_train[i] ? s.train_truth : s.test_truth;
        data.subjects.push_back(d.subjects[i]);
        truth.records.push_back(labels.records[i]);
        if (i < labels.subject_effects.size()) truth.subject_effects.push_back(labels.subject_effects[i]);
    }
    s.train.metadata["split"] = "train";
    s.test.metadata["split"] = "test";
    return s;
}

std::string emit_truth_csv(const TruthLabels& labels) {
    std::ostringstream ss;
    ss << "subject_id,true_class,arm,final_visit\n";
    for (const auto& r : labels.records) {
        ss << text::csv_field(r.subject_id) << ',' << r.true_class << ',' << r.arm << ','
           << text::format_double(r.final_visit) << '\n';
    }
    return ss.str();
}

TruthLabels ingest_truth_csv(const std::string& text) {
    TruthLabels out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line != "subject_id,true_class,arm,final_visit") throw DataError("truth: bad header");
            continue;
        }
        if (line.empty()) continue;
        auto f = text::split_csv(line);
        if (f.size() != 4) throw DataError("truth line " + std::to_string(lineno) + ": expected 4 fields");
        auto cls = text::parse_int(f[1]);
        auto fv = text::parse_double(f[3]);
        if (!cls || !fv) throw DataError("truth line " + std::to_string(lineno) + ": malformed number");
        out.records.push_back({f[0], static_cast<int>(*cls), f[2], *fv});
    }
    return out;
}

}  // namespace lcscreen
