#include "lcscreen/screening.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "lcscreen/errors.hpp"
#include "lcscreen/rng.hpp"
#include "lcscreen/text_io.hpp"

namespace lcscreen {

namespace {

std::optional<double> value_at(const Series& s, double t) {
    for (const auto& o : s) {
        if (o.time == t) return o.value;
    }
    return std::nullopt;
}

// Times at which both endpoints are observed, ascending.
std::vector<double> complete_times(const SubjectRecord& s) {
    std::vector<double> out;
    for (const auto& o : s.obs(Endpoint::x)) {
        if (value_at(s.obs(Endpoint::y), o.time)) out.push_back(o.time);
    }
    return out;
}

double last_observed_time(const SubjectRecord& s) {
    double t = 0.0;
    for (Endpoint e : kEndpoints) {
        if (!s.obs(e).empty()) t = std::max(t, s.obs(e).back().time);
    }
    return t;
}

std::optional<double> next_scheduled(const SubjectRecord& s, const std::vector<double>& schedule) {
    const double last = last_observed_time(s);
    std::optional<double> best;
    for (double t : schedule) {
        if (t > last && (!best || t < *best)) best = t;
    }
    return best;
}

// Region and verdict for an already computed field.
ScreeningResult finish(const SubjectRecord& subject, double future_time, const CellField& field, double target,
                       RegionAlgorithm algorithm, std::optional<double> c_quick) {
    ScreeningResult out;
    out.subject_id = subject.subject_id;
    out.site = subject.site;
    out.future_time = future_time;
    out.algorithm = algorithm;
    out.field = field;
    out.region = algorithm == RegionAlgorithm::branch ? branch_region(field, target, c_quick.value_or(0.9 * target))
                                                      : hdr_region(field, target);
    const auto ox = value_at(subject.obs(Endpoint::x), future_time);
    const auto oy = value_at(subject.obs(Endpoint::y), future_time);
    if (ox && oy) {
        out.observed = std::make_pair(*ox, *oy);
        out.verdict = contains(out.region, *ox, *oy);
        const auto r = locate_cell(field.grid.x_edges, *ox);
        const auto c = locate_cell(field.grid.y_edges, *oy);
        out.region_mass_at_observed = (r && c) ? field.at(*r, *c) : 0.0;
    } else {
        out.verdict = Verdict::not_yet_observed;
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

PredictionRequest build_request(const SubjectRecord& subject, double future_time) {
    PredictionRequest req;
    req.baseline = subject.baseline;
    req.site = subject.site;
    req.future_times = {future_time};
    for (Endpoint e : kEndpoints) {
        for (const auto& o : subject.obs(e)) {
            if (o.time < future_time) req.hist(e).push_back(o);
        }
    }
    return req;
}

std::optional<double> screening_time(const SubjectRecord& subject, const Horizon& horizon) {
    switch (horizon.kind) {
        case Horizon::Kind::first_k: {
            if (horizon.k < 0) throw std::invalid_argument("horizon: k must be >= 0");
            const auto& xs = subject.obs(Endpoint::x);
            const auto& ys = subject.obs(Endpoint::y);
            const auto k = static_cast<std::size_t>(horizon.k);
            if (xs.size() <= k || ys.size() <= k) return std::nullopt;
            // the first k visits must line up across endpoints
            for (std::size_t j = 0; j <= k; ++j) {
                if (xs[j].time != ys[j].time) return std::nullopt;
            }
            return xs[k].time;
        }
        case Horizon::Kind::latest: {
            const auto t = complete_times(subject);
            if (!t.empty()) return t.back();
            return next_scheduled(subject, horizon.schedule);
        }
        case Horizon::Kind::next:
            return next_scheduled(subject, horizon.schedule);
    }
    return std::nullopt;
}

ScreeningResult screen_subject(const SubjectRecord& subject, const DrawStore& store, const ScreenOptions& options) {
    const auto t = screening_time(subject, options.horizon);
    if (!t) throw std::invalid_argument("screen: no screening visit for subject " + subject.subject_id);
    const auto field = cell_field(build_request(subject, *t), options.grid, store);
    auto result = finish(subject, *t, field, options.target, options.algorithm, options.c_quick);
    if (options.horizon.kind == Horizon::Kind::next) {
        result.observed.reset();
        result.verdict = Verdict::not_yet_observed;
        result.region_mass_at_observed = 0.0;
    }
    return result;
}

MetricsSummary summarize(const std::vector<ScreeningResult>& results, RegionAlgorithm algorithm, double target) {
    MetricsSummary m;
    m.algorithm = algorithm;
    m.target = target;
    double dev = 0.0;
    double dev2 = 0.0;
    for (const auto& r : results) {
        ++m.n_subjects;
        const double d = r.region.p_sum - target;
        dev += d;
        dev2 += d * d;
        if (r.verdict == Verdict::not_yet_observed) continue;
        ++m.n_observed;
        if (r.verdict == Verdict::inside) ++m.n_inside;
        if (r.verdict == Verdict::off_grid) ++m.n_off_grid;
    }
    if (m.n_subjects > 0) {
        m.bias = dev / static_cast<double>(m.n_subjects);
        m.rmse = std::sqrt(dev2 / static_cast<double>(m.n_subjects));
    }
    if (m.n_observed > 0) {
        m.coverage_proportion = static_cast<double>(m.n_inside) / static_cast<double>(m.n_observed);
        m.coverage_minus_target = m.coverage_proportion - target;
    }
    return m;
}

CohortReport evaluate_cohort(const Dataset& test, const DrawStore& store, const ScreenOptions& options, int threads) {
    const std::size_t n = test.subjects.size();
    enum class Status { ok, ineligible, grid_failure };
    std::vector<std::optional<ScreeningResult>> slots(n);
    std::vector<Status> status(n, Status::ok);
    parallel_for(n, threads, [&](std::size_t i) {
        const auto& s = test.subjects[i];
        if (!screening_time(s, options.horizon)) {
            status[i] = Status::ineligible;
            return;
        }
        try {
            slots[i] = screen_subject(s, store, options);
        } catch (const GridTooSmallError&) {
            status[i] = Status::grid_failure;
        }
    });
    CohortReport report;
    std::size_t ineligible = 0;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (status[i] == Status::ineligible) ++ineligible;
        if (status[i] == Status::grid_failure) ++failures;
        if (slots[i]) report.results.push_back(std::move(*slots[i]));
    }
    if (report.results.empty()) throw DataError("screen: no eligible subjects");
    report.summary = summarize(report.results, options.algorithm, options.target);
    report.summary.n_ineligible = ineligible;
    report.summary.n_grid_failures = failures;
    return report;
}

std::string metrics_to_json(const std::vector<MetricsSummary>& summaries) {
    nlohmann::ordered_json doc;
    for (const auto& m : summaries) {
        doc[name(m.algorithm)] = nlohmann::ordered_json{
            {"target", m.target},
            {"n_subjects", m.n_subjects},
            {"n_observed", m.n_observed},
            {"n_inside", m.n_inside},
            {"n_off_grid", m.n_off_grid},
            {"n_ineligible", m.n_ineligible},
            {"n_grid_failures", m.n_grid_failures},
            {"coverage_proportion", m.coverage_proportion},
            {"bias", m.bias},
            {"rmse", m.rmse},
            {"coverage_minus_target", m.coverage_minus_target},
        };
    }
    return doc.dump(2) + "\n";
}

std::string write_report_csv(const std::vector<ScreeningResult>& results, double target) {
    std::string out = "subject_id,site,future_time,algorithm,target,p_sum,observed_x,observed_y,verdict,cell_mass\n";
    for (const auto& r : results) {
        out += text::csv_field(r.subject_id) + ',' + std::to_string(r.site) + ',' + text::format_double(r.future_time) +
               ',' + name(r.algorithm) + ',' + text::format_double(target) + ',' + text::format_double(r.region.p_sum) +
               ',' + (r.observed ? text::format_double(r.observed->first) : "") + ',' +
               (r.observed ? text::format_double(r.observed->second) : "") + ',' + name(r.verdict) + ',' +
               text::format_double(r.region_mass_at_observed) + '\n';
    }
    return out;
}

ReportRows read_report_csv(const std::string& content) {
    ReportRows out;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto end = content.find('\n', pos);
        if (end == std::string::npos) end = content.size();
        const std::string line = content.substr(pos, end - pos);
        pos = end + 1;
        ++lineno;
        const auto f = text::split_csv(line);
        if (lineno == 1) {
            if (text::trim(line) != "subject_id,site,future_time,algorithm,target,p_sum,observed_x,observed_y,verdict,cell_mass") {
                throw DataError("report: bad header");
            }
            continue;
        }
        if (text::trim(line).empty()) continue;
        const std::string where = "report line " + std::to_string(lineno);
        if (f.size() != 10) throw DataError(where + ": expected 10 fields");
        ScreeningResult r;
        r.subject_id = f[0];
        const auto site = text::parse_int(f[1]);
        const auto t = text::parse_double(f[2]);
        const auto target = text::parse_double(f[4]);
        const auto p_sum = text::parse_double(f[5]);
        const auto mass = text::parse_double(f[9]);
        if (!site || !t || !target || !p_sum || !mass) throw DataError(where + ": malformed number");
        try {
            r.algorithm = parse_algorithm(f[3]);
            r.verdict = parse_verdict(f[8]);
        } catch (const std::invalid_argument& e) {
            throw DataError(where + ": " + e.what());
        }
        if (!f[6].empty() || !f[7].empty()) {
            const auto ox = text::parse_double(f[6]);
            const auto oy = text::parse_double(f[7]);
            if (!ox || !oy) throw DataError(where + ": malformed observation");
            r.observed = std::make_pair(*ox, *oy);
        }
        r.site = static_cast<int>(*site);
        r.future_time = *t;
        r.region.p_sum = *p_sum;
        r.region.target = *target;
        r.region.algorithm = r.algorithm;
        r.region_mass_at_observed = *mass;
        out.results.push_back(std::move(r));
        out.targets.push_back(*target);
    }
    return out;
}

BestConfiguration dahl_best_configuration(const DrawStore& store) {
    if (store.draws.empty()) throw DataError("best-config: empty draw store");
    const std::size_t n = store.draws.front().z.size();
    for (const auto& d : store.draws) {
        if (d.z.size() != n) throw DataError("best-config: draws disagree on the number of subjects");
    }
    // co-clustering counts over the strict upper triangle
    std::vector<double> pi_hat(n * n, 0.0);
    for (const auto& d : store.draws) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (d.z[i] == d.z[j]) pi_hat[i * n + j] += 1.0;
            }
        }
    }
    const double q = static_cast<double>(store.draws.size());
    for (double& v : pi_hat) v /= q;
    BestConfiguration best;
    best.loss = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < store.draws.size(); ++k) {
        const auto& z = store.draws[k].z;
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double d = (z[i] == z[j] ? 1.0 : 0.0) - pi_hat[i * n + j];
                loss += d * d;
            }
        }
        if (loss < best.loss) {
            best.loss = loss;
            best.draw = k;
            best.z = z;
        }
    }
    return best;
}

std::string class_size_summary(const std::vector<int>& z) {
    std::map<int, int> counts;
    for (int c : z) ++counts[c];
    std::vector<std::pair<int, int>> v(counts.begin(), counts.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::string out;
    for (const auto& [c, n] : v) {
        if (!out.empty()) out += ", ";
        out += std::to_string(c) + "(" + std::to_string(n) + ")";
    }
    return out;
}

ReplicateResult run_replicate(const ReplicateConfig& config, std::uint64_t seed) {
    ReplicateResult out;
    out.seed = seed;
    const auto study = simulate_study(config.scheme, derive_seed(seed, 1));
    const auto split = split_train_test(study.data, study.truth, config.scheme.train_fraction, derive_seed(seed, 2));
    McmcConfig mcmc = config.mcmc;
    mcmc.seed = derive_seed(seed, 3);
    const auto store = fit(split.train, config.model, mcmc);

    std::vector<ScreeningResult> branch;
    std::vector<ScreeningResult> hdr;
    std::size_t ineligible = 0;
    std::size_t failures = 0;
    for (const auto& s : split.test.subjects) {
        const auto t = screening_time(s, config.horizon);
        if (!t) {
            ++ineligible;
            continue;
        }
        const auto field = cell_field(build_request(s, *t), config.grid, store);
        try {
            branch.push_back(finish(s, *t, field, config.target, RegionAlgorithm::branch, config.c_quick));
            hdr.push_back(finish(s, *t, field, config.target, RegionAlgorithm::hdr, config.c_quick));
        } catch (const GridTooSmallError&) {
            ++failures;
        }
    }
    out.branch = summarize(branch, RegionAlgorithm::branch, config.target);
    out.hdr = summarize(hdr, RegionAlgorithm::hdr, config.target);
    for (auto* m : {&out.branch, &out.hdr}) {
        m->n_ineligible = ineligible;
        m->n_grid_failures = failures;
    }
    return out;
}

std::vector<ReplicateResult> run_replicates(const ReplicateConfig& config, int replicates, std::uint64_t seed,
                                            int threads) {
    if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    std::vector<ReplicateResult> out(static_cast<std::size_t>(replicates));
    parallel_for(out.size(), threads,
                 [&](std::size_t r) { out[r] = run_replicate(config, derive_seed(seed, r)); });
    return out;
}

std::vector<ReplicateTableRow> replicate_table(const std::vector<ReplicateResult>& results) {
    std::vector<ReplicateTableRow> rows;
    for (RegionAlgorithm a : {RegionAlgorithm::branch, RegionAlgorithm::hdr}) {
        std::vector<double> cov;
        std::vector<double> bias;
        std::vector<double> rmse;
        for (const auto& r : results) {
            const auto& m = a == RegionAlgorithm::branch ? r.branch : r.hdr;
            cov.push_back(m.coverage_proportion);
            bias.push_back(m.bias);
            rmse.push_back(m.rmse);
        }
        rows.push_back({a, mean_of(cov), sd_of(cov), mean_of(bias), sd_of(bias), mean_of(rmse), sd_of(rmse)});
    }
    return rows;
}

}  // namespace lcscreen
