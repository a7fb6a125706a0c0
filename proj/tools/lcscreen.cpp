// Command-line front end: simulate | fit | predict | region | screen | metrics | best-config.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcscreen/core_types.hpp"
#include "lcscreen/errors.hpp"
#include "lcscreen/predictive.hpp"
#include "lcscreen/region.hpp"
#include "lcscreen/sampler.hpp"
#include "lcscreen/screening.hpp"
#include "lcscreen/simgen.hpp"
#include "lcscreen/text_io.hpp"

namespace fs = std::filesystem;
using namespace lcscreen;

namespace {

std::vector<double> parse_list(const std::string& s, const char* what) {
    std::vector<double> out;
    if (text::trim(s).empty()) return out;
    for (const auto& f : text::split_csv(s)) {
        const auto v = text::parse_double(text::trim(f));
        if (!v) throw std::invalid_argument(std::string(what) + ": malformed number '" + f + "'");
        out.push_back(*v);
    }
    return out;
}

std::pair<double, double> parse_point(const std::string& s) {
    const auto v = parse_list(s, "point");
    if (v.size() != 2) throw std::invalid_argument("point: expected 'x,y'");
    return {v[0], v[1]};
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    text::atomic_write(path.string(), content);
}

void log(const std::string& msg) { std::cerr << msg << '\n'; }

std::string safe_name(const std::string& id) {
    std::string out;
    for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

// ---------------------------------------------------------------- options

struct ModelFlags {
    int classes = 30;
    double alpha_lo = 1.0;
    double alpha_hi = 3.0;
    double gamma = 0.01;
    double mu0_base_x = 0.0;
    double mu0_base_y = 0.0;
    bool no_site_effects = false;
    bool no_subject_effects = false;
    double fixed_hyper = 0.0;

    void add(CLI::App* app) {
        app->add_option("--classes", classes, "Number of latent classes C")->capture_default_str();
        app->add_option("--alpha-lo", alpha_lo, "Lower bound of the uniform prior on alpha")->capture_default_str();
        app->add_option("--alpha-hi", alpha_hi, "Upper bound of the uniform prior on alpha")->capture_default_str();
        app->add_option("--gamma", gamma, "Shape = rate of every gamma hyperprior")->capture_default_str();
        app->add_option("--mu0-base-x", mu0_base_x, "Prior mean of the x baseline coefficient")->capture_default_str();
        app->add_option("--mu0-base-y", mu0_base_y, "Prior mean of the y baseline coefficient")->capture_default_str();
        app->add_flag("--no-site-effects", no_site_effects, "Clamp site effects to zero");
        app->add_flag("--no-subject-effects", no_subject_effects, "Clamp subject effects to zero");
        app->add_option("--fixed-hyper-precision", fixed_hyper,
                        "Hold coefficient hyper-precisions at this value (0 = sample them)")
            ->capture_default_str();
    }

    ModelConfig build() const {
        if (classes < 2) throw std::invalid_argument("--classes must be >= 2");
        ModelConfig m;
        m.classes = classes;
        m.alpha_lo = alpha_lo;
        m.alpha_hi = alpha_hi;
        for (auto& p : m.priors) {
            p.gamma0 = p.gamma1 = p.gamma2 = p.gamma_sc = p.gamma_w = p.gamma_e = p.gamma0_base = gamma;
        }
        m.priors[idx(Endpoint::x)].mu0_base = mu0_base_x;
        m.priors[idx(Endpoint::y)].mu0_base = mu0_base_y;
        m.site_effects = !no_site_effects;
        m.subject_effects = !no_subject_effects;
        if (fixed_hyper > 0.0) m.fixed_hyper_precision = fixed_hyper;
        m.validate();
        return m;
    }
};

struct McmcFlags {
    long burn_in = 50000;
    long keep = 1000;
    int thin = 1;
    std::uint64_t seed = 1;
    double alpha_step = 0.25;
    bool permute = false;

    void add(CLI::App* app, bool with_seed) {
        app->add_option("--burnin", burn_in, "Burn-in sweeps")->capture_default_str();
        app->add_option("--keep", keep, "Retained draws")->capture_default_str();
        app->add_option("--thin", thin, "Sweeps per retained draw")->capture_default_str();
        if (with_seed) app->add_option("--seed", seed, "Random seed")->capture_default_str();
        app->add_option("--alpha-step", alpha_step, "Random-walk step for alpha")->capture_default_str();
        app->add_flag("--permute-labels", permute, "Randomly relabel the initial clustering");
    }

    McmcConfig build() const {
        McmcConfig r;
        r.burn_in = burn_in;
        r.keep = keep;
        r.thin = thin;
        r.seed = seed;
        r.alpha_step = alpha_step;
        r.permute_initial_labels = permute;
        r.validate();
        return r;
    }
};

struct RegionFlags {
    double target = 0.8;
    std::string algorithm = "hdr";
    double c_quick = 0.0;

    void add(CLI::App* app) {
        app->add_option("--target", target, "Target credible level")->capture_default_str();
        app->add_option("--algorithm", algorithm, "Region algorithm: branch or hdr")->capture_default_str();
        app->add_option("--c-quick", c_quick, "Quick-phase level for branch (0 = 0.9 * target)")->capture_default_str();
    }

    std::optional<double> c() const { return c_quick > 0.0 ? std::optional<double>(c_quick) : std::nullopt; }
};

struct HorizonFlags {
    std::string kind = "latest";
    int k = 0;
    std::string schedule;

    void add(CLI::App* app) {
        app->add_option("--horizon", kind, "Screened visit: latest, next or first-k")->capture_default_str();
        app->add_option("--k", k, "Number of conditioning visits for --horizon first-k")->capture_default_str();
        app->add_option("--schedule", schedule, "Comma-separated visit schedule used to find the next visit");
    }

    Horizon build() const {
        const auto sched = parse_list(schedule, "schedule");
        if (kind == "latest") return Horizon::latest_observed(sched);
        if (kind == "next") {
            if (sched.empty()) throw std::invalid_argument("--horizon next needs --schedule");
            return Horizon::next_visit(sched);
        }
        if (kind == "first-k") {
            if (k < 0) throw std::invalid_argument("--k must be >= 0");
            return Horizon::first_k_visits(k);
        }
        throw std::invalid_argument("unknown horizon '" + kind + "' (expected latest, next or first-k)");
    }
};

constexpr const char* kDefaultGrid = "-16:16:2,-24:16:2";

// ---------------------------------------------------------------- commands

struct SimulateCmd {
    std::uint64_t seed = 1;
    int subjects = 0;
    int sites = 0;
    double train_fraction = 0.7;
    std::string out;

    int run() const {
        SimScheme scheme = default_sim_scheme();
        if (subjects > 0) scheme.n_subjects = subjects;
        if (sites > 0) scheme.n_sites = sites;
        scheme.train_fraction = train_fraction;
        scheme.validate();
        const auto study = simulate_study(scheme, derive_seed(seed, 1));
        const auto split = split_train_test(study.data, study.truth, scheme.train_fraction, derive_seed(seed, 2));
        const fs::path dir(out);
        write_file(dir / "train.csv", emit_dataset(split.train));
        write_file(dir / "test.csv", emit_dataset(split.test));
        write_file(dir / "truth.csv", emit_truth_csv(study.truth));
        log("simulate: " + std::to_string(split.train.subjects.size()) + " train / " +
            std::to_string(split.test.subjects.size()) + " test subjects written to " + out);
        return 0;
    }
};

struct FitCmd {
    std::string data;
    std::string out;
    ModelFlags model;
    McmcFlags mcmc;
    bool progress = false;
    int threads = 1;

    int run() const {
        const auto d = ingest_dataset_file(data);
        const auto mc = model.build();
        auto run = mcmc.build();
        run.threads = threads;
        run.validate();
        const auto t0 = std::chrono::steady_clock::now();
        FitProgress cb;
        if (progress) {
            cb = [](long it, long total) {
                if (it % 5000 == 0 || it == total) std::cerr << "fit: sweep " << it << " / " << total << '\n';
            };
        }
        const auto store = fit(d, mc, run, cb);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_file(out, write_draw_store(store));
        const long sweeps = run.burn_in + run.keep * run.thin;
        std::ostringstream msg;
        msg << "fit: " << store.size() << " draws; alpha acceptance " << store.alpha_acceptance << "; " << sweeps
            << " sweeps in " << secs << " s (" << 1e3 * secs / static_cast<double>(sweeps) << " ms/sweep)";
        log(msg.str());
        return 0;
    }
};

struct PredictCmd {
    std::string draws;
    std::string data;
    std::string subject;
    double baseline_x = 0.0;
    double baseline_y = 0.0;
    double time = 0.0;
    std::string grid = kDefaultGrid;
    std::string out;
    std::string evaluate;

    int run() const {
        const auto store = read_draw_store_file(draws);
        PredictionRequest req;
        if (!subject.empty()) {
            if (data.empty()) throw std::invalid_argument("--subject needs --data");
            const auto d = ingest_dataset_file(data);
            const auto* s = d.find(subject);
            if (!s) throw DataError("subject " + subject + " not found in " + data);
            req = build_request(*s, time);
        } else {
            req.baseline = {baseline_x, baseline_y};
            req.future_times = {time};
        }
        req.validate();
        if (!out.empty()) {
            const auto field = cell_field(req, parse_grid(grid), store);
            write_file(out, write_cell_field_csv(field));
            log("predict: grid mass " + text::format_double(field.grid_mass()) + ", outside " +
                text::format_double(field.outside_mass));
        }
        if (!evaluate.empty()) {
            const auto [x, y] = parse_point(evaluate);
            const double cx[] = {x};
            const double cy[] = {y};
            const double lp = req.has_history() ? case2_log_conditional(req, cx, cy, store) : case1_log_joint(req, cx, cy, store);
            std::cout << text::format_double(lp) << '\n';
        }
        if (out.empty() && evaluate.empty()) throw std::invalid_argument("predict: give --out and/or --evaluate");
        return 0;
    }
};

struct RegionCmd {
    std::string field;
    std::string out;
    RegionFlags region;
    std::string point;

    int run() const {
        const auto f = read_cell_field_csv(text::read_file(field));
        const auto alg = parse_algorithm(region.algorithm);
        const auto r = alg == RegionAlgorithm::branch ? branch_region(f, region.target, region.c().value_or(0.9 * region.target))
                                                      : hdr_region(f, region.target);
        if (!out.empty()) write_file(out, write_region_csv(r, f));
        log("region: " + std::to_string(r.cells.size()) + " cells, p_sum " + text::format_double(r.p_sum));
        if (!point.empty()) {
            const auto [x, y] = parse_point(point);
            std::cout << name(contains(r, x, y)) << '\n';
        }
        return 0;
    }
};

struct ScreenCmd {
    std::string draws;
    std::string data;
    std::string grid = kDefaultGrid;
    RegionFlags region;
    HorizonFlags horizon;
    std::string out;
    int threads = 1;

    int run() const {
        const auto store = read_draw_store_file(draws);
        const auto d = ingest_dataset_file(data);
        ScreenOptions opt;
        opt.grid = parse_grid(grid);
        opt.target = region.target;
        opt.algorithm = parse_algorithm(region.algorithm);
        opt.c_quick = region.c();
        opt.horizon = horizon.build();
        const auto report = evaluate_cohort(d, store, opt, threads);
        const fs::path dir(out);
        write_file(dir / "report.csv", write_report_csv(report.results, opt.target));
        write_file(dir / "metrics.json", metrics_to_json({report.summary}));
        std::size_t flagged = 0;
        for (const auto& r : report.results) {
            if (r.verdict != Verdict::outside && r.verdict != Verdict::off_grid) continue;
            ++flagged;
            const auto stem = safe_name(r.subject_id);
            write_file(dir / "heatmaps" / (stem + "_field.csv"), write_cell_field_csv(r.field));
            write_file(dir / "heatmaps" / (stem + "_region.csv"), write_region_csv(r.region, r.field));
        }
        std::ostringstream msg;
        msg << "screen: " << report.summary.n_subjects << " subjects screened, " << flagged << " flagged, coverage "
            << report.summary.coverage_proportion;
        log(msg.str());
        return 0;
    }
};

struct MetricsCmd {
    std::string report;
    std::string out;
    // replicate mode
    int replicates = 0;
    std::uint64_t seed = 1;
    int subjects = 0;
    int sites = 0;
    ModelFlags model;
    McmcFlags mcmc;
    std::string grid = kDefaultGrid;
    double target = 0.8;
    double c_quick = 0.0;
    int k = 2;
    int threads = 1;

    int run() const {
        std::string doc;
        if (replicates > 0) {
            ReplicateConfig cfg;
            if (subjects > 0) cfg.scheme.n_subjects = subjects;
            if (sites > 0) cfg.scheme.n_sites = sites;
            cfg.model = model.build();
            cfg.mcmc = mcmc.build();
            cfg.grid = parse_grid(grid);
            cfg.target = target;
            if (c_quick > 0.0) cfg.c_quick = c_quick;
            cfg.horizon = Horizon::first_k_visits(k);
            const auto results = run_replicates(cfg, replicates, seed, threads);
            nlohmann::ordered_json j;
            j["replicates"] = nlohmann::ordered_json::array();
            for (const auto& r : results) {
                nlohmann::ordered_json row;
                row["seed"] = r.seed;
                for (const auto* m : {&r.branch, &r.hdr}) {
                    row[name(m->algorithm)] = {{"n_subjects", m->n_subjects},
                                               {"coverage_proportion", m->coverage_proportion},
                                               {"bias", m->bias},
                                               {"rmse", m->rmse}};
                }
                j["replicates"].push_back(row);
            }
            std::cout << "algorithm,coverage_mean,coverage_sd,bias_mean,bias_sd,rmse_mean,rmse_sd\n";
            for (const auto& t : replicate_table(results)) {
                j["table"][name(t.algorithm)] = {{"coverage_mean", t.coverage_mean}, {"coverage_sd", t.coverage_sd},
                                                 {"bias_mean", t.bias_mean},         {"bias_sd", t.bias_sd},
                                                 {"rmse_mean", t.rmse_mean},         {"rmse_sd", t.rmse_sd}};
                std::cout << name(t.algorithm) << ',' << text::format_double(t.coverage_mean) << ','
                          << text::format_double(t.coverage_sd) << ',' << text::format_double(t.bias_mean) << ','
                          << text::format_double(t.bias_sd) << ',' << text::format_double(t.rmse_mean) << ','
                          << text::format_double(t.rmse_sd) << '\n';
            }
            doc = j.dump(2) + "\n";
        } else {
            if (report.empty()) throw std::invalid_argument("metrics: give --report or --replicates");
            const auto rows = read_report_csv(text::read_file(report));
            std::vector<MetricsSummary> out_summaries;
            for (RegionAlgorithm a : {RegionAlgorithm::branch, RegionAlgorithm::hdr}) {
                std::vector<ScreeningResult> part;
                double tgt = 0.0;
                for (std::size_t i = 0; i < rows.results.size(); ++i) {
                    if (rows.results[i].algorithm != a) continue;
                    if (!part.empty() && rows.targets[i] != tgt) throw DataError("metrics: mixed targets in report");
                    tgt = rows.targets[i];
                    part.push_back(rows.results[i]);
                }
                if (!part.empty()) out_summaries.push_back(summarize(part, a, tgt));
            }
            if (out_summaries.empty()) throw DataError("metrics: report has no rows");
            doc = metrics_to_json(out_summaries);
            if (out.empty()) std::cout << doc;
        }
        if (!out.empty()) write_file(out, doc);
        return 0;
    }
};

struct BestConfigCmd {
    std::string draws;
    std::string out;
    std::string summary;

    int run() const {
        const auto store = read_draw_store_file(draws);
        const auto best = dahl_best_configuration(store);
        std::string csv = "subject_id,class\n";
        for (std::size_t i = 0; i < best.z.size(); ++i) {
            csv += text::csv_field(store.subject_ids[i]) + ',' + std::to_string(best.z[i]) + '\n';
        }
        const std::string line = class_size_summary(best.z);
        if (!out.empty()) write_file(out, csv);
        if (!summary.empty()) write_file(summary, line + '\n');
        std::cout << line << '\n';
        log("best-config: draw " + std::to_string(best.draw) + ", loss " + text::format_double(best.loss));
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Longitudinal latent-class screening: simulate, fit, predict, build credible regions, screen"};
    app.set_config("--config", "", "TOML file with flag values (command-line flags take precedence)");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    SimulateCmd sim;
    auto* s = app.add_subcommand("simulate", "Simulate a study and write train.csv, test.csv, truth.csv");
    s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    s->add_option("--subjects", sim.subjects, "Number of subjects (default 700)");
    s->add_option("--sites", sim.sites, "Number of sites (default 50)");
    s->add_option("--train-fraction", sim.train_fraction, "Training share")->capture_default_str();
    s->add_option("--out", sim.out, "Output directory")->required();

    FitCmd fitc;
    auto* f = app.add_subcommand("fit", "Run the sampler and write a .draws.ndjson store");
    f->add_option("--data", fitc.data, "Training dataset CSV")->required();
    f->add_option("--out", fitc.out, "Draw store path")->required();
    fitc.model.add(f);
    fitc.mcmc.add(f, true);
    f->add_flag("--progress", fitc.progress, "Report sweep progress on stderr");
    f->add_option("--threads", fitc.threads, "Worker threads for the assignment step")->capture_default_str();

    PredictCmd pred;
    auto* p = app.add_subcommand("predict", "Posterior predictive cell field for one subject and visit");
    p->add_option("--draws", pred.draws, "Draw store")->required();
    p->add_option("--data", pred.data, "Dataset holding --subject");
    p->add_option("--subject", pred.subject, "Subject id (history = observations before --time)");
    p->add_option("--baseline-x", pred.baseline_x, "Baseline x for a new subject")->capture_default_str();
    p->add_option("--baseline-y", pred.baseline_y, "Baseline y for a new subject")->capture_default_str();
    p->add_option("--time", pred.time, "Future visit time")->required();
    p->add_option("--grid", pred.grid, "Grid 'lo:hi:width,lo:hi:width'")->capture_default_str();
    p->add_option("--out", pred.out, "Cell field CSV");
    p->add_option("--evaluate", pred.evaluate, "Print the log predictive density at 'x,y'");

    RegionCmd reg;
    auto* r = app.add_subcommand("region", "Build a credible region from a cell field CSV");
    r->add_option("--field", reg.field, "Cell field CSV")->required();
    r->add_option("--out", reg.out, "Region CSV");
    reg.region.add(r);
    r->add_option("--point", reg.point, "Print the verdict for 'x,y'");

    ScreenCmd scr;
    auto* sc = app.add_subcommand("screen", "Screen every subject of a dataset");
    sc->add_option("--draws", scr.draws, "Draw store")->required();
    sc->add_option("--data", scr.data, "Dataset CSV")->required();
    sc->add_option("--grid", scr.grid, "Grid 'lo:hi:width,lo:hi:width'")->capture_default_str();
    scr.region.add(sc);
    scr.horizon.add(sc);
    sc->add_option("--out", scr.out, "Output directory")->required();
    sc->add_option("--threads", scr.threads, "Worker threads")->capture_default_str();

    MetricsCmd met;
    auto* m = app.add_subcommand("metrics", "Summarize a screening report, or run simulation replicates");
    m->add_option("--report", met.report, "Screening report CSV to summarize");
    m->add_option("--out", met.out, "Output JSON");
    m->add_option("--replicates", met.replicates, "Run this many simulate/fit/screen replicates");
    m->add_option("--seed", met.seed, "Base seed for replicates")->capture_default_str();
    m->add_option("--subjects", met.subjects, "Subjects per replicate (default 700)");
    m->add_option("--sites", met.sites, "Sites per replicate (default 50)");
    met.model.add(m);
    met.mcmc.add(m, false);
    m->add_option("--grid", met.grid, "Grid 'lo:hi:width,lo:hi:width'")->capture_default_str();
    m->add_option("--target", met.target, "Target credible level")->capture_default_str();
    m->add_option("--c-quick", met.c_quick, "Quick-phase level for branch (0 = 0.9 * target)")->capture_default_str();
    m->add_option("--k", met.k, "Screen visit k+1 given the first k visits")->capture_default_str();
    m->add_option("--threads", met.threads, "Worker threads")->capture_default_str();

    BestConfigCmd best;
    auto* b = app.add_subcommand("best-config", "Least-squares clustering summary of a draw store");
    b->add_option("--draws", best.draws, "Draw store")->required();
    b->add_option("--out", best.out, "subject_id,class CSV");
    b->add_option("--summary", best.summary, "Class size line 'class(count), ...'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*s) return sim.run();
        if (*f) return fitc.run();
        if (*p) return pred.run();
        if (*r) return reg.run();
        if (*sc) return scr.run();
        if (*m) return met.run();
        if (*b) return best.run();
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
