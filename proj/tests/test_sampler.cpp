#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lcscreen/errors.hpp"
#include "lcscreen/predictive.hpp"
#include "lcscreen/sampler.hpp"
#include "lcscreen/simgen.hpp"
#include "oracles.hpp"

using namespace lcscreen;

namespace {

constexpr int kReps = 4000;

Dataset small_study(int subjects, int sites, std::uint64_t seed) {
    auto s = default_sim_scheme();
    s.n_subjects = subjects;
    s.n_sites = sites;
    return simulate_study(s, seed).data;
}

ModelConfig small_config(int classes) {
    ModelConfig m;
    m.classes = classes;
    return m;
}

// Chain state after a short warm-up, used as the frozen conditioning state.
ParameterDraw warm_state(const Dataset& d, const ModelConfig& m, int sweeps = 30) {
    GibbsSampler g(d, m, 77);
    g.initialize();
    for (int k = 0; k < sweeps; ++k) g.sweep(k > 0);
    return g.state();
}

// Sample mean and variance agree with the analytic moments within 3 standard
// errors each.
void check_moments(const std::vector<double>& xs, double mean, double var, const std::string& what) {
    INFO(what);
    const double se_mean = std::sqrt(var / static_cast<double>(xs.size()));
    CHECK(std::abs(oracle::mean(xs) - mean) < 3.0 * se_mean);
    CHECK(std::abs(oracle::variance(xs) - var) < 3.0 * oracle::variance_se(xs));
}

template <class Update, class Read>
std::vector<double> repeat_update(GibbsSampler& g, const ParameterDraw& frozen, Update update, Read read) {
    std::vector<double> out;
    out.reserve(kReps);
    for (int r = 0; r < kReps; ++r) {
        g.set_state(frozen);
        update(g);
        out.push_back(read(g.state()));
    }
    return out;
}

double mean_curve(const ParameterDraw& s, int c, Endpoint e, double baseline, double t) {
    const auto& p = s.at(c, e);
    return p.beta0 + s.com(e).beta0_base * baseline + p.beta1 * t + p.beta2 * t * t;
}

}  // namespace

TEST_CASE("prior partition probabilities") {
    auto p = conditional_class_prob(std::vector<int>{1, 0}, 2.0, 2, 2);
    CHECK(p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    p = conditional_class_prob(std::vector<int>{10, 0, 0}, 1.5, 3, 11);
    CHECK(p[0] == doctest::Approx(10.5 / 11.5).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.5 / 11.5).epsilon(1e-15));
    CHECK(p[2] == doctest::Approx(0.5 / 11.5).epsilon(1e-15));

    for (double a : {1.0, 1.7, 2.9}) {
        p = conditional_class_prob(std::vector<int>{4, 4, 4, 4}, a, 4, 17);
        for (double x : p) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));
        double s = 0.0;
        for (double x : p) s += x;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("mixture weights follow their Dirichlet conditional") {
    const auto d = small_study(40, 4, 1);
    const auto m = small_config(3);
    const auto frozen = warm_state(d, m);
    GibbsSampler g(d, m, 3);
    g.initialize();
    std::vector<double> a(3, frozen.alpha / 3);
    for (int z : frozen.z) a[static_cast<std::size_t>(z - 1)] += 1.0;
    const double a0 = a[0] + a[1] + a[2];
    for (int c = 0; c < 3; ++c) {
        const auto xs = repeat_update(g, frozen, [](GibbsSampler& s) { s.update_weights(); },
                                      [c](const ParameterDraw& s) { return s.pi[static_cast<std::size_t>(c)]; });
        const double ac = a[static_cast<std::size_t>(c)];
        check_moments(xs, ac / a0, ac * (a0 - ac) / (a0 * a0 * (a0 + 1)), "pi_" + std::to_string(c));
    }
}

TEST_CASE("site profiles follow their Dirichlet conditional") {
    const auto d = small_study(40, 4, 2);
    const auto m = small_config(3);
    const auto frozen = warm_state(d, m);
    GibbsSampler g(d, m, 4);
    g.initialize();
    const int c = frozen.z[0] - 1;
    std::vector<double> a(4, 1.0);
    for (std::size_t i = 0; i < d.subjects.size(); ++i) {
        if (frozen.z[i] - 1 == c) a[static_cast<std::size_t>(d.subjects[i].site - 1)] += 1.0;
    }
    const double a0 = a[0] + a[1] + a[2] + a[3];
    for (int site = 0; site < 4; ++site) {
        const auto xs = repeat_update(g, frozen, [](GibbsSampler& s) { s.update_site_profiles(); },
                                      [&](const ParameterDraw& s) { return s.site_profile(site, c); });
        const double am = a[static_cast<std::size_t>(site)];
        check_moments(xs, am / a0, am * (a0 - am) / (a0 * a0 * (a0 + 1)), "p site " + std::to_string(site));
    }
}

TEST_CASE("class coefficients follow their normal conditional") {
    const auto d = small_study(40, 4, 3);
    const auto m = small_config(3);
    const auto frozen = warm_state(d, m);
    GibbsSampler g(d, m, 5);
    g.initialize();
    for (Endpoint e : kEndpoints) {
        const int c = frozen.z[1] - 1;
        const auto& com = frozen.com(e);
        Eigen::Matrix3d prec = Eigen::Matrix3d::Zero();
        Eigen::Vector3d lin = Eigen::Vector3d::Zero();
        for (std::size_t i = 0; i < d.subjects.size(); ++i) {
            if (frozen.z[i] - 1 != c) continue;
            const auto& s = d.subjects[i];
            const double off = com.beta0_base * s.base(e) + frozen.site_effect(s.site - 1, c, e) +
                               frozen.subject_effect(i, e);
            for (const auto& o : s.obs(e)) {
                const Eigen::Vector3d x(1.0, o.time, o.time * o.time);
                prec += com.tau_e * x * x.transpose();
                lin += com.tau_e * x * (o.value - off);
            }
        }
        prec.diagonal() += Eigen::Vector3d(com.tau0, com.tau1, com.tau2);
        const Eigen::Matrix3d cov = prec.inverse();
        const Eigen::Vector3d mu = cov * lin;
        std::array<std::vector<double>, 3> draws;
        for (int r = 0; r < kReps; ++r) {
            g.set_state(frozen);
            g.update_coefficients();
            const auto& p = g.state().at(c, e);
            draws[0].push_back(p.beta0);
            draws[1].push_back(p.beta1);
            draws[2].push_back(p.beta2);
        }
        for (int k = 0; k < 3; ++k) {
            check_moments(draws[static_cast<std::size_t>(k)], mu(k), cov(k, k),
                          std::string("beta") + std::to_string(k) + " " + name(e));
        }
        // cross moment of the joint block
        std::vector<double> prod;
        const double m0 = oracle::mean(draws[0]);
        const double m1 = oracle::mean(draws[1]);
        for (int r = 0; r < kReps; ++r) prod.push_back((draws[0][static_cast<std::size_t>(r)] - m0) * (draws[1][static_cast<std::size_t>(r)] - m1));
        const double se = std::sqrt(oracle::variance(prod) / kReps);
        CHECK(std::abs(oracle::mean(prod) - cov(0, 1)) < 3.0 * se);
    }
}

TEST_CASE("baseline coefficient follows its normal conditional") {
    const auto d = small_study(40, 4, 4);
    const auto m = small_config(3);
    const auto frozen = warm_state(d, m);
    GibbsSampler g(d, m, 6);
    g.initialize();
    for (Endpoint e : kEndpoints) {
        const auto& com = frozen.com(e);
        double prec = com.tau0_base;
        double lin = com.tau0_base * m.prior(e).mu0_base;
        for (std::size_t i = 0; i < d.subjects.size(); ++i) {
            const auto& s = d.subjects[i];
            const int c = frozen.z[i] - 1;
            const auto& p = frozen.at(c, e);
            for (const auto& o : s.obs(e)) {
                const double r = o.value - (p.beta0 + p.beta1 * o.time + p.beta2 * o.time * o.time) -
                                 frozen.site_effect(s.site - 1, c, e) - frozen.subject_effect(i, e);
                prec += com.tau_e * s.base(e) * s.base(e);
                lin += com.tau_e * s.base(e) * r;
            }
        }
        const auto xs = repeat_update(g, frozen, [](GibbsSampler& s) { s.update_baseline_coefficients(); },
                                      [e](const ParameterDraw& s) { return s.com(e).beta0_base; });
        check_moments(xs, lin / prec, 1.0 / prec, std::string("beta0_base ") + name(e));
    }
}

TEST_CASE("site and subject effects follow their normal conditionals") {
    const auto d = small_study(40, 4, 5);
    const auto m = small_config(3);
    const auto frozen = warm_state(d, m);
    GibbsSampler g(d, m, 7);
    g.initialize();
    const Endpoint e = Endpoint::y;
    const int site = d.subjects[0].site - 1;
    const int c = frozen.z[0] - 1;
    double n = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < d.subjects.size(); ++i) {
        const auto& s = d.subjects[i];
        if (s.site - 1 != site || frozen.z[i] - 1 != c) continue;
        for (const auto& o : s.obs(e)) {
            sum += o.value - mean_curve(frozen, c, e, s.base(e), o.time) - frozen.subject_effect(i, e);
            n += 1.0;
        }
    }
    const double tau_e = frozen.com(e).tau_e;
    double prec = frozen.at(c, e).tau_s + tau_e * n;
    auto xs = repeat_update(g, frozen, [](GibbsSampler& s) { s.update_site_effects(); },
                            [&](const ParameterDraw& s) { return s.site_effect(site, c, e); });
    check_moments(xs, tau_e * sum / prec, 1.0 / prec, "site effect");

    // a (site, class) cell with no subjects falls back to its prior
    int empty_class = -1;
    for (int k = 0; k < 3 && empty_class < 0; ++k) {
        bool used = false;
        for (std::size_t i = 0; i < d.subjects.size(); ++i) used = used || (d.subjects[i].site - 1 == 3 && frozen.z[i] - 1 == k);
        if (!used) empty_class = k;
    }
    if (empty_class >= 0) {
        xs = repeat_update(g, frozen, [](GibbsSampler& s) { s.update_site_effects(); },
                           [&](const ParameterDraw& s) { return s.site_effect(3, empty_class, e); });
        check_moments(xs, 0.0, 1.0 / frozen.at(empty_class, e).tau_s, "empty site cell");
    }

    const std::size_t i = 2;
    const auto& s = d.subjects[i];
    const int ci = frozen.z[i] - 1;
    double r = 0.0;
    for (const auto& o : s.obs(e)) {
        r += o.value - mean_curve(frozen, ci, e, s.base(e), o.time) - frozen.site_effect(s.site - 1, ci, e);
    }
    prec = frozen.com(e).tau_w + tau_e * static_cast<double>(s.obs(e).size());
    xs = repeat_update(g, frozen, [](GibbsSampler& gs) { gs.update_subject_effects(); },
                       [&](const ParameterDraw& st) { return st.subject_effect(i, e); });
    check_moments(xs, tau_e * r / prec, 1.0 / prec, "subject effect");
}

TEST_CASE("precisions follow their gamma conditionals") {
    const auto d = small_study(40, 4, 6);
    const auto m = small_config(3);
    const auto frozen = warm_state(d, m);
    GibbsSampler g(d, m, 8);
    g.initialize();
    for (Endpoint e : kEndpoints) {
        const auto& pr = m.prior(e);
        double ssr = 0.0;
        double n = 0.0;
        double ssw = 0.0;
        for (std::size_t i = 0; i < d.subjects.size(); ++i) {
            const auto& s = d.subjects[i];
            const int c = frozen.z[i] - 1;
            for (const auto& o : s.obs(e)) {
                const double res = o.value - mean_curve(frozen, c, e, s.base(e), o.time) -
                                   frozen.site_effect(s.site - 1, c, e) - frozen.subject_effect(i, e);
                ssr += res * res;
                n += 1.0;
            }
            ssw += frozen.subject_effect(i, e) * frozen.subject_effect(i, e);
        }
        double shape = pr.gamma_e + n / 2;
        double rate = pr.gamma_e + ssr / 2;
        auto xs = repeat_update(g, frozen, [](GibbsSampler& s) { s.update_precisions(); },
                                [e](const ParameterDraw& s) { return s.com(e).tau_e; });
        check_moments(xs, shape / rate, shape / (rate * rate), std::string("tau_e ") + name(e));

        shape = pr.gamma_w + static_cast<double>(d.subjects.size()) / 2;
        rate = pr.gamma_w + ssw / 2;
        xs = repeat_update(g, frozen, [](GibbsSampler& s) { s.update_precisions(); },
                           [e](const ParameterDraw& s) { return s.com(e).tau_w; });
        check_moments(xs, shape / rate, shape / (rate * rate), std::string("tau_w ") + name(e));

        double ssv = 0.0;
        for (int site = 0; site < 4; ++site) ssv += frozen.site_effect(site, 1, e) * frozen.site_effect(site, 1, e);
        shape = pr.gamma_sc + 2.0;
        rate = pr.gamma_sc + ssv / 2;
        xs = repeat_update(g, frozen, [](GibbsSampler& s) { s.update_precisions(); },
                           [e](const ParameterDraw& s) { return s.at(1, e).tau_s; });
        check_moments(xs, shape / rate, shape / (rate * rate), std::string("tau_s ") + name(e));
    }
}

TEST_CASE("hyper-precisions follow their gamma conditionals") {
    const auto d = small_study(40, 4, 7);
    const auto m = small_config(3);
    const auto frozen = warm_state(d, m);
    GibbsSampler g(d, m, 9);
    g.initialize();
    const Endpoint e = Endpoint::x;
    const auto& pr = m.prior(e);
    double s1 = 0.0;
    for (int c = 0; c < 3; ++c) s1 += frozen.at(c, e).beta1 * frozen.at(c, e).beta1;
    const double shape = pr.gamma1 + 1.5;
    const double rate = pr.gamma1 + s1 / 2;
    auto xs = repeat_update(g, frozen, [](GibbsSampler& s) { s.update_hyper_precisions(); },
                            [e](const ParameterDraw& s) { return s.com(e).tau1; });
    check_moments(xs, shape / rate, shape / (rate * rate), "tau1");

    const double dev = frozen.com(e).beta0_base - pr.mu0_base;
    const double shape_b = pr.gamma0_base + 0.5;
    const double rate_b = pr.gamma0_base + dev * dev / 2;
    xs = repeat_update(g, frozen, [](GibbsSampler& s) { s.update_hyper_precisions(); },
                       [e](const ParameterDraw& s) { return s.com(e).tau0_base; });
    check_moments(xs, shape_b / rate_b, shape_b / (rate_b * rate_b), "tau0_base");

    auto fixed = m;
    fixed.fixed_hyper_precision = 0.5;
    GibbsSampler h(d, fixed, 10);
    h.initialize();
    auto st = frozen;
    st.com(e).tau0 = 0.5;
    h.set_state(st);
    h.update_hyper_precisions();
    CHECK(h.state().com(e).tau0 == 0.5);
}

TEST_CASE("assignment update samples the integrated class posterior") {
    const auto d = small_study(40, 4, 8);
    const auto m = small_config(3);
    auto frozen = warm_state(d, m);
    // spread the weights so that every class has visible probability
    frozen.pi = {0.3, 0.3, 0.4};
    GibbsSampler g(d, m, 11);
    g.initialize();
    g.set_state(frozen);

    for (std::size_t i : {std::size_t{0}, std::size_t{5}}) {
        const auto& s = d.subjects[i];
        std::vector<double> lw;
        for (int c = 0; c < 3; ++c) {
            double l = std::log(frozen.pi[static_cast<std::size_t>(c)]) + std::log(frozen.site_profile(s.site - 1, c));
            for (Endpoint e : kEndpoints) {
                const auto& obs = s.obs(e);
                const int n = static_cast<int>(obs.size());
                Eigen::VectorXd x(n);
                Eigen::VectorXd mu(n);
                for (int j = 0; j < n; ++j) {
                    x(j) = obs[static_cast<std::size_t>(j)].value;
                    mu(j) = mean_curve(frozen, c, e, s.base(e), obs[static_cast<std::size_t>(j)].time) +
                            frozen.site_effect(s.site - 1, c, e);
                }
                l += oracle::mvn_logdensity(
                    x, mu, oracle::cs_matrix(n, 1.0 / frozen.com(e).tau_w, 1.0 / frozen.com(e).tau_e));
            }
            lw.push_back(l);
            CHECK(g.subject_class_loglik(i, c) + std::log(frozen.pi[static_cast<std::size_t>(c)]) +
                      std::log(frozen.site_profile(s.site - 1, c)) ==
                  doctest::Approx(l).epsilon(1e-10));
        }
        const double lse = oracle::log_sum_exp(lw);
        std::vector<int> hits(3, 0);
        for (int r = 0; r < kReps; ++r) {
            g.set_state(frozen);
            g.update_assignments();
            ++hits[static_cast<std::size_t>(g.state().z[i] - 1)];
        }
        for (int c = 0; c < 3; ++c) {
            const double p = std::exp(lw[static_cast<std::size_t>(c)] - lse);
            const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / kReps);
            const double phat = hits[static_cast<std::size_t>(c)] / static_cast<double>(kReps);
            CHECK(std::abs(phat - p) <= 3.0 * se + 1e-12);
        }
    }
}

TEST_CASE("alpha update leaves its target invariant") {
    const auto d = small_study(40, 4, 9);
    const auto m = small_config(5);
    auto frozen = warm_state(d, m);
    frozen.pi = {0.5, 0.2, 0.15, 0.1, 0.05};
    GibbsSampler g(d, m, 12);
    g.initialize();
    g.set_state(frozen);
    std::vector<double> chain;
    for (int r = 0; r < 40000; ++r) {
        g.update_alpha();
        chain.push_back(g.state().alpha);
    }
    // target density over [1, 3] by fine quadrature
    double z = 0.0;
    double m1 = 0.0;
    const int steps = 20000;
    double slog = 0.0;
    for (double p : frozen.pi) slog += std::log(p);
    for (int k = 0; k < steps; ++k) {
        const double a = 1.0 + (k + 0.5) * 2.0 / steps;
        const double f = std::exp(std::lgamma(a) - 5 * std::lgamma(a / 5) + (a / 5 - 1) * slog);
        z += f;
        m1 += a * f;
    }
    const double target_mean = m1 / z;
    CHECK(std::abs(oracle::mean(chain) - target_mean) < 3.0 * oracle::batch_means_se(chain));
    CHECK(g.alpha_acceptance_rate() > 0.2);
    for (double a : chain) {
        REQUIRE(a >= 1.0);
        REQUIRE(a <= 3.0);
    }
}

TEST_CASE("identical subjects concentrate on one class") {
    Dataset d;
    d.sites = 1;
    for (int i = 0; i < 30; ++i) {
        SubjectRecord s;
        s.subject_id = "S" + std::to_string(100 + i);
        s.baseline = {10.0, 16.0};
        for (double t : {2.0, 4.0, 6.0, 8.0}) {
            s.obs(Endpoint::x).push_back({t, -0.5 * t + 0.1});
            s.obs(Endpoint::y).push_back({t, -0.8 * t + 0.3});
        }
        d.subjects.push_back(s);
    }
    McmcConfig run;
    run.burn_in = 500;
    run.keep = 300;
    run.seed = 21;
    const auto store = fit(d, small_config(2), run);
    int concentrated = 0;
    for (const auto& draw : store.draws) {
        const auto ones = std::count(draw.z.begin(), draw.z.end(), 1);
        const auto dominant = std::max<long>(ones, static_cast<long>(draw.z.size()) - ones);
        if (dominant >= 0.95 * static_cast<double>(draw.z.size())) ++concentrated;
    }
    CHECK(concentrated >= 0.9 * static_cast<double>(store.size()));
}

TEST_CASE("fit is deterministic and its store round-trips") {
    const auto d = small_study(25, 3, 10);
    McmcConfig run;
    run.burn_in = 50;
    run.keep = 20;
    run.thin = 2;
    run.seed = 5;
    const auto a = fit(d, small_config(4), run);
    run.threads = 3;
    const auto b = fit(d, small_config(4), run);
    run.threads = 1;
    CHECK(a == b);
    CHECK(a.size() == 20);
    CHECK(a.subject_ids.size() == 25);
    CHECK(a.dataset_digest == dataset_digest(d));
    const std::string text = write_draw_store(a);
    CHECK(text == write_draw_store(b));
    std::istringstream in(text);
    const auto back = read_draw_store(in);
    CHECK(back == a);
    CHECK(write_draw_store(back) == text);

    run.seed = 6;
    CHECK(!(fit(d, small_config(4), run) == a));

    for (const auto& draw : a.draws) CHECK_NOTHROW(draw.check(a.config));
}

TEST_CASE("damaged draw stores are rejected") {
    const auto d = small_study(10, 2, 11);
    McmcConfig run;
    run.burn_in = 10;
    run.keep = 3;
    const auto store = fit(d, small_config(2), run);
    std::string text = write_draw_store(store);

    std::istringstream truncated(text.substr(0, text.size() - 40));
    CHECK_THROWS_AS(read_draw_store(truncated), DataError);

    const auto last = text.rfind('\n', text.size() - 2);
    std::istringstream missing(text.substr(0, last + 1));
    CHECK_THROWS_AS(read_draw_store(missing), DataError);

    std::string bad = text;
    const auto pos = bad.find("\"alpha\":", bad.find("\"record\":\"draw\""));
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 8, "\"alpha\":9");
    std::istringstream corrupt(bad);
    CHECK_THROWS_AS(read_draw_store(corrupt), DataError);

    std::istringstream empty("");
    CHECK_THROWS_AS(read_draw_store(empty), DataError);
}

TEST_CASE("fit input errors") {
    McmcConfig run;
    run.burn_in = 1;
    run.keep = 1;
    CHECK_THROWS_AS(fit(Dataset{}, small_config(2), run), DataError);

    auto d = small_study(5, 2, 12);
    d.subjects[1].obs(Endpoint::x).clear();
    d.subjects[1].obs(Endpoint::y).clear();
    CHECK_THROWS_AS(fit(d, small_config(2), run), DataError);

    run.keep = 0;
    CHECK_THROWS_AS(fit(small_study(5, 2, 12), small_config(2), run), std::invalid_argument);
}

TEST_CASE("subjects with one endpoint still fit") {
    auto d = small_study(12, 2, 13);
    d.subjects[0].obs(Endpoint::y).clear();
    d.subjects[3].obs(Endpoint::x).clear();
    McmcConfig run;
    run.burn_in = 30;
    run.keep = 10;
    const auto store = fit(d, small_config(3), run);
    CHECK(store.size() == 10);
}

TEST_CASE("non-finite likelihood is reported with the iteration") {
    const auto d = small_study(10, 2, 14);
    const auto m = small_config(2);
    GibbsSampler g(d, m, 1);
    g.initialize();
    auto st = g.state();
    st.at(0, Endpoint::x).beta1 = std::nan("");
    st.at(1, Endpoint::x).beta1 = std::nan("");
    g.set_state(st);
    CHECK_THROWS_WITH_AS(g.update_assignments(), doctest::Contains("iteration 0"), NumericError);
}

TEST_CASE("initial label permutation does not change predictive quality") {
    auto scheme = default_sim_scheme();
    scheme.n_subjects = 250;
    scheme.n_sites = 10;
    const auto study = simulate_study(scheme, 31);
    const auto split = split_train_test(study.data, study.truth, 0.6, 32);
    McmcConfig run;
    run.burn_in = 1500;
    run.keep = 200;
    run.seed = 41;
    const auto a = fit(split.train, small_config(6), run);
    run.seed = 42;
    run.permute_initial_labels = true;
    const auto b = fit(split.train, small_config(6), run);

    std::vector<double> la;
    std::vector<double> lb;
    for (const auto& s : split.test.subjects) {
        PredictionRequest req;
        req.baseline = s.baseline;
        const auto& xs = s.obs(Endpoint::x);
        const auto& ys = s.obs(Endpoint::y);
        for (std::size_t j = 0; j < 2; ++j) {
            req.hist(Endpoint::x).push_back(xs[j]);
            req.hist(Endpoint::y).push_back(ys[j]);
        }
        req.future_times = {xs[2].time};
        const std::vector<double> cx{xs[2].value};
        const std::vector<double> cy{ys[2].value};
        la.push_back(case2_log_conditional(req, cx, cy, a));
        lb.push_back(case2_log_conditional(req, cx, cy, b));
    }
    std::sort(la.begin(), la.end());
    std::sort(lb.begin(), lb.end());
    // two-sample Kolmogorov-Smirnov distance
    double ks = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < la.size() && j < lb.size()) {
        const double v = std::min(la[i], lb[j]);
        while (i < la.size() && la[i] <= v) ++i;
        while (j < lb.size() && lb[j] <= v) ++j;
        ks = std::max(ks, std::abs(static_cast<double>(i) / la.size() - static_cast<double>(j) / lb.size()));
    }
    CHECK(ks < 0.1);
}
