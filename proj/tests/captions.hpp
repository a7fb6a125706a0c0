// Synthetic stand-ins for the illustrated subjects: a one-class store and
// a subject history whose true value at the screened visit is known.
#pragma once

#include <string>
#include <vector>

#include "lcscreen/predictive.hpp"
#include "lcscreen/region.hpp"
#include "lcscreen/sampler.hpp"

namespace caption {

struct Curve {
    double beta0;
    double beta0_base;
    double beta1;
    double beta2;
    double subject_var;
    double resid_var;
};

// One-class store with subject effects only, so the predictive law is a
// plain compound-symmetry normal per endpoint.
inline lcscreen::DrawStore curve_store(const Curve& x, const Curve& y) {
    using namespace lcscreen;
    DrawStore s;
    s.config.classes = 1;
    s.config.site_effects = false;
    s.sites = 1;
    ParameterDraw d;
    d.classes = 1;
    d.sites = 1;
    d.cls.resize(1);
    const Curve* curves[2] = {&x, &y};
    for (Endpoint e : kEndpoints) {
        const Curve& c = *curves[idx(e)];
        d.at(0, e).beta0 = c.beta0;
        d.at(0, e).beta1 = c.beta1;
        d.at(0, e).beta2 = c.beta2;
        d.com(e).beta0_base = c.beta0_base;
        d.com(e).tau_w = 1.0 / c.subject_var;
        d.com(e).tau_e = 1.0 / c.resid_var;
    }
    d.pi = {1.0};
    d.p = {1.0};
    d.v = {0.0, 0.0};
    s.draws.push_back(d);
    return s;
}

inline lcscreen::SubjectRecord subject(const std::string& id, double bx, double by, const std::vector<double>& times,
                                       const std::vector<double>& xs, const std::vector<double>& ys) {
    lcscreen::SubjectRecord s;
    s.subject_id = id;
    s.baseline = {bx, by};
    for (std::size_t j = 0; j < times.size(); ++j) {
        s.obs(lcscreen::Endpoint::x).push_back({times[j], xs[j]});
        s.obs(lcscreen::Endpoint::y).push_back({times[j], ys[j]});
    }
    return s;
}

struct Scenario {
    std::string name;
    lcscreen::DrawStore store;
    lcscreen::SubjectRecord subject;  // last visit is the screened one
    int k;                            // conditioning visits
    lcscreen::GridSpec grid;
    lcscreen::Verdict expected;
};

inline std::vector<Scenario> scenarios() {
    using lcscreen::Verdict;
    std::vector<Scenario> out;
    // EASI/IGA, baseline (21, 3), nothing before week 2, week-2 value (-10, 0)
    out.push_back({"scenario 1 EASI/IGA #1",
                   curve_store({0.0, -0.4, -0.5, 0.0, 16.0, 4.0}, {0.0, -0.2, -0.1, 0.0, 0.25, 0.25}),
                   subject("E1", 21, 3, {2}, {-10}, {0}), 0, lcscreen::parse_grid("-40:10:2,-5:2:1"),
                   Verdict::inside});
    // EASI/IGA, baseline (17.6, 4), weeks 2-8 observed, week-12 value (-14, -1)
    out.push_back({"scenario 2 EASI/IGA #1",
                   curve_store({0.0, -0.5, -0.8, 0.0, 16.0, 4.0}, {0.0, -0.25, -0.15, 0.0, 0.5, 0.2}),
                   subject("E2", 17.6, 4, {2, 4, 8, 12}, {-12, -16, -22, -14}, {-2, -3, -3, -1}), 3,
                   lcscreen::parse_grid("-70:10:2,-70:6:1"), Verdict::outside});
    // EASI/SCORAD, baseline (45.3, 73), weeks 2-8 observed, week-12 value (-39.6, -42.9)
    out.push_back({"scenario 2 EASI/SCORAD #3",
                   curve_store({0.0, -0.4, -1.0, 0.0, 25.0, 9.0}, {0.0, -0.3, -1.5, 0.0, 36.0, 16.0}),
                   subject("E3", 45.3, 73, {2, 4, 8, 12}, {-14, -18, -22, -39.6}, {-20, -25, -30, -42.9}), 3,
                   lcscreen::parse_grid("-70:10:2,-70:6:1"), Verdict::outside});
    return out;
}

}  // namespace caption
