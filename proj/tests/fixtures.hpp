// Synthetic draw stores and fields shared by the tests.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "lcscreen/predictive.hpp"
#include "lcscreen/sampler.hpp"

namespace fixture {

// A draw with C classes over M sites whose parameters are loosely in the
// range of the simulation study.
inline lcscreen::ParameterDraw random_draw(int classes, int sites, std::mt19937_64& gen) {
    using namespace lcscreen;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd;
    ParameterDraw d;
    d.classes = classes;
    d.sites = sites;
    d.cls.resize(static_cast<std::size_t>(classes));
    double total = 0.0;
    for (int c = 0; c < classes; ++c) {
        for (Endpoint e : kEndpoints) {
            auto& p = d.at(c, e);
            p.beta0 = 2.0 * nd(gen);
            p.beta1 = -0.5 + 0.3 * nd(gen);
            p.beta2 = 0.02 * nd(gen);
            p.tau_s = 0.5 + 1.5 * u(gen);
        }
        d.pi.push_back(0.2 + u(gen));
        total += d.pi.back();
    }
    for (double& x : d.pi) x /= total;
    for (Endpoint e : kEndpoints) {
        auto& com = d.com(e);
        com.beta0_base = -0.5 + 0.2 * nd(gen);
        com.tau_w = 0.7 + u(gen);
        com.tau_e = 0.7 + u(gen);
    }
    d.p.assign(static_cast<std::size_t>(sites * classes), 1.0 / sites);
    d.v.assign(static_cast<std::size_t>(sites * classes * 2), 0.0);
    d.alpha = 2.0;
    return d;
}

inline lcscreen::DrawStore random_store(int classes, int draws, std::uint64_t seed, int sites = 2) {
    std::mt19937_64 gen(seed);
    lcscreen::DrawStore s;
    s.config.classes = classes;
    s.sites = sites;
    for (int q = 0; q < draws; ++q) s.draws.push_back(random_draw(classes, sites, gen));
    return s;
}

// One-class, one-draw store whose predictive law for a new subject is
// N(mean_x, var) x N(mean_y, var) at every time, effects switched off.
inline lcscreen::DrawStore point_store(double mean_x, double mean_y, double var = 1.0) {
    using namespace lcscreen;
    DrawStore s;
    s.config.classes = 1;
    s.config.site_effects = false;
    s.config.subject_effects = false;
    s.sites = 1;
    ParameterDraw d;
    d.classes = 1;
    d.sites = 1;
    d.cls.resize(1);
    d.at(0, Endpoint::x).beta0 = mean_x;
    d.at(0, Endpoint::y).beta0 = mean_y;
    for (Endpoint e : kEndpoints) d.com(e).tau_e = 1.0 / var;
    d.pi = {1.0};
    d.p = {1.0};
    d.v = {0.0, 0.0};
    s.draws.push_back(d);
    return s;
}

inline lcscreen::CellField field_from(const std::vector<double>& x_edges, const std::vector<double>& y_edges,
                                      std::vector<double> mass) {
    lcscreen::CellField f;
    f.grid.x_edges = x_edges;
    f.grid.y_edges = y_edges;
    f.mass = std::move(mass);
    double s = 0.0;
    for (double m : f.mass) s += m;
    f.outside_mass = std::max(0.0, 1.0 - s);
    return f;
}

inline std::vector<double> integer_edges(int n) {
    std::vector<double> e;
    for (int k = 0; k <= n; ++k) e.push_back(k);
    return e;
}

// Discretized isotropic-or-not Gaussian bump on an n x m integer grid.
inline lcscreen::CellField gaussian_field(int n, int m, double cx, double cy, double sx, double sy, double rho = 0.0) {
    std::vector<double> mass(static_cast<std::size_t>(n * m));
    double total = 0.0;
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < m; ++c) {
            const double dx = (r + 0.5 - cx) / sx;
            const double dy = (c + 0.5 - cy) / sy;
            const double q = (dx * dx - 2 * rho * dx * dy + dy * dy) / (1 - rho * rho);
            mass[static_cast<std::size_t>(r * m + c)] = std::exp(-0.5 * q);
            total += mass[static_cast<std::size_t>(r * m + c)];
        }
    }
    for (double& v : mass) v /= total;
    return field_from(integer_edges(n), integer_edges(m), mass);
}

}  // namespace fixture
