#include "lcscreen/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lcscreen/errors.hpp"
#include "lcscreen/likelihood.hpp"
#include "lcscreen/rng.hpp"
#include "lcscreen/text_io.hpp"

namespace lcscreen {

namespace {

void check_increasing(const std::vector<double>& v, const char* what) {
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (!(v[k] > v[k - 1])) throw std::invalid_argument(std::string(what) + " must be strictly increasing");
    }
}

void require_draws(const DrawStore& store) {
    if (store.draws.empty()) throw DataError("empty draw store");
}

// Shared and residual variance of one endpoint's compound-symmetry block,
// with the site effect marginalized.
std::pair<double, double> cs_variances(const ParameterDraw& d, const ModelConfig& config, int c, Endpoint e) {
    double shared = 0.0;
    if (config.site_effects) shared += 1.0 / d.at(c, e).tau_s;
    if (config.subject_effects) shared += 1.0 / d.com(e).tau_w;
    return {shared, 1.0 / d.com(e).tau_e};
}

double mean_at(const ParameterDraw& d, int c, Endpoint e, double baseline, double t) {
    const auto& p = d.at(c, e);
    return p.beta0 + d.com(e).beta0_base * baseline + p.beta1 * t + p.beta2 * t * t;
}

// Log CS-MVN density of `values` at `times` for class c.
double block_logdensity(const ParameterDraw& d, const ModelConfig& config, int c, Endpoint e, double baseline,
                        std::span<const double> times, std::span<const double> values) {
    if (times.empty()) return 0.0;
    const auto [shared, resid] = cs_variances(d, config, c, e);
    std::vector<double> mean(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) mean[j] = mean_at(d, c, e, baseline, times[j]);
    return cs_mvn_logdensity(values, mean, cs_params_from_variances(shared, resid, static_cast<int>(times.size())));
}

struct Split {
    std::vector<double> times;
    std::vector<double> values;
};

Split unpack(const Series& s) {
    Split out;
    for (const auto& o : s) {
        out.times.push_back(o.time);
        out.values.push_back(o.value);
    }
    return out;
}

double history_loglik(const PredictionRequest& req, const std::array<Split, 2>& hist, const ParameterDraw& d,
                      const ModelConfig& config, int c) {
    double total = 0.0;
    for (Endpoint e : kEndpoints) {
        total += block_logdensity(d, config, c, e, req.baseline[idx(e)], hist[idx(e)].times, hist[idx(e)].values);
    }
    return total;
}

std::vector<double> log_responsibilities(const PredictionRequest& req, const std::array<Split, 2>& hist,
                                         const ParameterDraw& d, const ModelConfig& config) {
    std::vector<double> lw(static_cast<std::size_t>(d.classes));
    for (int c = 0; c < d.classes; ++c) {
        lw[static_cast<std::size_t>(c)] = std::log(d.pi[static_cast<std::size_t>(c)]) + history_loglik(req, hist, d, config, c);
    }
    const double norm = log_sum_exp(lw);
    if (!std::isfinite(norm)) throw NumericError("history has zero likelihood under every class");
    for (double& v : lw) v -= norm;
    return lw;
}

NormalLaw conditional_law_impl(const PredictionRequest& req, const Split& hist, const ParameterDraw& d,
                               const ModelConfig& config, int c, Endpoint e) {
    const double baseline = req.baseline[idx(e)];
    const double tf = req.future_times.front();
    const auto [a, r] = cs_variances(d, config, c, e);
    const double n = static_cast<double>(hist.times.size());
    double s = 0.0;
    for (std::size_t j = 0; j < hist.times.size(); ++j) s += hist.values[j] - mean_at(d, c, e, baseline, hist.times[j]);
    const double denom = r + n * a;
    NormalLaw law;
    law.mean = mean_at(d, c, e, baseline, tf) + a * s / denom;
    law.sd = std::sqrt(a + r - n * a * a / denom);
    return law;
}

void check_candidates(const PredictionRequest& req, std::span<const double> cx, std::span<const double> cy) {
    if (cx.size() != req.future_times.size() || cy.size() != req.future_times.size()) {
        throw std::invalid_argument("candidate length must equal the number of future times");
    }
}

// Cell probabilities along one axis.
void axis_masses(const std::vector<double>& edges, const NormalLaw& law, std::vector<double>& out) {
    out.resize(edges.size() - 1);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) out[k] = normal_interval_prob(edges[k], edges[k + 1], law.mean, law.sd);
}

}  // namespace

void PredictionRequest::validate() const {
    if (future_times.empty()) throw std::invalid_argument("prediction: future_times must be nonempty");
    check_increasing(future_times, "future_times");
    for (Endpoint e : kEndpoints) {
        const auto& h = hist(e);
        for (std::size_t j = 0; j < h.size(); ++j) {
            if (j > 0 && !(h[j].time > h[j - 1].time)) throw std::invalid_argument("prediction: history times must increase");
        }
        if (!h.empty() && !(future_times.front() > h.back().time)) {
            throw std::invalid_argument("prediction: future times must follow the history");
        }
    }
}

void GridSpec::validate() const {
    if (x_edges.size() < 2 || y_edges.size() < 2) throw std::invalid_argument("grid: need at least 2 edges per axis");
    check_increasing(x_edges, "grid x edges");
    check_increasing(y_edges, "grid y edges");
}

std::vector<double> uniform_edges(double lo, double hi, double width) {
    if (!(width > 0.0) || !(hi > lo)) throw std::invalid_argument("grid: need lo < hi and width > 0");
    const double steps = (hi - lo) / width;
    const auto n = static_cast<long>(std::llround(steps));
    if (n < 1 || std::abs(steps - static_cast<double>(n)) > 1e-9) {
        throw std::invalid_argument("grid: (hi - lo) must be a multiple of width");
    }
    std::vector<double> edges(static_cast<std::size_t>(n + 1));
    for (long k = 0; k <= n; ++k) edges[static_cast<std::size_t>(k)] = lo + width * static_cast<double>(k);
    edges.back() = hi;
    return edges;
}

GridSpec parse_grid(const std::string& text) {
    const auto axes = text::split_csv(text);
    if (axes.size() != 2) throw std::invalid_argument("grid: expected 'lo:hi:width,lo:hi:width'");
    GridSpec g;
    for (std::size_t a = 0; a < 2; ++a) {
        std::vector<double> parts;
        std::string_view rest = axes[a];
        while (true) {
            const auto pos = rest.find(':');
            const auto v = text::parse_double(text::trim(rest.substr(0, pos)));
            if (!v) throw std::invalid_argument("grid: malformed number in '" + axes[a] + "'");
            parts.push_back(*v);
            if (pos == std::string_view::npos) break;
            rest = rest.substr(pos + 1);
        }
        if (parts.size() != 3) throw std::invalid_argument("grid: each axis needs lo:hi:width");
        (a == 0 ? g.x_edges : g.y_edges) = uniform_edges(parts[0], parts[1], parts[2]);
    }
    return g;
}

std::optional<std::size_t> locate_cell(std::span<const double> edges, double v) {
    if (edges.size() < 2 || !(v > edges.front()) || !(v <= edges.back())) return std::nullopt;
    // first edge >= v closes the containing cell on the right
    const auto it = std::lower_bound(edges.begin(), edges.end(), v);
    return static_cast<std::size_t>(it - edges.begin()) - 1;
}

double CellField::grid_mass() const {
    double s = 0.0;
    for (double m : mass) s += m;
    return s;
}

std::vector<double> responsibilities(const PredictionRequest& req, const ParameterDraw& draw,
                                     const ModelConfig& config) {
    const std::array<Split, 2> hist{unpack(req.hist(Endpoint::x)), unpack(req.hist(Endpoint::y))};
    auto lw = log_responsibilities(req, hist, draw, config);
    for (double& v : lw) v = std::exp(v);
    return lw;
}

NormalLaw conditional_law(const PredictionRequest& req, const ParameterDraw& draw, const ModelConfig& config, int c,
                          Endpoint e) {
    req.validate();
    return conditional_law_impl(req, unpack(req.hist(e)), draw, config, c, e);
}

double case1_log_joint(const PredictionRequest& req, std::span<const double> candidate_x,
                       std::span<const double> candidate_y, const DrawStore& store) {
    req.validate();
    if (req.has_history()) throw std::invalid_argument("case1_log_joint: history must be empty");
    check_candidates(req, candidate_x, candidate_y);
    require_draws(store);
    std::vector<double> terms;
    terms.reserve(store.draws.size() * static_cast<std::size_t>(store.config.classes));
    for (const auto& d : store.draws) {
        for (int c = 0; c < d.classes; ++c) {
            terms.push_back(std::log(d.pi[static_cast<std::size_t>(c)]) +
                            block_logdensity(d, store.config, c, Endpoint::x, req.baseline[0], req.future_times, candidate_x) +
                            block_logdensity(d, store.config, c, Endpoint::y, req.baseline[1], req.future_times, candidate_y));
        }
    }
    return log_sum_exp(terms) - std::log(static_cast<double>(store.draws.size()));
}

double case2_log_conditional(const PredictionRequest& req, std::span<const double> candidate_x,
                             std::span<const double> candidate_y, const DrawStore& store) {
    req.validate();
    if (!req.has_history()) throw std::invalid_argument("case2_log_conditional: history must be nonempty");
    check_candidates(req, candidate_x, candidate_y);
    require_draws(store);
    const std::array<Split, 2> hist{unpack(req.hist(Endpoint::x)), unpack(req.hist(Endpoint::y))};
    std::array<Split, 2> joint = hist;
    for (Endpoint e : kEndpoints) {
        const auto cand = e == Endpoint::x ? candidate_x : candidate_y;
        auto& j = joint[idx(e)];
        j.times.insert(j.times.end(), req.future_times.begin(), req.future_times.end());
        j.values.insert(j.values.end(), cand.begin(), cand.end());
    }
    std::vector<double> per_draw;
    per_draw.reserve(store.draws.size());
    std::vector<double> num(static_cast<std::size_t>(store.config.classes));
    std::vector<double> den(num.size());
    for (const auto& d : store.draws) {
        for (int c = 0; c < d.classes; ++c) {
            const double lp = std::log(d.pi[static_cast<std::size_t>(c)]);
            double lj = lp;
            double lh = lp;
            for (Endpoint e : kEndpoints) {
                const double b = req.baseline[idx(e)];
                lj += block_logdensity(d, store.config, c, e, b, joint[idx(e)].times, joint[idx(e)].values);
                lh += block_logdensity(d, store.config, c, e, b, hist[idx(e)].times, hist[idx(e)].values);
            }
            num[static_cast<std::size_t>(c)] = lj;
            den[static_cast<std::size_t>(c)] = lh;
        }
        const double lden = log_sum_exp(den);
        if (!std::isfinite(lden)) throw NumericError("history has zero likelihood under every class");
        per_draw.push_back(log_sum_exp(num) - lden);
    }
    return log_sum_exp(per_draw) - std::log(static_cast<double>(store.draws.size()));
}

CellField cell_field(const PredictionRequest& req, const GridSpec& grid, const DrawStore& store) {
    req.validate();
    grid.validate();
    if (req.future_times.size() != 1) throw std::invalid_argument("cell_field: exactly one future time is supported");
    require_draws(store);
    const std::array<Split, 2> hist{unpack(req.hist(Endpoint::x)), unpack(req.hist(Endpoint::y))};
    CellField field;
    field.grid = grid;
    field.mass.assign(grid.cell_count(), 0.0);
    const std::size_t nx = grid.nx();
    const std::size_t ny = grid.ny();
    std::vector<double> px;
    std::vector<double> py;
    const double inv_q = 1.0 / static_cast<double>(store.draws.size());
    for (const auto& d : store.draws) {
        const auto lw = log_responsibilities(req, hist, d, store.config);
        for (int c = 0; c < d.classes; ++c) {
            const double w = std::exp(lw[static_cast<std::size_t>(c)]) * inv_q;
            if (w == 0.0) continue;
            axis_masses(grid.x_edges, conditional_law_impl(req, hist[0], d, store.config, c, Endpoint::x), px);
            axis_masses(grid.y_edges, conditional_law_impl(req, hist[1], d, store.config, c, Endpoint::y), py);
            for (std::size_t r = 0; r < nx; ++r) {
                const double wr = w * px[r];
                if (wr == 0.0) continue;
                double* row = field.mass.data() + r * ny;
                for (std::size_t k = 0; k < ny; ++k) row[k] += wr * py[k];
            }
        }
    }
    field.outside_mass = std::max(0.0, 1.0 - field.grid_mass());
    return field;
}

double region_probability(const PredictionRequest& req, const Rectangle& rect, const DrawStore& store) {
    req.validate();
    if (req.future_times.size() != 1) throw std::invalid_argument("region_probability: exactly one future time is supported");
    if (!(rect.x_lo < rect.x_hi) || !(rect.y_lo < rect.y_hi)) {
        throw std::invalid_argument("region_probability: degenerate rectangle");
    }
    require_draws(store);
    const std::array<Split, 2> hist{unpack(req.hist(Endpoint::x)), unpack(req.hist(Endpoint::y))};
    const double inv_q = 1.0 / static_cast<double>(store.draws.size());
    double total = 0.0;
    for (const auto& d : store.draws) {
        const auto lw = log_responsibilities(req, hist, d, store.config);
        for (int c = 0; c < d.classes; ++c) {
            const double w = std::exp(lw[static_cast<std::size_t>(c)]) * inv_q;
            if (w == 0.0) continue;
            const auto lx = conditional_law_impl(req, hist[0], d, store.config, c, Endpoint::x);
            const auto ly = conditional_law_impl(req, hist[1], d, store.config, c, Endpoint::y);
            total += w * normal_interval_prob(rect.x_lo, rect.x_hi, lx.mean, lx.sd) *
                     normal_interval_prob(rect.y_lo, rect.y_hi, ly.mean, ly.sd);
        }
    }
    return std::clamp(total, 0.0, 1.0);
}

std::string write_cell_field_csv(const CellField& field) {
    std::ostringstream ss;
    ss << "x_lo,x_hi,y_lo,y_hi,mass\n";
    const auto& g = field.grid;
    for (std::size_t r = 0; r < g.nx(); ++r) {
        for (std::size_t c = 0; c < g.ny(); ++c) {
            ss << text::format_double(g.x_edges[r]) << ',' << text::format_double(g.x_edges[r + 1]) << ','
               << text::format_double(g.y_edges[c]) << ',' << text::format_double(g.y_edges[c + 1]) << ','
               << text::format_double(field.at(r, c)) << '\n';
        }
    }
    ss << "outside,,,," << text::format_double(field.outside_mass) << '\n';
    return ss.str();
}

CellField read_cell_field_csv(const std::string& content) {
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    struct Row {
        double x_lo, x_hi, y_lo, y_hi, mass;
    };
    std::vector<Row> rows;
    std::optional<double> outside;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line != "x_lo,x_hi,y_lo,y_hi,mass") throw DataError("cell field: bad header");
            continue;
        }
        if (line.empty()) continue;
        const auto f = text::split_csv(line);
        const std::string where = "cell field line " + std::to_string(lineno);
        if (f.size() != 5) throw DataError(where + ": expected 5 fields");
        if (outside) throw DataError(where + ": data after the outside row");
        if (f[0] == "outside") {
            const auto m = text::parse_double(f[4]);
            if (!m) throw DataError(where + ": malformed mass");
            outside = *m;
            continue;
        }
        Row r{};
        double* dst[] = {&r.x_lo, &r.x_hi, &r.y_lo, &r.y_hi, &r.mass};
        for (std::size_t k = 0; k < 5; ++k) {
            const auto v = text::parse_double(f[k]);
            if (!v) throw DataError(where + ": malformed number");
            *dst[k] = *v;
        }
        rows.push_back(r);
    }
    if (!outside) throw DataError("cell field: missing outside row");
    std::set<double> xs;
    std::set<double> ys;
    for (const auto& r : rows) {
        xs.insert(r.x_lo);
        xs.insert(r.x_hi);
        ys.insert(r.y_lo);
        ys.insert(r.y_hi);
    }
    CellField field;
    field.grid.x_edges.assign(xs.begin(), xs.end());
    field.grid.y_edges.assign(ys.begin(), ys.end());
    try {
        field.grid.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("cell field: ") + e.what());
    }
    if (rows.size() != field.grid.cell_count()) throw DataError("cell field: rows do not form a full grid");
    field.mass.assign(field.grid.cell_count(), 0.0);
    std::vector<char> seen(field.mass.size(), 0);
    for (const auto& r : rows) {
        const auto ix = std::lower_bound(field.grid.x_edges.begin(), field.grid.x_edges.end(), r.x_lo) - field.grid.x_edges.begin();
        const auto iy = std::lower_bound(field.grid.y_edges.begin(), field.grid.y_edges.end(), r.y_lo) - field.grid.y_edges.begin();
        const auto k = static_cast<std::size_t>(ix) * field.grid.ny() + static_cast<std::size_t>(iy);
        if (field.grid.x_edges[static_cast<std::size_t>(ix) + 1] != r.x_hi ||
            field.grid.y_edges[static_cast<std::size_t>(iy) + 1] != r.y_hi || seen[k]) {
            throw DataError("cell field: rows do not form a full grid");
        }
        if (!(r.mass >= 0.0)) throw DataError("cell field: negative mass");
        seen[k] = 1;
        field.mass[k] = r.mass;
    }
    field.outside_mass = *outside;
    const double total = field.grid_mass() + field.outside_mass;
    if (std::abs(total - 1.0) > 1e-6) throw DataError("cell field: masses do not sum to 1");
    return field;
}

}  // namespace lcscreen
