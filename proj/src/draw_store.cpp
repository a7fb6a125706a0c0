#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lcscreen/errors.hpp"
#include "lcscreen/sampler.hpp"

namespace lcscreen {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "lcscreen-draws/1";

json priors_to_json(const EndpointPriors& p) {
    return json{{"gamma0", p.gamma0},     {"gamma1", p.gamma1},     {"gamma2", p.gamma2},
                {"gamma_sc", p.gamma_sc}, {"gamma_w", p.gamma_w},   {"gamma_e", p.gamma_e},
                {"mu0_base", p.mu0_base}, {"gamma0_base", p.gamma0_base}};
}

EndpointPriors priors_from_json(const json& j) {
    EndpointPriors p;
    p.gamma0 = j.at("gamma0").get<double>();
    p.gamma1 = j.at("gamma1").get<double>();
    p.gamma2 = j.at("gamma2").get<double>();
    p.gamma_sc = j.at("gamma_sc").get<double>();
    p.gamma_w = j.at("gamma_w").get<double>();
    p.gamma_e = j.at("gamma_e").get<double>();
    p.mu0_base = j.at("mu0_base").get<double>();
    p.gamma0_base = j.at("gamma0_base").get<double>();
    return p;
}

json header_to_json(const DrawStore& s) {
    const auto& c = s.config;
    json cfg{{"classes", c.classes},
             {"alpha_lo", c.alpha_lo},
             {"alpha_hi", c.alpha_hi},
             {"site_effects", c.site_effects},
             {"subject_effects", c.subject_effects},
             {"fixed_hyper_precision", c.fixed_hyper_precision ? json(*c.fixed_hyper_precision) : json(nullptr)},
             {"priors", {{"x", priors_to_json(c.priors[0])}, {"y", priors_to_json(c.priors[1])}}}};
    json run{{"burn_in", s.run.burn_in},
             {"keep", s.run.keep},
             {"thin", s.run.thin},
             {"seed", s.run.seed},
             {"alpha_step", s.run.alpha_step},
             {"permute_initial_labels", s.run.permute_initial_labels}};
    return json{{"record", "header"},
                {"format", kFormat},
                {"config", cfg},
                {"run", run},
                {"dataset_digest", s.dataset_digest},
                {"subject_ids", s.subject_ids},
                {"sites", s.sites},
                {"alpha_acceptance", s.alpha_acceptance},
                {"n_draws", s.draws.size()}};
}

json draw_to_json(const ParameterDraw& d, std::size_t index) {
    json cls;
    json com;
    for (Endpoint e : kEndpoints) {
        std::vector<double> b0, b1, b2, ts;
        for (int c = 0; c < d.classes; ++c) {
            const auto& p = d.at(c, e);
            b0.push_back(p.beta0);
            b1.push_back(p.beta1);
            b2.push_back(p.beta2);
            ts.push_back(p.tau_s);
        }
        cls[name(e)] = json{{"beta0", b0}, {"beta1", b1}, {"beta2", b2}, {"tau_s", ts}};
        const auto& m = d.com(e);
        com[name(e)] = json{{"beta0_base", m.beta0_base}, {"tau_w", m.tau_w}, {"tau_e", m.tau_e}, {"tau0", m.tau0},
                            {"tau1", m.tau1},             {"tau2", m.tau2},   {"tau0_base", m.tau0_base}};
    }
    return json{{"record", "draw"}, {"index", index}, {"alpha", d.alpha}, {"pi", d.pi}, {"p", d.p},
                {"z", d.z},         {"v", d.v},       {"w", d.w},         {"classes", cls}, {"common", com}};
}

ParameterDraw draw_from_json(const json& j, int classes, int sites) {
    ParameterDraw d;
    d.classes = classes;
    d.sites = sites;
    d.alpha = j.at("alpha").get<double>();
    d.pi = j.at("pi").get<std::vector<double>>();
    d.p = j.at("p").get<std::vector<double>>();
    d.z = j.at("z").get<std::vector<int>>();
    d.v = j.at("v").get<std::vector<double>>();
    d.w = j.at("w").get<std::vector<double>>();
    d.cls.assign(static_cast<std::size_t>(classes), {});
    for (Endpoint e : kEndpoints) {
        const auto& c = j.at("classes").at(name(e));
        const auto b0 = c.at("beta0").get<std::vector<double>>();
        const auto b1 = c.at("beta1").get<std::vector<double>>();
        const auto b2 = c.at("beta2").get<std::vector<double>>();
        const auto ts = c.at("tau_s").get<std::vector<double>>();
        const auto n = static_cast<std::size_t>(classes);
        if (b0.size() != n || b1.size() != n || b2.size() != n || ts.size() != n) {
            throw DataError("draw store: per-class arrays have the wrong length");
        }
        for (std::size_t k = 0; k < n; ++k) d.cls[k][idx(e)] = ClassEndpointParams{b0[k], b1[k], b2[k], ts[k]};
        const auto& m = j.at("common").at(name(e));
        auto& out = d.com(e);
        out.beta0_base = m.at("beta0_base").get<double>();
        out.tau_w = m.at("tau_w").get<double>();
        out.tau_e = m.at("tau_e").get<double>();
        out.tau0 = m.at("tau0").get<double>();
        out.tau1 = m.at("tau1").get<double>();
        out.tau2 = m.at("tau2").get<double>();
        out.tau0_base = m.at("tau0_base").get<double>();
    }
    return d;
}

}  // namespace

void write_draw_store(std::ostream& out, const DrawStore& store) {
    out << header_to_json(store).dump() << '\n';
    for (std::size_t q = 0; q < store.draws.size(); ++q) out << draw_to_json(store.draws[q], q).dump() << '\n';
}

std::string write_draw_store(const DrawStore& store) {
    std::ostringstream ss;
    write_draw_store(ss, store);
    return ss.str();
}

DrawStore read_draw_store(std::istream& in) {
    DrawStore s;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::size_t expected = 0;
    try {
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line == "\r") continue;
            const json j = json::parse(line);
            const auto kind = j.at("record").get<std::string>();
            if (!have_header) {
                if (kind != "header") throw DataError("draw store: first record must be the header");
                if (j.at("format").get<std::string>() != kFormat) throw DataError("draw store: unknown format");
                const auto& c = j.at("config");
                auto& mc = s.config;
                mc.classes = c.at("classes").get<int>();
                mc.alpha_lo = c.at("alpha_lo").get<double>();
                mc.alpha_hi = c.at("alpha_hi").get<double>();
                mc.site_effects = c.at("site_effects").get<bool>();
                mc.subject_effects = c.at("subject_effects").get<bool>();
                if (!c.at("fixed_hyper_precision").is_null()) {
                    mc.fixed_hyper_precision = c.at("fixed_hyper_precision").get<double>();
                }
                mc.priors[0] = priors_from_json(c.at("priors").at("x"));
                mc.priors[1] = priors_from_json(c.at("priors").at("y"));
                const auto& r = j.at("run");
                s.run.burn_in = r.at("burn_in").get<long>();
                s.run.keep = r.at("keep").get<long>();
                s.run.thin = r.at("thin").get<int>();
                s.run.seed = r.at("seed").get<std::uint64_t>();
                s.run.alpha_step = r.at("alpha_step").get<double>();
                s.run.permute_initial_labels = r.at("permute_initial_labels").get<bool>();
                s.dataset_digest = j.at("dataset_digest").get<std::string>();
                s.subject_ids = j.at("subject_ids").get<std::vector<std::string>>();
                s.sites = j.at("sites").get<int>();
                s.alpha_acceptance = j.at("alpha_acceptance").get<double>();
                expected = j.at("n_draws").get<std::size_t>();
                have_header = true;
                continue;
            }
            if (kind != "draw") throw DataError("draw store line " + std::to_string(lineno) + ": expected a draw");
            s.draws.push_back(draw_from_json(j, s.config.classes, s.sites));
            s.draws.back().check(s.config);
            if (s.draws.back().z.size() != s.subject_ids.size()) {
                throw DataError("draw store line " + std::to_string(lineno) + ": assignment length mismatch");
            }
        }
    } catch (const json::exception& e) {
        throw DataError("draw store line " + std::to_string(lineno) + ": " + e.what());
    } catch (const NumericError& e) {
        throw DataError("draw store line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!have_header) throw DataError("draw store: missing header");
    if (s.draws.size() != expected) throw DataError("draw store: truncated (header announces more draws)");
    return s;
}

DrawStore read_draw_store_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open draw store " + path);
    return read_draw_store(in);
}

}  // namespace lcscreen
