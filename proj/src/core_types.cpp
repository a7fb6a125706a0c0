#include "lcscreen/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lcscreen/errors.hpp"
#include "lcscreen/text_io.hpp"

namespace lcscreen {

namespace {

constexpr std::string_view kHeader = "subject_id,site,endpoint,time,baseline,value";
constexpr std::string_view kHeaderArm = "subject_id,site,endpoint,time,baseline,value,arm";

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
    throw DataError("line " + std::to_string(line) + ": " + msg);
}

struct PendingSubject {
    SubjectRecord rec;
    std::array<std::optional<double>, 2> baseline;
    std::array<std::set<double>, 2> seen_times;
    std::size_t first_line = 0;
};

}  // namespace

std::size_t Dataset::observation_count() const {
    std::size_t n = 0;
    for (const auto& s : subjects) n += s.series[0].size() + s.series[1].size();
    return n;
}

const SubjectRecord* Dataset::find(const std::string& subject_id) const {
    for (const auto& s : subjects) {
        if (s.subject_id == subject_id) return &s;
    }
    return nullptr;
}

void ModelConfig::validate() const {
    if (classes < 1) throw std::invalid_argument("model: classes must be >= 1");
    for (Endpoint e : kEndpoints) {
        const auto& p = prior(e);
        for (double g : {p.gamma0, p.gamma1, p.gamma2, p.gamma_sc, p.gamma_w, p.gamma_e, p.gamma0_base}) {
            if (!(g > 0.0) || !std::isfinite(g)) {
                throw std::invalid_argument(std::string("model: all gamma hyperparameters must be > 0 (endpoint ") +
                                            name(e) + ")");
            }
        }
        if (!std::isfinite(p.mu0_base)) throw std::invalid_argument("model: mu0_base must be finite");
    }
    if (!(alpha_lo >= 1.0)) throw std::invalid_argument("model: alpha_lo must be >= 1");
    if (!(alpha_lo < alpha_hi)) throw std::invalid_argument("model: alpha_lo must be < alpha_hi");
    if (fixed_hyper_precision && !(*fixed_hyper_precision > 0.0)) {
        throw std::invalid_argument("model: fixed_hyper_precision must be > 0");
    }
}

Dataset ingest_dataset(std::istream& in) {
    Dataset d;
    std::map<std::string, PendingSubject> pending;
    std::optional<int> declared_sites;
    bool have_header = false;
    bool with_arm = false;
    std::string line;
    std::size_t lineno = 0;

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            if (line.rfind("#meta ", 0) == 0) {
                auto kv = line.substr(6);
                auto eq = kv.find('=');
                if (eq == std::string::npos) fail(lineno, "metadata line must be '#meta key=value'");
                d.metadata[kv.substr(0, eq)] = kv.substr(eq + 1);
                continue;
            }
            if (line.rfind("#sites ", 0) == 0) {
                auto v = text::parse_int(line.substr(7));
                if (!v || *v < 1) fail(lineno, "invalid site count declaration");
                declared_sites = static_cast<int>(*v);
                continue;
            }
            if (line == kHeader) {
                have_header = true;
            } else if (line == kHeaderArm) {
                have_header = true;
                with_arm = true;
            } else {
                fail(lineno, std::string("expected header '") + std::string(kHeader) + "'");
            }
            continue;
        }
        if (line.empty()) continue;

        auto f = text::split_csv(line);
        const std::size_t want = with_arm ? 7 : 6;
        if (f.size() != want) {
            fail(lineno, "expected " + std::to_string(want) + " fields, got " + std::to_string(f.size()));
        }
        const std::string& id = f[0];
        if (id.empty()) fail(lineno, "empty subject_id");
        auto site = text::parse_int(f[1]);
        if (!site || *site < 1) fail(lineno, "site must be a positive integer");
        Endpoint ep;
        if (f[2] == "x") {
            ep = Endpoint::x;
        } else if (f[2] == "y") {
            ep = Endpoint::y;
        } else {
            fail(lineno, "endpoint must be 'x' or 'y'");
        }
        auto time = text::parse_double(f[3]);
        if (!time || !std::isfinite(*time) || *time < 0.0) fail(lineno, "time must be a finite number >= 0");
        std::optional<double> baseline;
        if (!text::trim(f[4]).empty()) {
            baseline = text::parse_double(f[4]);
            if (!baseline || !std::isfinite(*baseline)) fail(lineno, "baseline must be a finite number");
        }

        auto& ps = pending[id];
        if (ps.first_line == 0) {
            ps.first_line = lineno;
            ps.rec.subject_id = id;
            ps.rec.site = static_cast<int>(*site);
            if (with_arm && !f[6].empty()) ps.rec.arm = f[6];
        } else {
            if (ps.rec.site != *site) fail(lineno, "inconsistent site for subject " + id);
            std::optional<std::string> arm;
            if (with_arm && !f[6].empty()) arm = f[6];
            if (with_arm && arm != ps.rec.arm) fail(lineno, "inconsistent arm for subject " + id);
        }

        const int e = idx(ep);
        if (!ps.seen_times[e].insert(*time).second) {
            fail(lineno, "duplicate observation for subject " + id + " endpoint " + name(ep) + " time " +
                             text::format_double(*time));
        }
        if (*time == 0.0) {
            if (!baseline) fail(lineno, "baseline row without a baseline value");
            ps.baseline[e] = *baseline;
            continue;
        }
        auto value = text::parse_double(f[5]);
        if (!value || !std::isfinite(*value)) fail(lineno, "value must be a finite number");
        if (baseline && ps.baseline[e] && *ps.baseline[e] != *baseline) {
            fail(lineno, "baseline disagrees with the time-0 row for subject " + id);
        }
        ps.rec.obs(ep).push_back({*time, *value});
    }

    if (!have_header) throw DataError("line 1: missing header");
    if (pending.empty()) throw DataError("empty dataset");

    int max_site = 0;
    for (auto& [id, ps] : pending) {
        for (Endpoint ep : kEndpoints) {
            const int e = idx(ep);
            if (!ps.baseline[e]) {
                throw DataError("missing baseline for subject " + id + " endpoint " + name(ep) +
                                " (first seen on line " + std::to_string(ps.first_line) + ")");
            }
            ps.rec.baseline[e] = *ps.baseline[e];
            auto& s = ps.rec.obs(ep);
            std::sort(s.begin(), s.end(), [](const Observation& a, const Observation& b) { return a.time < b.time; });
        }
        max_site = std::max(max_site, ps.rec.site);
        d.subjects.push_back(std::move(ps.rec));
    }
    if (declared_sites) {
        if (*declared_sites < max_site) {
            throw DataError("declared site count " + std::to_string(*declared_sites) + " is below site index " +
                            std::to_string(max_site));
        }
        d.sites = *declared_sites;
    } else {
        d.sites = max_site;
    }
    return d;
}

Dataset ingest_dataset_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset " + path);
    return ingest_dataset(in);
}

void emit_dataset(std::ostream& out, const Dataset& d) {
    for (const auto& [k, v] : d.metadata) out << "#meta " << k << '=' << v << '\n';
    out << "#sites " << d.sites << '\n';
    const bool with_arm =
        std::any_of(d.subjects.begin(), d.subjects.end(), [](const SubjectRecord& s) { return s.arm.has_value(); });
    out << (with_arm ? kHeaderArm : kHeader) << '\n';
    for (const auto& s : d.subjects) {
        const std::string id = text::csv_field(s.subject_id);
        const std::string arm = with_arm ? "," + text::csv_field(s.arm.value_or("")) : "";
        for (Endpoint ep : kEndpoints) {
            const std::string base = text::format_double(s.base(ep));
            out << id << ',' << s.site << ',' << name(ep) << ",0," << base << ",0" << arm << '\n';
            for (const auto& o : s.obs(ep)) {
                out << id << ',' << s.site << ',' << name(ep) << ',' << text::format_double(o.time) << ',' << base
                    << ',' << text::format_double(o.value) << arm << '\n';
            }
        }
    }
}

std::string emit_dataset(const Dataset& d) {
    std::ostringstream ss;
    emit_dataset(ss, d);
    return ss.str();
}

std::vector<Violation> validate_dataset(const Dataset& d) {
    std::vector<Violation> v;
    if (d.sites < 1) v.push_back({"", "sites", "site count M must be >= 1"});
    std::set<std::string> ids;
    for (const auto& s : d.subjects) {
        if (!ids.insert(s.subject_id).second) v.push_back({s.subject_id, "subject_id", "duplicate subject_id"});
        if (s.site < 1 || s.site > d.sites) v.push_back({s.subject_id, "site", "site out of range"});
        for (Endpoint ep : kEndpoints) {
            const std::string field = std::string("series_") + name(ep);
            if (!std::isfinite(s.base(ep))) {
                v.push_back({s.subject_id, std::string("baseline_") + name(ep), "non-finite baseline"});
            }
            const auto& series = s.obs(ep);
            bool nonpos = false;
            bool nonincr = false;
            bool nonfinite = false;
            for (std::size_t j = 0; j < series.size(); ++j) {
                if (!(series[j].time > 0.0)) nonpos = true;
                if (j > 0 && !(series[j].time > series[j - 1].time)) nonincr = true;
                if (!std::isfinite(series[j].time) || !std::isfinite(series[j].value)) nonfinite = true;
            }
            if (nonpos) v.push_back({s.subject_id, field, "non-positive time"});
            if (nonincr) v.push_back({s.subject_id, field, "non-increasing times"});
            if (nonfinite) v.push_back({s.subject_id, field, "non-finite observation"});
        }
    }
    return v;
}

std::string dataset_digest(const Dataset& d) {
    const std::string text = emit_dataset(d);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace lcscreen
