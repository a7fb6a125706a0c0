#include "lcscreen/region.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "lcscreen/errors.hpp"
#include "lcscreen/text_io.hpp"

namespace lcscreen {

namespace {

void check_target(const CellField& field, double target) {
    if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("region: target must be in (0, 1)");
    field.grid.validate();
    if (field.mass.size() != field.grid.cell_count()) throw std::invalid_argument("region: field does not match grid");
    const double total = field.grid_mass();
    if (!(total > target)) {
        throw GridTooSmallError("grid too small: grid mass " + text::format_double(total) + " does not exceed target " +
                                text::format_double(target));
    }
}

class Lattice {
 public:
    explicit Lattice(const CellField& f) : field_(f), nx_(f.grid.nx()), ny_(f.grid.ny()) {}

    std::size_t size() const { return nx_ * ny_; }
    double mass(std::size_t k) const { return field_.mass[k]; }

    template <class F>
    void for_neighbors(std::size_t k, F&& f) const {
        const std::size_t r = k / ny_;
        const std::size_t c = k % ny_;
        if (r > 0) f(k - ny_);
        if (r + 1 < nx_) f(k + ny_);
        if (c > 0) f(k - 1);
        if (c + 1 < ny_) f(k + 1);
    }

    // Cells adjacent to `set` but not in it.
    std::vector<std::size_t> outer_ring(const std::vector<char>& set) const {
        std::vector<char> mark(size(), 0);
        for (std::size_t k = 0; k < size(); ++k) {
            if (!set[k]) continue;
            for_neighbors(k, [&](std::size_t n) {
                if (!set[n]) mark[n] = 1;
            });
        }
        return indices(mark);
    }

    // Members of `set` with a 4-neighbor outside it or on the grid edge.
    std::vector<std::size_t> boundary(const std::vector<char>& set) const {
        std::vector<char> mark(size(), 0);
        for (std::size_t k = 0; k < size(); ++k) {
            if (!set[k]) continue;
            int inside = 0;
            int count = 0;
            for_neighbors(k, [&](std::size_t n) {
                ++count;
                inside += set[n] ? 1 : 0;
            });
            if (count < 4 || inside < count) mark[k] = 1;
        }
        return indices(mark);
    }

    // Ascending by mass, ties row-major.
    void sort_ascending(std::vector<std::size_t>& v) const {
        std::stable_sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) { return mass(a) < mass(b); });
    }
    // Descending by mass, ties row-major.
    void sort_descending(std::vector<std::size_t>& v) const {
        std::stable_sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) { return mass(a) > mass(b); });
    }

    double sum(const std::vector<char>& set) const {
        double s = 0.0;
        for (std::size_t k = 0; k < size(); ++k) {
            if (set[k]) s += mass(k);
        }
        return s;
    }

    static std::vector<std::size_t> indices(const std::vector<char>& mark) {
        std::vector<std::size_t> out;
        for (std::size_t k = 0; k < mark.size(); ++k) {
            if (mark[k]) out.push_back(k);
        }
        return out;
    }

 private:
    const CellField& field_;
    std::size_t nx_;
    std::size_t ny_;
};

CredibleRegion finalize(const CellField& field, const std::vector<char>& selected, double target,
                        RegionAlgorithm algorithm) {
    CredibleRegion region;
    region.target = target;
    region.algorithm = algorithm;
    region.grid = field.grid;
    const std::size_t ny = field.grid.ny();
    double s = 0.0;
    for (std::size_t k = 0; k < selected.size(); ++k) {
        if (!selected[k]) continue;
        region.cells.insert({k / ny, k % ny});
        s += field.mass[k];
    }
    region.p_sum = s;
    return region;
}

// Largest r >= 1 such that best exceeds the summed mass of the r smallest
// cells of `ascending`; 0 if there is none.
std::size_t swap_count(const Lattice& lat, const std::vector<std::size_t>& ascending, double best) {
    std::size_t r = 0;
    double cum = 0.0;
    for (std::size_t k = 0; k < ascending.size(); ++k) {
        cum += lat.mass(ascending[k]);
        if (best > cum) {
            r = k + 1;
        } else {
            break;
        }
    }
    return r;
}

}  // namespace

const char* name(RegionAlgorithm a) { return a == RegionAlgorithm::branch ? "branch" : "hdr"; }

RegionAlgorithm parse_algorithm(const std::string& s) {
    if (s == "branch") return RegionAlgorithm::branch;
    if (s == "hdr") return RegionAlgorithm::hdr;
    throw std::invalid_argument("unknown region algorithm '" + s + "' (expected branch or hdr)");
}

const char* name(Verdict v) {
    switch (v) {
        case Verdict::inside:
            return "inside";
        case Verdict::outside:
            return "outside";
        case Verdict::off_grid:
            return "off_grid";
        case Verdict::not_yet_observed:
            return "not_yet_observed";
    }
    return "?";
}

Verdict parse_verdict(const std::string& s) {
    for (Verdict v : {Verdict::inside, Verdict::outside, Verdict::off_grid, Verdict::not_yet_observed}) {
        if (s == name(v)) return v;
    }
    throw std::invalid_argument("unknown verdict '" + s + "'");
}

CredibleRegion hdr_region(const CellField& field, double target) {
    check_target(field, target);
    const Lattice lat(field);
    std::vector<std::size_t> order(lat.size());
    std::iota(order.begin(), order.end(), 0);
    lat.sort_descending(order);
    std::vector<char> selected(lat.size(), 0);
    double s = 0.0;
    for (std::size_t k : order) {
        selected[k] = 1;
        s += lat.mass(k);
        if (s > target) break;
    }
    return finalize(field, selected, target, RegionAlgorithm::hdr);
}

CredibleRegion branch_region(const CellField& field, double target, double c_quick, const BranchObserver& observer) {
    check_target(field, target);
    if (!(c_quick > 0.0 && c_quick < target)) throw std::invalid_argument("region: need 0 < c_quick < target");
    const Lattice lat(field);
    const std::size_t n = lat.size();

    BranchState st;
    st.selected.assign(n, 0);
    st.removed.assign(n, 0);
    std::size_t start = 0;
    for (std::size_t k = 1; k < n; ++k) {
        if (lat.mass(k) > lat.mass(start)) start = k;
    }
    st.selected[start] = 1;
    st.p_sum = lat.sum(st.selected);

    auto add = [&](std::size_t k) {
        st.selected[k] = 1;
        st.removed[k] = 0;
    };
    auto notify = [&] {
        st.p_sum = lat.sum(st.selected);
        if (observer) observer(st);
    };
    // Swaps can send a cell back and forth through M_R, so a phase may need
    // more steps than there are cells; n^2 is far above anything observed.
    auto guard = [&](std::size_t& steps, const char* phase) {
        if (++steps > n * n) throw NumericError(std::string("branch_region: ") + phase + " phase did not converge");
    };

    // Quick phase: absorb whole rings, looking two rings ahead for a better cell.
    st.phase = BranchPhase::quick;
    std::size_t steps = 0;
    while (st.p_sum <= c_quick) {
        guard(steps, "quick");
        auto d1 = lat.outer_ring(st.selected);
        if (d1.empty()) break;
        std::vector<char> m1 = st.selected;
        for (std::size_t k : d1) m1[k] = 1;
        std::vector<std::size_t> cand = lat.outer_ring(m1);
        for (std::size_t k = 0; k < n; ++k) {
            if (st.removed[k] && !m1[k] && std::find(cand.begin(), cand.end(), k) == cand.end()) cand.push_back(k);
        }
        lat.sort_ascending(d1);
        std::sort(cand.begin(), cand.end());
        lat.sort_descending(cand);
        const std::size_t r = cand.empty() ? 0 : swap_count(lat, d1, lat.mass(cand.front()));
        if (r > 0) {
            for (std::size_t k = r; k < d1.size(); ++k) add(d1[k]);
            add(cand.front());
            for (std::size_t k = 0; k < r; ++k) st.removed[d1[k]] = 1;
        } else {
            for (std::size_t k : d1) add(k);
        }
        notify();
    }

    // Slow phase: one cell at a time, trading low-mass boundary cells for a
    // better outside cell when that pays.
    st.phase = BranchPhase::slow;
    steps = 0;
    while (st.p_sum <= target) {
        guard(steps, "slow");
        auto d1 = lat.boundary(st.selected);
        std::vector<std::size_t> cand = lat.outer_ring(st.selected);
        for (std::size_t k = 0; k < n; ++k) {
            if (st.removed[k] && std::find(cand.begin(), cand.end(), k) == cand.end()) cand.push_back(k);
        }
        if (cand.empty()) break;
        lat.sort_ascending(d1);
        std::sort(cand.begin(), cand.end());
        lat.sort_descending(cand);
        const std::size_t best = cand.front();
        const std::size_t r = swap_count(lat, d1, lat.mass(best));
        for (std::size_t k = 0; k < r; ++k) {
            st.selected[d1[k]] = 0;
            st.removed[d1[k]] = 1;
        }
        add(best);
        notify();
    }

    // Tune: drop the smallest boundary cells while the slack allows.
    st.phase = BranchPhase::tune;
    steps = 0;
    while (true) {
        guard(steps, "tune");
        auto d1 = lat.boundary(st.selected);
        lat.sort_ascending(d1);
        const double slack = st.p_sum - target;
        double cum = 0.0;
        std::size_t r = 0;
        while (r < d1.size() && cum + lat.mass(d1[r]) <= slack) cum += lat.mass(d1[r++]);
        if (r == 0) break;
        for (std::size_t k = 0; k < r; ++k) st.selected[d1[k]] = 0;
        notify();
    }
    return finalize(field, st.selected, target, RegionAlgorithm::branch);
}

CredibleRegion build_region(const CellField& field, double target, RegionAlgorithm algorithm) {
    return algorithm == RegionAlgorithm::branch ? branch_region(field, target) : hdr_region(field, target);
}

Verdict contains(const CredibleRegion& region, double x, double y) {
    const auto r = locate_cell(region.grid.x_edges, x);
    const auto c = locate_cell(region.grid.y_edges, y);
    if (!r || !c) return Verdict::off_grid;
    return region.has(*r, *c) ? Verdict::inside : Verdict::outside;
}

std::string write_region_csv(const CredibleRegion& region, const CellField& field) {
    std::ostringstream ss;
    ss << "row,col,x_lo,x_hi,y_lo,y_hi,mass,selected\n";
    const auto& g = field.grid;
    for (std::size_t r = 0; r < g.nx(); ++r) {
        for (std::size_t c = 0; c < g.ny(); ++c) {
            ss << r << ',' << c << ',' << text::format_double(g.x_edges[r]) << ','
               << text::format_double(g.x_edges[r + 1]) << ',' << text::format_double(g.y_edges[c]) << ','
               << text::format_double(g.y_edges[c + 1]) << ',' << text::format_double(field.at(r, c)) << ','
               << (region.has(r, c) ? 1 : 0) << '\n';
        }
    }
    return ss.str();
}

}  // namespace lcscreen
