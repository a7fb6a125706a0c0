#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lcscreen/predictive.hpp"

namespace lcscreen {

enum class RegionAlgorithm { branch, hdr };

const char* name(RegionAlgorithm a);
RegionAlgorithm parse_algorithm(const std::string& s);

using Cell = std::pair<std::size_t, std::size_t>;  // (row = x index, col = y index)

struct CredibleRegion {
    std::set<Cell> cells;
    double p_sum = 0.0;
    double target = 0.0;
    RegionAlgorithm algorithm = RegionAlgorithm::hdr;
    GridSpec grid;

    bool has(std::size_t row, std::size_t col) const { return cells.count({row, col}) != 0; }
};

enum class BranchPhase { quick, slow, tune };

// Snapshot handed to a BranchObserver after every step.
struct BranchState {
    std::vector<char> selected;  // M, row-major
    std::vector<char> removed;   // M_R, row-major
    double p_sum = 0.0;
    BranchPhase phase = BranchPhase::quick;
};

using BranchObserver = std::function<void(const BranchState&)>;

// Adds cells in descending mass order (ties row-major) until the sum first
// exceeds target. Throws GridTooSmallError when the grid cannot hold target.
CredibleRegion hdr_region(const CellField& field, double target);

// Branching-out construction: quick ring growth with two-ring lookahead until
// c_quick, single-cell growth with one-ring lookahead until target, then
// trimming of low-mass boundary cells.
CredibleRegion branch_region(const CellField& field, double target, double c_quick,
                             const BranchObserver& observer = {});
inline CredibleRegion branch_region(const CellField& field, double target) {
    return branch_region(field, target, 0.9 * target);
}

CredibleRegion build_region(const CellField& field, double target, RegionAlgorithm algorithm);

enum class Verdict { inside, outside, off_grid, not_yet_observed };

const char* name(Verdict v);
Verdict parse_verdict(const std::string& s);

Verdict contains(const CredibleRegion& region, double x, double y);

// row,col,x_lo,x_hi,y_lo,y_hi,mass,selected for every grid cell.
std::string write_region_csv(const CredibleRegion& region, const CellField& field);

}  // namespace lcscreen
