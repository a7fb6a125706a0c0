#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcscreen/core_types.hpp"
#include "lcscreen/sampler.hpp"

namespace lcscreen {

struct PredictionRequest {
    std::array<double, 2> baseline{0.0, 0.0};
    std::array<Series, 2> history;  // indexed by Endpoint
    std::vector<double> future_times;
    std::optional<int> site;  // carried along; predictions marginalize the site effect

    const Series& hist(Endpoint e) const { return history[idx(e)]; }
    Series& hist(Endpoint e) { return history[idx(e)]; }
    bool has_history() const { return !history[0].empty() || !history[1].empty(); }

    // Throws std::invalid_argument if times are unordered or the future block
    // does not lie strictly after every history time.
    void validate() const;
};

// Cells are (x_edges[r], x_edges[r+1]] x (y_edges[c], y_edges[c+1]]; rows
// index x, columns index y.
struct GridSpec {
    std::vector<double> x_edges;
    std::vector<double> y_edges;

    std::size_t nx() const { return x_edges.size() - 1; }
    std::size_t ny() const { return y_edges.size() - 1; }
    std::size_t cell_count() const { return nx() * ny(); }
    void validate() const;

    bool operator==(const GridSpec&) const = default;
};

// Edges lo, lo + width, ..., up to hi (hi must be reachable within 1e-9).
std::vector<double> uniform_edges(double lo, double hi, double width);
// "lo:hi:width,lo:hi:width" for x then y.
GridSpec parse_grid(const std::string& text);

// Index k with edges[k] < v <= edges[k+1], or nullopt when v is off the grid.
std::optional<std::size_t> locate_cell(std::span<const double> edges, double v);

struct CellField {
    GridSpec grid;
    std::vector<double> mass;  // nx x ny row-major
    double outside_mass = 0.0;

    double at(std::size_t row, std::size_t col) const { return mass[row * grid.ny() + col]; }
    double& at(std::size_t row, std::size_t col) { return mass[row * grid.ny() + col]; }
    double grid_mass() const;
};

// Per-class responsibilities for one draw: proportional to pi_c times the
// history likelihood of both endpoints (pi alone without history).
std::vector<double> responsibilities(const PredictionRequest& req, const ParameterDraw& draw,
                                     const ModelConfig& config);

struct NormalLaw {
    double mean = 0.0;
    double sd = 1.0;
};

// Law of the endpoint at future_times[0] given the history, for class c of
// one draw, with site and subject effects integrated out.
NormalLaw conditional_law(const PredictionRequest& req, const ParameterDraw& draw, const ModelConfig& config, int c,
                          Endpoint e);

double case1_log_joint(const PredictionRequest& req, std::span<const double> candidate_x,
                       std::span<const double> candidate_y, const DrawStore& store);
double case2_log_conditional(const PredictionRequest& req, std::span<const double> candidate_x,
                             std::span<const double> candidate_y, const DrawStore& store);

CellField cell_field(const PredictionRequest& req, const GridSpec& grid, const DrawStore& store);

struct Rectangle {
    double x_lo = 0.0;
    double x_hi = 0.0;
    double y_lo = 0.0;
    double y_hi = 0.0;
};

double region_probability(const PredictionRequest& req, const Rectangle& rect, const DrawStore& store);

// Rows x_lo,x_hi,y_lo,y_hi,mass then a final "outside,,,,mass" row.
std::string write_cell_field_csv(const CellField& field);
CellField read_cell_field_csv(const std::string& text);

}  // namespace lcscreen
