#pragma once

#include <cstddef>
#include <vector>

#include "lab/model_space.hpp"

namespace lab {

/// Uniform product grid with m cells per axis on [0,1)^d (periodic) or [0,1].
struct Grid {
    int dim = 1;
    std::size_t m = 1;
    bool periodic = true;

    static Grid for_space(const ModelSpace& space, std::size_t m);
    std::size_t size() const;
    double spacing() const { return 1.0 / double(m); }
    void center(std::size_t idx, double* x) const;
    /// Index of the cell containing x (the cell with the nearest center).
    std::size_t locate(const double* x) const;
    /// Squared ground distance between cell centers.
    double distance_sq(std::size_t a, std::size_t b) const;
    bool operator==(const Grid& o) const { return dim == o.dim && m == o.m && periodic == o.periodic; }
};

/// Default per-axis resolution for grid transport: 64 (d=2), 16 (d=3),
/// 8 (d=4), 6 (d>=5).
std::size_t default_grid_resolution(int d);

/// Probability weights on the cells of a grid.
struct GridMeasure {
    Grid grid;
    std::vector<double> w;

    static GridMeasure uniform(const Grid& g);
    /// mu discretized: cell masses of the invariant law.
    static GridMeasure invariant(const ModelSpace& space, const Grid& g);
    /// Nearest-cell binning of weighted points (weights need not be normalized).
    static GridMeasure bin(const Grid& g, const double* points, const double* weights, std::size_t n);
    /// Throws InputError unless weights are nonnegative with total 1 +- tol.
    void validate(double tol = 1e-12) const;
    void normalize();
};

/// (1-theta) a + theta b on a common grid.
GridMeasure mix(const GridMeasure& a, const GridMeasure& b, double theta);

}  // namespace lab
