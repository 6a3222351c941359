#include "lab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lab/error.hpp"

namespace lab {

Grid Grid::for_space(const ModelSpace& space, std::size_t m) {
    LAB_REQUIRE(m >= 1, "grid resolution must be >= 1");
    return {space.dim(), m, space.is_torus()};
}

std::size_t Grid::size() const {
    std::size_t n = 1;
    for (int k = 0; k < dim; ++k) n *= m;
    return n;
}

void Grid::center(std::size_t idx, double* x) const {
    for (int k = 0; k < dim; ++k) {
        x[k] = (double(idx % m) + 0.5) / double(m);
        idx /= m;
    }
}

std::size_t Grid::locate(const double* x) const {
    std::size_t idx = 0, stride = 1;
    for (int k = 0; k < dim; ++k) {
        const double v = x[k] * double(m);
        std::size_t c = v <= 0 ? 0 : std::size_t(v);
        if (c >= m) c = m - 1;
        idx += c * stride;
        stride *= m;
    }
    return idx;
}

double Grid::distance_sq(std::size_t a, std::size_t b) const {
    double s = 0;
    for (int k = 0; k < dim; ++k) {
        const std::size_t ia = a % m, ib = b % m;
        a /= m;
        b /= m;
        std::size_t diff = ia > ib ? ia - ib : ib - ia;
        if (periodic) diff = std::min(diff, m - diff);
        const double t = double(diff) / double(m);
        s += t * t;
    }
    return s;
}

std::size_t default_grid_resolution(int d) {
    switch (d) {
        case 1: return 4096;
        case 2: return 64;
        case 3: return 16;
        case 4: return 8;
        default: return 6;
    }
}

GridMeasure GridMeasure::uniform(const Grid& g) {
    GridMeasure gm{g, std::vector<double>(g.size(), 1.0 / double(g.size()))};
    return gm;
}

GridMeasure GridMeasure::invariant(const ModelSpace& space, const Grid& g) {
    if (space.uniform()) return uniform(g);
    GridMeasure gm{g, std::vector<double>(g.size())};
    for (std::size_t c = 0; c < g.m; ++c)
        gm.w[c] = space.cdf(double(c + 1) / double(g.m)) - space.cdf(double(c) / double(g.m));
    gm.normalize();
    return gm;
}

GridMeasure GridMeasure::bin(const Grid& g, const double* points, const double* weights, std::size_t n) {
    GridMeasure gm{g, std::vector<double>(g.size(), 0.0)};
    for (std::size_t j = 0; j < n; ++j) gm.w[g.locate(points + j * std::size_t(g.dim))] += weights[j];
    gm.normalize();
    return gm;
}

void GridMeasure::validate(double tol) const {
    if (w.size() != grid.size()) throw InputError("grid measure size does not match its grid");
    double s = 0;
    for (double v : w) {
        if (!(v >= 0)) throw InputError("grid measure has a negative or NaN weight");
        s += v;
    }
    if (std::abs(s - 1.0) > tol) throw InputError("grid measure mass differs from 1");
}

void GridMeasure::normalize() {
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(s > 0)) throw InputError("cannot normalize a zero measure");
    for (double& v : w) v /= s;
}

GridMeasure mix(const GridMeasure& a, const GridMeasure& b, double theta) {
    if (!(a.grid == b.grid)) throw InputError("mixture of measures on different grids");
    LAB_REQUIRE(theta >= 0 && theta <= 1, "mixture weight must lie in [0,1]");
    GridMeasure out{a.grid, std::vector<double>(a.w.size())};
    for (std::size_t i = 0; i < a.w.size(); ++i) out.w[i] = (1 - theta) * a.w[i] + theta * b.w[i];
    return out;
}

}  // namespace lab
