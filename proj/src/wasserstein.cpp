#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lab/error.hpp"
#include "lab/wasserstein.hpp"

namespace lab {

TransportResult w_p_grid_exact(const GridMeasure& a, const GridMeasure& b, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("transport exponent p must be >= 1");
    if (!(a.grid == b.grid)) throw InputError("measures live on different grids");
    a.validate(1e-9);
    b.validate(1e-9);
    const Grid& g = a.grid;
    if (g.size() > kExactCellCap)
        throw ResourceError("exact transport is capped at 4096 cells; use the entropic solver for this grid");
    std::vector<double> wa = a.w, wb = b.w;
    if (p == 1.0) {
        // W_1 only depends on a - b
        for (std::size_t c = 0; c < wa.size(); ++c) {
            const double common = std::min(wa[c], wb[c]);
            wa[c] -= common;
            wb[c] -= common;
        }
    }
    std::vector<std::size_t> rows, cols;
    for (std::size_t c = 0; c < wa.size(); ++c) {
        if (wa[c] > 0) rows.push_back(c);
        if (wb[c] > 0) cols.push_back(c);
    }
    TransportResult res;
    if (rows.empty() || cols.empty()) return res;
    std::vector<double> ra(rows.size()), cb(cols.size()), cost(rows.size() * cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r) ra[r] = wa[rows[r]];
    for (std::size_t s = 0; s < cols.size(); ++s) cb[s] = wb[cols[s]];
    // balance rounding residue from the common-mass removal
    const double sa = std::accumulate(ra.begin(), ra.end(), 0.0), sb = std::accumulate(cb.begin(), cb.end(), 0.0);
    for (double& v : cb) v *= sa / sb;
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t s = 0; s < cols.size(); ++s) {
            const double d2 = g.distance_sq(rows[r], cols[s]);
            cost[r * cols.size() + s] = p == 2.0 ? d2 : std::pow(d2, 0.5 * p);
        }
    res = transport_exact(cost, ra, cb);
    res.cost *= sa;
    res.distance = std::pow(std::max(res.cost, 0.0), 1.0 / p);
    return res;
}

DualBounds w2_dual_upper_bound(const std::vector<double>& psi, double T, const SpectralBasis& basis, double eps,
                               const Grid& grid, double p) {
    if (!(eps > 0)) throw InputError("smoothing time must be positive");
    if (!(eps < 1)) throw InputError("mixing weight must be below 1");
    if (!(T > 0)) throw InputError("horizon must be positive");
    if (!(p >= 1.0)) throw InputError("transport exponent p must be >= 1");
    const auto& sp = basis.space();
    const int D = sp.dim();
    if (grid.dim != D) throw InputError("grid dimension does not match the space");
    const std::size_t n = std::min(psi.size(), basis.size());

    DualBounds out;
    out.p = p;
    std::vector<double> fc(n), gc(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double l = basis.eigenvalue(i);
        fc[i] = std::exp(-eps * l) * psi[i] / std::sqrt(T);
        gc[i] = fc[i] / l;
        out.l2_sq += gc[i] * gc[i] * l;
    }
    const auto cell = GridMeasure::invariant(sp, grid).w;
    std::vector<double> v(n), gr(n * std::size_t(D)), x(static_cast<std::size_t>(D));
    double am0 = 0, lp = 0;
    for (std::size_t c = 0; c < grid.size(); ++c) {
        grid.center(c, x.data());
        basis.eval_all(x.data(), v.data(), n);
        basis.gradient_all(x.data(), gr.data(), n);
        double f = 1.0, g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) f += fc[i] * v[i];
        for (int k = 0; k < D; ++k) {
            double gk = 0;
            for (std::size_t i = 0; i < n; ++i) gk += gc[i] * gr[i * std::size_t(D) + std::size_t(k)];
            g2 += gk * gk;
        }
        const double mixed = (1 - eps) * f + eps;
        g2 *= (1 - eps) * (1 - eps);
        const double lm = log_mean(mixed);
        if (g2 > 0) am0 += lm > 0 ? cell[c] * g2 / lm : std::numeric_limits<double>::infinity();
        lp += cell[c] * std::pow(g2, 0.5 * p);
    }
    out.am0 = am0;
    out.l17 = p * std::pow(lp, 1.0 / p);
    return out;
}

}  // namespace lab
