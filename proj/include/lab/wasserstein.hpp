#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lab/functionals.hpp"
#include "lab/grid.hpp"
#include "lab/model_space.hpp"
#include "lab/sde.hpp"
#include "lab/spectral.hpp"

namespace lab {

/// Probability measure on [0,1] (or the circle [0,1)) made of atoms and
/// uniform segments with disjoint interiors.
class Measure1D {
  public:
    struct Piece {
        double lo, hi, mass;  // lo == hi: atom
    };

    static Measure1D atoms(const double* x, const double* w, std::size_t n);
    static Measure1D atoms(const std::vector<double>& x, const std::vector<double>& w);
    static Measure1D dirac(double x);
    static Measure1D uniform(double lo = 0.0, double hi = 1.0);
    /// Piecewise-constant density: cell k = [k/m, (k+1)/m) carries w[k].
    static Measure1D cells(const std::vector<double>& w);
    /// Weighted trajectory points, trapezoid weights.
    static Measure1D empirical(const Trajectory& traj);

    const std::vector<Piece>& pieces() const { return pieces_; }
    /// Sorted, merged, normalized; throws InputError on overlap or bad mass.
    static Measure1D from_pieces(std::vector<Piece> pieces);

  private:
    std::vector<Piece> pieces_;
};

/// W_p between measures on [0,1] by exact piecewise quantile integration.
double w_p_interval(const Measure1D& a, const Measure1D& b, double p);
/// W_p on the circle R/Z.
double w_p_circle(const Measure1D& a, const Measure1D& b, double p);
/// p = 1 circle distance through the CDF difference and its weighted median.
double w1_circle_cdf(const Measure1D& a, const Measure1D& b);
/// W_p(a, mu) for a measure on a one-dimensional space against its
/// invariant law, using the analytic quantile of mu.
double w_p_to_invariant(const ModelSpace& space, const Measure1D& a, double p);

/// Dense transport problem: cost is n x m row-major.
struct TransportResult {
    double cost = 0.0;      // sum pi_ij c_ij
    double distance = 0.0;  // cost^{1/p} when produced by a W_p wrapper
    double marginal_violation = 0.0;
    double certificate = 0.0;  // most negative reduced cost (exact solver)
    std::size_t iterations = 0;
};

inline constexpr std::size_t kExactCellCap = 4096;

/// Network simplex on the bipartite transportation LP. Masses are rescaled
/// to integers of 2^-52 so pivots are exact; the returned cost uses the
/// rounded plan. Certificate is checked to 1e-10 and NumericalError thrown
/// otherwise.
TransportResult transport_exact(const std::vector<double>& cost, const std::vector<double>& a,
                                const std::vector<double>& b, std::vector<double>* plan = nullptr);

/// Exact W_p between two measures on the same grid (<= kExactCellCap cells
/// each side after dropping empty cells).
TransportResult w_p_grid_exact(const GridMeasure& a, const GridMeasure& b, double p);

struct SinkhornOptions {
    double eps_final = 0.0;  // 0: 1e-4 x median cost
    int stages = 8;          // eps halves stages - 1 times down to eps_final
    double tol = 1e-7;       // marginal L1
    std::size_t max_iter = 200000;
    bool separable = true;   // p = 2 on periodic grids uses per-axis passes
};

/// Log-domain entropic transport with eps-scaling; returns the transport
/// part of the cost. Upward biased relative to the exact value.
TransportResult w_p_grid_sinkhorn(const GridMeasure& a, const GridMeasure& b, double p,
                                  const SinkhornOptions& opt = {});

/// Median of the ground cost rho^p over all cell pairs.
double median_cost(const Grid& g, double p);

struct DualBounds {
    double am0 = 0.0;  // bound on W_2^2
    double l17 = 0.0;  // bound on W_p (p as requested)
    double l2_sq = 0.0;  // int |grad (-L)^{-1}(f-1)|^2 dmu
    double p = 2.0;
};

/// Spectral upper bounds for W(f mu, mu) with f the density of
/// (1 - eps) mu_{T,eps} + eps mu built from psi. Grid quadrature.
DualBounds w2_dual_upper_bound(const std::vector<double>& psi, double T, const SpectralBasis& basis, double eps,
                               const Grid& grid, double p = 2.0);

}  // namespace lab
