#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lab/grid.hpp"
#include "lab/rng.hpp"
#include "lab/sde.hpp"
#include "lab/spectral.hpp"

namespace lab {

/// sum_j w_j phi_i(x_j) for the first n modes (all modes when n = 0).
std::vector<double> mode_integrals(const double* points, const double* weights, std::size_t count,
                                   const SpectralBasis& basis, std::size_t n = 0);

/// psi_i(T) = T^{-1/2} int_0^T phi_i(X_t) dt by the trapezoid rule on the
/// stored grid, T the trajectory horizon.
std::vector<double> psi_all(const Trajectory& traj, const SpectralBasis& basis, std::size_t n = 0);
double psi(const Trajectory& traj, const SpectralBasis& basis, std::size_t i);

enum class ShiftMode { bar, tilde };

struct SpectralStatistics {
    std::vector<double> psi;
    double horizon = 0.0;
    BoundedValue xi;
    std::optional<double> eps;
    std::optional<double> xi_eps;
    std::optional<double> r;
    std::optional<double> xi_bar;
    std::optional<double> xi_tilde;
};

/// sum_i psi_i^2 / lambda_i over the given coefficients.
double xi_from_psi(const std::vector<double>& psi, const SpectralBasis& basis);
/// Tail estimate 2 max_{i>N/2}(lambda_i psi_i^2) * sum_{i>N} lambda_i^{-2};
/// +inf when that series diverges (d >= 4).
double xi_tail_bound(const std::vector<double>& psi, const SpectralBasis& basis);
SpectralStatistics xi(const Trajectory& traj, const SpectralBasis& basis);

/// sum_i e^{-2 eps lambda_i} psi_i^2 / lambda_i.
double xi_smoothed(const std::vector<double>& psi, const SpectralBasis& basis, double eps);
double xi_smoothed(const Trajectory& traj, const SpectralBasis& basis, double eps);

/// bar: (T-r)^{-1/2} int_r^T; tilde: T^{-1/2} int_0^T phi(X_{r+t}). T = 0 uses
/// the trajectory horizon (bar) or horizon - r (tilde).
std::vector<double> psi_shifted(const Trajectory& traj, const SpectralBasis& basis, double r, ShiftMode mode,
                                double T = 0.0);
double xi_shifted(const Trajectory& traj, const SpectralBasis& basis, double r, ShiftMode mode, double T = 0.0);

/// f_{T,eps} = 1 + T^{-1/2} sum_i e^{-eps lambda_i} psi_i phi_i on grid cell
/// centers (density with respect to mu).
struct SmoothedDensity {
    Grid grid;
    std::vector<double> f;     // raw spectral values
    std::vector<double> cell;  // mu-mass of each cell
    double quadrature_mass = 0.0;
    double floored_mass = 0.0;  // mass added by flooring at 1e-12

    /// Weights max(f, 1e-12) * cell, normalized.
    GridMeasure measure() const;
};
SmoothedDensity smoothed_density(const std::vector<double>& psi, double T, const SpectralBasis& basis, double eps,
                                 const Grid& grid);

enum class DimensionRule { below_two, two, above_two };

struct DeviationParams {
    double sigma_sq = 0.0;
    double frak_m = 0.0;
    DimensionRule rule = DimensionRule::below_two;
    double p_star = 0.0;  // minimizing exponent for the d = 2 rule
};

/// sigma^2(g) and the scale m(g) for g = sum c_i phi_i. `d` selects the rule;
/// L^p norms use midpoint quadrature on `quad_m` cells per axis (0: automatic).
DeviationParams deviation_params(const SpectralBasis& basis, const std::vector<double>& coeffs, double d,
                                 std::size_t quad_m = 0);

/// V(g) = int_0^inf mu(g P_t g) dt for g = sum c_i phi_i with Z = 0 or a
/// constant torus drift (closed form per Fourier mode).
double long_run_variance(const SpectralBasis& basis, const std::vector<double>& coeffs, const DriftSpec& drift);
/// V(Z phi_i) for a constant torus drift.
double long_run_variance_of_drift_derivative(const SpectralBasis& basis, std::size_t i, const DriftSpec& drift);

/// One draw of sum_{i<=N} 2 xi_i^2 / lambda_i^2 plus the deterministic tail
/// mean 2 sum_{i>N} lambda_i^{-2}.
double sample_xi_infinity(const SpectralBasis& basis, RngStream& rng);
/// E Xi(infinity) computed from the basis and its tail bound.
double xi_infinity_mean(const SpectralBasis& basis);

/// M(f) = (f - 1) / log f for f > 0 with M(1) = 1, and 0 for f <= 0.
double log_mean(double f);

}  // namespace lab
