#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lab/rng.hpp"

namespace lab {

enum class SpaceKind { torus, interval };

enum class PotentialKind { zero, cosine, quadratic };

/// V on [0,1]: zero, a*cos(2 pi x) or a*x(1-x).
struct PotentialSpec {
    PotentialKind kind = PotentialKind::zero;
    double a = 0.0;

    double value(double x) const;
    double derivative(double x) const;
    bool is_zero() const { return kind == PotentialKind::zero || a == 0.0; }
    std::string describe() const;
};

/// Constant divergence-free drift z on the torus; empty means Z = 0.
struct DriftSpec {
    std::vector<double> z;

    bool is_zero() const;
};

/// Flat torus [0,1)^d or the reflecting interval [0,1] with invariant
/// density proportional to e^V. Immutable after construction.
class ModelSpace {
  public:
    static ModelSpace torus(int d, DriftSpec drift = {});
    static ModelSpace interval(PotentialSpec potential = {});

    SpaceKind kind() const { return kind_; }
    bool is_torus() const { return kind_ == SpaceKind::torus; }
    int dim() const { return dim_; }
    const PotentialSpec& potential() const { return potential_; }
    const DriftSpec& drift() const { return drift_; }
    bool uniform() const { return potential_.is_zero(); }
    std::string describe() const;

    double distance(std::span<const double> x, std::span<const double> y) const;
    /// Squared distance on raw pointers; no validation.
    double distance_sq(const double* x, const double* y) const;

    std::vector<double> canonicalize(std::span<const double> x) const;
    void canonicalize_inplace(double* x) const;

    double invariant_density(std::span<const double> x) const;
    double invariant_density(double x) const;
    /// Integral of e^V over [0,1].
    double normalizer() const { return norm_; }
    double invariant_mean() const { return mean_; }

    /// b(x) = grad V(x) + Z(x).
    void drift_at(const double* x, double* b) const;
    bool has_drift() const;

    void sample_invariant(RngStream& rng, double* x) const;
    /// Invariant CDF and quantile (interval; identity for the uniform case).
    double cdf(double x) const;
    double quantile(double u) const;

  private:
    ModelSpace() = default;
    void build_tables();
    void check_point(std::span<const double> x) const;

    SpaceKind kind_ = SpaceKind::torus;
    int dim_ = 1;
    PotentialSpec potential_;
    DriftSpec drift_;
    double norm_ = 1.0;
    double mean_ = 0.5;
    // quantile table (interval with potential)
    std::vector<double> qx_, qf_, qslope_;
};

/// Composite Simpson on [0,1] with n (even) intervals.
template <class F>
double simpson01(F&& f, std::size_t n) {
    const double h = 1.0 / double(n);
    double s = f(0.0) + f(1.0);
    for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(double(i) * h);
    return s * h / 3.0;
}

}  // namespace lab
