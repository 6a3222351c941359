#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "lab/model_space.hpp"

namespace lab {

inline constexpr std::size_t kDefaultModeCap = 200000;

/// Default truncation for a space: 512 (d=1), 2048 (d=2), 4096 (d>=3).
std::size_t default_truncation(int d);

/// A value paired with a bound on the error made by truncating a series.
struct BoundedValue {
    double value = 0.0;
    double tail_bound = 0.0;
};

/// The first N nonzero eigenpairs of -L-hat (L-hat = Delta + grad V) in
/// non-decreasing eigenvalue order, orthonormal in L^2(mu).
class SpectralBasis {
  public:
    /// fd_nodes: grid size for the interval-with-potential eigensolver
    /// (0 selects max(4096, 16 N)).
    static SpectralBasis build(const ModelSpace& space, std::size_t N,
                               std::size_t cap = kDefaultModeCap, std::size_t fd_nodes = 0);

    const ModelSpace& space() const { return *space_; }
    std::size_t size() const { return lambda_.size(); }
    /// 0-based: eigenvalue(0) is lambda_1.
    double eigenvalue(std::size_t i) const { return lambda_[i]; }
    const std::vector<double>& eigenvalues() const { return lambda_; }
    bool tabulated() const { return !table_.empty(); }

    /// Torus modes: integer frequency vector and parity.
    const int* frequency(std::size_t i) const { return &freq_[i * std::size_t(dim_)]; }
    bool is_sine(std::size_t i) const { return sine_[i] != 0; }
    std::string mode_descriptor(std::size_t i) const;

    double eval(std::size_t i, const double* x) const;
    void gradient(std::size_t i, const double* x, double* g) const;
    /// out[i] = phi_i(x) for the first n modes (n = size() when 0).
    void eval_all(const double* x, double* out, std::size_t n = 0) const;
    /// Gradients of the first n modes; out is n x d row-major.
    void gradient_all(const double* x, double* out, std::size_t n = 0) const;

    /// Largest |phi_i|^2 over the space, used in truncation bounds.
    double sup_sq() const { return sup_sq_; }

    /// 1 + sum_i e^{-lambda_i eps} phi_i(x) phi_i(y), with a bound on the
    /// neglected tail.
    BoundedValue heat_kernel(double eps, const double* x, const double* y) const;

    /// Upper bound on sum_{i>N} lambda_i^{-power}; requires power > d/2.
    double tail_sum(double power) const;
    /// Upper bound on sum_{i>N} e^{-eps lambda_i}.
    double tail_exp(double eps) const;

  private:
    SpectralBasis() = default;
    double eval_table(std::size_t i, double x) const;

    std::shared_ptr<const ModelSpace> space_;
    int dim_ = 1;
    std::vector<double> lambda_;
    std::vector<int> freq_;
    std::vector<unsigned char> sine_;
    int max_freq_ = 0;
    double sup_sq_ = 2.0;
    double lambda_scale_ = 1.0;  // interval with potential: lower Weyl factor e^{-osc V}
    // tabulated modes (interval with potential): size() x grid_
    std::size_t grid_ = 0;
    std::vector<double> table_;
};

}  // namespace lab
