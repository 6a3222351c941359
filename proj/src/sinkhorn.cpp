#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lab/error.hpp"
#include "lab/simd/kernels.hpp"
#include "lab/wasserstein.hpp"

namespace lab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-axis ground cost between cell centers: periodic wrap or plain distance.
std::vector<double> axis_sq_cost(const Grid& g) {
    const std::size_t m = g.m;
    std::vector<double> c(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double d = double(i > j ? i - j : j - i) / double(m);
            if (g.periodic) d = std::min(d, 1.0 - d);
            c[i * m + j] = d * d;
        }
    return c;
}

// L_i = log sum_j exp(in_j - C_ij / eps) through one pass per axis (p = 2)
// or one dense pass.
class KernelOp {
  public:
    KernelOp(const Grid& g, double p, bool separable) : g_(g), p_(p), separable_(separable), n_(g.size()) {
        if (separable_) {
            c1_ = axis_sq_cost(g);
        } else {
            dense_.resize(n_ * n_);
            for (std::size_t i = 0; i < n_; ++i)
                for (std::size_t j = 0; j < n_; ++j) dense_[i * n_ + j] = std::pow(g.distance_sq(i, j), 0.5 * p);
        }
        tmp_.resize(n_);
    }

    void set_eps(double eps) {
        eps_ = eps;
        scaled_ = separable_ ? c1_ : dense_;
        for (double& v : scaled_) v /= eps;
    }

    void apply(const std::vector<double>& in, std::vector<double>& out) {
        const auto& k = simd::kernels();
        if (!separable_) {
            out.resize(n_);
            k.lse_axis(in.data(), out.data(), 1, n_, 1, scaled_.data());
            return;
        }
        apply_axes(in, out, nullptr, 0);
    }

    // Sum_ij exp(alpha_i + beta_j - C_ij / eps) C_ij.
    double transport_cost(const std::vector<double>& alpha, const std::vector<double>& beta) {
        const auto& k = simd::kernels();
        std::vector<double> out(n_);
        double total = 0;
        if (!separable_) {
            std::vector<double> w(n_ * n_);
            for (std::size_t i = 0; i < n_ * n_; ++i) {
                const double c = dense_[i];
                w[i] = c > 0 ? scaled_[i] - std::log(c) : std::numeric_limits<double>::infinity();
            }
            k.lse_axis(beta.data(), out.data(), 1, n_, 1, w.data());
            for (std::size_t i = 0; i < n_; ++i)
                if (alpha[i] != kNegInf && out[i] != kNegInf) total += std::exp(alpha[i] + out[i]);
            return total;
        }
        const std::size_t m = g_.m;
        std::vector<double> weighted(m * m);
        for (std::size_t i = 0; i < m * m; ++i)
            weighted[i] = c1_[i] > 0 ? scaled_[i] - std::log(c1_[i]) : std::numeric_limits<double>::infinity();
        for (int axis = 0; axis < g_.dim; ++axis) {
            apply_axes(beta, out, weighted.data(), axis);
            for (std::size_t i = 0; i < n_; ++i)
                if (alpha[i] != kNegInf && out[i] != kNegInf) total += std::exp(alpha[i] + out[i]);
        }
        return total;
    }

  private:
    void apply_axes(const std::vector<double>& in, std::vector<double>& out, const double* special, int special_axis) {
        const auto& k = simd::kernels();
        const std::size_t m = g_.m;
        out.resize(n_);
        const std::vector<double>* src = &in;
        std::size_t outer = 1, inner = n_ / m;
        std::vector<double>* bufs[2] = {&tmp_, &out};
        // axis 0 is the slowest index; choose buffers so the last pass lands in out
        int which = g_.dim % 2 == 0 ? 0 : 1;
        for (int axis = 0; axis < g_.dim; ++axis) {
            std::vector<double>* dst = bufs[which];
            const double* c = special && axis == special_axis ? special : scaled_.data();
            k.lse_axis(src->data(), dst->data(), outer, m, inner, c);
            src = dst;
            which ^= 1;
            outer *= m;
            inner /= m;
        }
    }

    Grid g_;
    double p_, eps_ = 1.0;
    bool separable_;
    std::size_t n_;
    std::vector<double> c1_, dense_, scaled_, tmp_;
};

double log_or_ninf(double v) { return v > 0 ? std::log(v) : kNegInf; }

}  // namespace

double median_cost(const Grid& g, double p) {
    // costs depend on per-axis offsets only; weight each offset vector by its pair count
    const std::size_t m = g.m;
    std::vector<double> off_d, off_w;
    if (g.periodic) {
        for (std::size_t o = 0; o < m; ++o) {
            const double d = std::min(double(o), double(m - o)) / double(m);
            off_d.push_back(d * d);
            off_w.push_back(double(m));
        }
    } else {
        for (std::size_t o = 0; o < m; ++o) {
            const double d = double(o) / double(m);
            off_d.push_back(d * d);
            off_w.push_back(o == 0 ? double(m) : 2.0 * double(m - o));
        }
    }
    std::vector<std::pair<double, double>> vals{{0.0, 1.0}};
    for (int k = 0; k < g.dim; ++k) {
        std::vector<std::pair<double, double>> next;
        next.reserve(vals.size() * m);
        for (const auto& [c, w] : vals)
            for (std::size_t o = 0; o < m; ++o) next.push_back({c + off_d[o], w * off_w[o]});
        vals.swap(next);
    }
    std::sort(vals.begin(), vals.end());
    double total = 0;
    for (const auto& v : vals) total += v.second;
    double acc = 0;
    for (const auto& [c, w] : vals) {
        acc += w;
        if (acc >= 0.5 * total) return std::pow(c, 0.5 * p);
    }
    return std::pow(vals.back().first, 0.5 * p);
}

TransportResult w_p_grid_sinkhorn(const GridMeasure& a, const GridMeasure& b, double p, const SinkhornOptions& opt) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("transport exponent p must be >= 1");
    if (!(a.grid == b.grid)) throw InputError("measures live on different grids");
    a.validate(1e-9);
    b.validate(1e-9);
    if (opt.stages < 1) throw InputError("sinkhorn needs at least one stage");
    const Grid& g = a.grid;
    const std::size_t n = g.size();
    const bool separable = opt.separable && p == 2.0;
    if (!separable && n > kExactCellCap) throw ResourceError("dense entropic solve limited to 4096 cells");
    const double eps_final = opt.eps_final > 0 ? opt.eps_final : 1e-4 * median_cost(g, p);

    KernelOp K(g, p, separable);
    std::vector<double> la(n), lb(n), f(n, 0.0), gpot(n, 0.0), alpha(n), beta(n), L(n);
    for (std::size_t i = 0; i < n; ++i) {
        la[i] = log_or_ninf(a.w[i]);
        lb[i] = log_or_ninf(b.w[i]);
    }

    TransportResult res;
    double err = 1.0;
    for (int s = 0; s < opt.stages; ++s) {
        const double eps = eps_final * std::ldexp(1.0, opt.stages - 1 - s);
        const double tol = s + 1 == opt.stages ? opt.tol : std::max(opt.tol, 1e-4);
        K.set_eps(eps);
        for (std::size_t i = 0; i < n; ++i) {
            alpha[i] = a.w[i] > 0 ? f[i] / eps : kNegInf;
            beta[i] = b.w[i] > 0 ? gpot[i] / eps : kNegInf;
        }
        for (std::size_t it = 0;; ++it) {
            K.apply(beta, L);
            for (std::size_t i = 0; i < n; ++i) alpha[i] = a.w[i] > 0 ? la[i] - L[i] : kNegInf;
            K.apply(alpha, L);
            for (std::size_t j = 0; j < n; ++j) beta[j] = b.w[j] > 0 ? lb[j] - L[j] : kNegInf;
            ++res.iterations;
            if (it % 10 == 9 || it == 0) {
                // columns are exact after the beta update; measure the rows
                K.apply(beta, L);
                err = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double r = a.w[i] > 0 ? std::exp(alpha[i] + L[i]) : 0.0;
                    err += std::abs(r - a.w[i]);
                }
                if (!std::isfinite(err)) {
                    std::ostringstream os;
                    os << "sinkhorn produced a non-finite marginal at eps=" << eps;
                    throw NumericalError(os.str());
                }
                if (err < tol) break;
            }
            if (res.iterations >= opt.max_iter) {
                std::ostringstream os;
                os << "sinkhorn did not converge: stage " << s + 1 << "/" << opt.stages << ", eps=" << eps
                   << ", marginal L1=" << err << " after " << res.iterations << " iterations";
                throw NumericalError(os.str());
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            f[i] = a.w[i] > 0 ? alpha[i] * eps : 0.0;
            gpot[i] = b.w[i] > 0 ? beta[i] * eps : 0.0;
        }
    }
    res.marginal_violation = err;
    res.cost = K.transport_cost(alpha, beta);
    res.distance = std::pow(std::max(res.cost, 0.0), 1.0 / p);
    return res;
}

}  // namespace lab
