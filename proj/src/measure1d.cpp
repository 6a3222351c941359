#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lab/error.hpp"
#include "lab/wasserstein.hpp"

namespace lab {

namespace {

void check_p(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("transport exponent p must be >= 1");
}

// Quantile function as affine pieces in u.
struct QPiece {
    double u0, u1, x0, x1;
};

std::vector<QPiece> quantile_pieces(const Measure1D& m, double lift = 0.0) {
    std::vector<QPiece> q;
    q.reserve(m.pieces().size());
    double u = 0.0;
    for (const auto& pc : m.pieces()) {
        q.push_back({u, u + pc.mass, pc.lo + lift, pc.hi + lift});
        u += pc.mass;
    }
    if (!q.empty()) q.back().u1 = 1.0;
    return q;
}

double x_at(const QPiece& q, double u) {
    if (q.x0 == q.x1 || q.u1 <= q.u0) return q.x0;
    return q.x0 + (q.x1 - q.x0) * (u - q.u0) / (q.u1 - q.u0);
}

double antideriv(double y, double p) { return std::copysign(std::pow(std::abs(y), p + 1) / (p + 1), y); }

// int over a length-L interval of |D|^p with D affine from d0 to d1.
double affine_power_integral(double d0, double d1, double L, double p) {
    if (L <= 0) return 0.0;
    if (d0 == d1) return L * std::pow(std::abs(d0), p);
    const double scale = std::max(std::abs(d0), std::abs(d1));
    if (std::abs(d1 - d0) < 1e-4 * scale && (d0 > 0) == (d1 > 0)) {
        // nearly constant: 3-point Gauss is exact to rounding here
        const double c = 0.5 * (d0 + d1), h = 0.5 * (d1 - d0), g = std::sqrt(0.6);
        return L * (5.0 * std::pow(std::abs(c - g * h), p) + 8.0 * std::pow(std::abs(c), p) +
                    5.0 * std::pow(std::abs(c + g * h), p)) /
               18.0;
    }
    return L * (antideriv(d1, p) - antideriv(d0, p)) / (d1 - d0);
}

// int_0^1 |Qa(u) - Qb(u)|^p du for piece lists both covering [0,1].
double quantile_cost(const std::vector<QPiece>& a, const std::vector<QPiece>& b, double p) {
    std::size_t i = 0, j = 0;
    double u = 0.0, acc = 0.0;
    while (i < a.size() && j < b.size()) {
        const double u1 = std::min(a[i].u1, b[j].u1);
        if (u1 > u) {
            const double d0 = x_at(a[i], u) - x_at(b[j], u);
            const double d1 = x_at(a[i], u1) - x_at(b[j], u1);
            acc += affine_power_integral(d0, d1, u1 - u, p);
            u = u1;
        }
        if (a[i].u1 <= u) ++i;
        if (j < b.size() && b[j].u1 <= u) ++j;
    }
    return acc;
}

// Lift of Qb to v in [theta, theta + 1], re-parameterized to u = v - theta.
void lifted_window(const std::vector<QPiece>& b, double theta, std::vector<QPiece>& out) {
    out.clear();
    const double k0 = std::floor(theta);
    for (int s = 0; s < 2; ++s) {
        const double k = k0 + s;
        for (const auto& q : b) {
            const double v0 = q.u0 + k, v1 = q.u1 + k;
            const double lo = std::max(v0, theta), hi = std::min(v1, theta + 1.0);
            if (hi <= lo) continue;
            QPiece shifted{v0, v1, q.x0 + k, q.x1 + k};
            out.push_back({lo - theta, hi - theta, x_at(shifted, lo), x_at(shifted, hi)});
        }
    }
    if (!out.empty()) {
        out.front().u0 = 0.0;
        out.back().u1 = 1.0;
    }
}

template <class F>
double golden_min(F&& f, double lo, double hi, double tol, double* argmin = nullptr) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    double best = std::min(f1, f2);
    while (hi - lo > tol) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
        best = std::min({best, f1, f2});
    }
    if (argmin) *argmin = 0.5 * (lo + hi);
    return std::min(best, f(0.5 * (lo + hi)));
}

// Kinks of the circle objective sit at theta = U_b - U_a + k for quantile
// breakpoints U_a, U_b. Returns those within tol of theta.
std::vector<double> kinks_near(const std::vector<QPiece>& a, const std::vector<QPiece>& b, double theta, double tol) {
    std::vector<double> ub{0.0};
    for (const auto& q : b) ub.push_back(q.u1);
    std::vector<double> out;
    const auto probe = [&](double ua) {
        for (double k : {-1.0, 0.0, 1.0}) {
            const double v = ua + theta - k;
            auto it = std::lower_bound(ub.begin(), ub.end(), v - tol);
            for (; it != ub.end() && *it <= v + tol; ++it) out.push_back(*it + k - ua);
        }
    };
    probe(0.0);
    for (const auto& q : a) probe(q.u1);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Measure1D on_circle(const Measure1D& m) {
    bool wrap = false;
    for (const auto& pc : m.pieces()) wrap |= pc.lo >= 1.0;
    if (!wrap) return m;
    auto pieces = m.pieces();
    for (auto& pc : pieces)
        if (pc.lo >= 1.0) pc.lo = pc.hi = 0.0;
    return Measure1D::from_pieces(std::move(pieces));
}

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> x, w;
    explicit GaussRule(int n) : x(std::size_t(n)), w(std::size_t(n)) {
        const double pi = std::acos(-1.0);
        for (int i = 0; i < n; ++i) {
            double z = std::cos(pi * (i + 0.75) / (n + 0.5)), dp = 0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1, p1 = 0;
                for (int k = 1; k <= n; ++k) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p2) / k;
                }
                dp = n * (z * p0 - p1) / (z * z - 1);
                const double dz = p0 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            x[std::size_t(i)] = z;
            w[std::size_t(i)] = 2 / ((1 - z * z) * dp * dp);
        }
    }
    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double s = 0;
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(c + h * x[i]);
        return s * h;
    }
};

const GaussRule& gauss16() {
    static const GaussRule r(16);
    return r;
}

}  // namespace

Measure1D Measure1D::from_pieces(std::vector<Piece> pieces) {
    double total = 0.0;
    for (const auto& pc : pieces) {
        if (!(pc.mass >= 0) || !std::isfinite(pc.mass)) throw InputError("1D measure mass must be finite and nonnegative");
        if (!(pc.lo >= 0.0 && pc.hi <= 1.0 && pc.lo <= pc.hi))
            throw InputError("1D measure support must lie in [0,1]");
        total += pc.mass;
    }
    if (!(total > 0)) throw InputError("1D measure has no mass");
    std::erase_if(pieces, [](const Piece& pc) { return pc.mass == 0.0; });
    std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) {
        return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
    });
    Measure1D m;
    for (auto pc : pieces) {
        pc.mass /= total;
        if (!m.pieces_.empty()) {
            auto& last = m.pieces_.back();
            if (pc.lo == last.lo && pc.hi == last.hi) {
                last.mass += pc.mass;
                continue;
            }
            if (pc.lo < last.hi) throw InputError("1D measure pieces overlap");
        }
        m.pieces_.push_back(pc);
    }
    return m;
}

Measure1D Measure1D::atoms(const double* x, const double* w, std::size_t n) {
    std::vector<Piece> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = {x[i], x[i], w ? w[i] : 1.0};
    return from_pieces(std::move(p));
}

Measure1D Measure1D::atoms(const std::vector<double>& x, const std::vector<double>& w) {
    if (!w.empty() && w.size() != x.size()) throw InputError("atom positions and weights differ in length");
    return atoms(x.data(), w.empty() ? nullptr : w.data(), x.size());
}

Measure1D Measure1D::dirac(double x) { return atoms(&x, nullptr, 1); }

Measure1D Measure1D::uniform(double lo, double hi) {
    if (!(hi > lo)) throw InputError("uniform segment needs lo < hi");
    return from_pieces({{lo, hi, 1.0}});
}

Measure1D Measure1D::cells(const std::vector<double>& w) {
    const double m = double(w.size());
    std::vector<Piece> p(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) p[k] = {double(k) / m, double(k + 1) / m, w[k]};
    return from_pieces(std::move(p));
}

Measure1D Measure1D::empirical(const Trajectory& traj) {
    if (traj.dim != 1) throw InputError("one-dimensional trajectory required");
    const auto w = trapezoid_weights(traj.count(), traj.dt());
    return atoms(traj.points.data(), w.data(), traj.count());
}

double w_p_interval(const Measure1D& a, const Measure1D& b, double p) {
    check_p(p);
    return std::pow(quantile_cost(quantile_pieces(a), quantile_pieces(b), p), 1.0 / p);
}

double w_p_circle(const Measure1D& a_in, const Measure1D& b_in, double p) {
    check_p(p);
    const auto a = on_circle(a_in), b = on_circle(b_in);
    const auto qa = quantile_pieces(a), qb = quantile_pieces(b);
    std::vector<QPiece> win;
    const auto J = [&](double theta) {
        lifted_window(qb, theta, win);
        return quantile_cost(qa, win, p);
    };
    double theta = 0.0;
    double best = golden_min(J, -1.0, 1.0, 1e-13, &theta);
    const auto cand = kinks_near(qa, qb, theta, 1e-9);
    if (cand.size() <= 64)
        for (double t : cand) best = std::min(best, J(t));
    return std::pow(std::max(best, 0.0), 1.0 / p);
}

double w1_circle_cdf(const Measure1D& a_in, const Measure1D& b_in) {
    const auto a = on_circle(a_in), b = on_circle(b_in);
    // D = F_a - F_b is affine between breakpoints; collect (x0, x1, D(x0+), D(x1-)).
    std::vector<double> xs{0.0, 1.0};
    for (const auto* m : {&a, &b})
        for (const auto& pc : m->pieces()) {
            xs.push_back(pc.lo);
            xs.push_back(pc.hi);
        }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    const auto F = [](const Measure1D& m, double x) {  // right-continuous CDF
        double s = 0;
        for (const auto& pc : m.pieces()) {
            if (pc.hi <= x && (pc.lo < x || pc.lo == pc.hi)) s += pc.mass;
            else if (pc.lo < x) s += pc.mass * (x - pc.lo) / (pc.hi - pc.lo);
        }
        return s;
    };
    struct Seg {
        double len, d0, d1;
    };
    std::vector<Seg> segs;
    bool all_flat = true;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        const double x0 = xs[k], x1 = xs[k + 1];
        const double mid = 0.5 * (x0 + x1), h = 0.5 * (x1 - x0);
        // values at the open ends via the midpoint and slope
        const double dm = F(a, mid) - F(b, mid);
        const double dq = F(a, mid + 0.5 * h) - F(b, mid + 0.5 * h);
        const double slope = (dq - dm) / (0.5 * h);
        segs.push_back({x1 - x0, dm - slope * h, dm + slope * h});
        all_flat &= std::abs(slope * h) < 1e-15;
    }
    const auto cost = [&](double t) {
        double s = 0;
        for (const auto& sg : segs) s += affine_power_integral(sg.d0 - t, sg.d1 - t, sg.len, 1.0);
        return s;
    };
    if (all_flat) {
        // weighted median of the step values
        std::vector<std::pair<double, double>> v;
        for (const auto& sg : segs) v.push_back({0.5 * (sg.d0 + sg.d1), sg.len});
        std::sort(v.begin(), v.end());
        double acc = 0;
        for (const auto& [d, len] : v) {
            acc += len;
            if (acc >= 0.5) return cost(d);
        }
        return cost(v.back().first);
    }
    return golden_min(cost, -1.0, 1.0, 1e-13);
}

double w_p_to_invariant(const ModelSpace& space, const Measure1D& a, double p) {
    check_p(p);
    if (space.dim() != 1) throw InputError("one-dimensional space required");
    if (space.is_torus()) {
        // lift of the uniform quantile is the identity: J(theta) = int |Qa(u) - u - theta|^p
        const auto qa = quantile_pieces(on_circle(a));
        const auto J = [&](double theta) {
            double s = 0;
            for (const auto& q : qa)
                s += affine_power_integral(q.x0 - q.u0 - theta, q.x1 - q.u1 - theta, q.u1 - q.u0, p);
            return s;
        };
        double best;
        if (p == 2.0) {
            double mean = 0;
            for (const auto& q : qa) mean += (q.u1 - q.u0) * 0.5 * ((q.x0 - q.u0) + (q.x1 - q.u1));
            best = J(mean);
        } else if (p == 1.0) {
            // theta* is a median of D(u) = Qa(u) - u; each piece adds a uniform
            // law on its D-range, so one sweep over sorted endpoints finds it.
            std::vector<std::pair<double, double>> ev;  // (position, density change)
            std::vector<std::pair<double, double>> atoms;
            ev.reserve(2 * qa.size());
            for (const auto& q : qa) {
                const double len = q.u1 - q.u0;
                if (len <= 0) continue;
                const double lo = std::min(q.x0 - q.u0, q.x1 - q.u1), hi = std::max(q.x0 - q.u0, q.x1 - q.u1);
                if (hi - lo > 1e-12) {
                    ev.push_back({lo, len / (hi - lo)});
                    ev.push_back({hi, -len / (hi - lo)});
                } else {
                    atoms.push_back({lo, len});
                }
            }
            for (const auto& at : atoms) ev.push_back({at.first, 0.0});
            std::sort(ev.begin(), ev.end());
            std::sort(atoms.begin(), atoms.end());
            double cdf = 0, dens = 0, prev = ev.empty() ? 0 : ev.front().first, theta = prev;
            std::size_t ai = 0;
            for (const auto& [x, dd] : ev) {
                const double next = cdf + dens * (x - prev);
                if (next >= 0.5) {
                    theta = dens > 0 ? prev + (0.5 - cdf) / dens : prev;
                    break;
                }
                cdf = next;
                prev = x;
                theta = x;
                while (ai < atoms.size() && atoms[ai].first <= x) cdf += atoms[ai++].second;
                if (cdf >= 0.5) break;
                dens += dd;
            }
            best = J(theta);
        } else {
            best = golden_min(J, -1.0, 1.0, 1e-13);
        }
        return std::pow(std::max(best, 0.0), 1.0 / p);
    }
    if (space.uniform()) return w_p_interval(a, Measure1D::uniform(), p);
    const auto& gl = gauss16();
    double acc = 0;
    for (const auto& q : quantile_pieces(a)) {
        if (q.u1 <= q.u0) continue;
        if (q.x0 == q.x1) {
            // int_{Q(u0)}^{Q(u1)} |x - y|^p rho(y) dy, split at x
            const double y0 = space.quantile(q.u0), y1 = space.quantile(q.u1), x = q.x0;
            const auto f = [&](double y) { return std::pow(std::abs(x - y), p) * space.invariant_density(y); };
            if (x > y0 && x < y1) acc += gl.integrate(f, y0, x) + gl.integrate(f, x, y1);
            else acc += gl.integrate(f, y0, y1);
        } else {
            const int sub = 16;
            const double du = (q.u1 - q.u0) / sub;
            for (int s = 0; s < sub; ++s)
                acc += gl.integrate([&](double u) { return std::pow(std::abs(x_at(q, u) - space.quantile(u)), p); },
                                    q.u0 + s * du, q.u0 + (s + 1) * du);
        }
    }
    return std::pow(acc, 1.0 / p);
}

}  // namespace lab
