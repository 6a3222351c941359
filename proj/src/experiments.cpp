#include "lab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "lab/error.hpp"
#include "lab/parallel.hpp"
#include "lab/rng.hpp"

namespace lab {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_T(double T) {
    if (!(T >= 2)) throw InputError("rates are stated for T >= 2");
}

std::string stat_name(const char* base, double p) { return std::string(base) + "_p" + format_double(p); }

// Binned or exact distance from one path to the invariant law.
class DistanceEngine {
  public:
    DistanceEngine(const ModelSpace& space, const ExperimentConfig& cfg) : space_(space), cfg_(cfg) {
        if (space.dim() == 1) return;
        grid_ = Grid::for_space(space, cfg.resolution());
        target_ = GridMeasure::invariant(space, grid_);
        use_exact_ = cfg.solver == SolverChoice::exact ||
                     (cfg.solver == SolverChoice::automatic && grid_.size() <= kExactCellCap);
        if (use_exact_ && grid_.size() > kExactCellCap)
            throw ConfigError("exact solver requested on a grid above " + std::to_string(kExactCellCap) + " cells");
    }

    const Grid& grid() const { return grid_; }
    bool exact() const { return use_exact_; }

    double sinkhorn_eps(double p) {
        for (const auto& [pp, e] : eps_)
            if (pp == p) return e;
        const double e = cfg_.sinkhorn_eps_factor * median_cost(grid_, p);
        eps_.emplace_back(p, e);
        return e;
    }

    double grid_distance(const GridMeasure& a, double p) {
        if (use_exact_) return w_p_grid_exact(a, target_, p).distance;
        SinkhornOptions opt;
        opt.eps_final = sinkhorn_eps(p);
        return w_p_grid_sinkhorn(a, target_, p, opt).distance;
    }

    double path_distance(const Trajectory& traj, double p) {
        if (space_.dim() == 1) return w_p_to_invariant(space_, Measure1D::empirical(traj), p);
        const auto w = trapezoid_weights(traj.count(), traj.dt());
        return grid_distance(GridMeasure::bin(grid_, traj.points.data(), w.data(), traj.count()), p);
    }

    // Streams the path into grid cells without storing it (d >= 2).
    GridMeasure binned_path(const SimulationParams& sp, ReplicaId id) const {
        GridMeasure gm{grid_, std::vector<double>(grid_.size(), 0.0)};
        const std::size_t last = step_count(sp.T, sp.h) / sp.stride;
        const double dt = sp.h * double(sp.stride);
        simulate_visit(space_, sp, id, [&](std::size_t j, const double* x) {
            gm.w[grid_.locate(x)] += (j == 0 || j == last) ? 0.5 * dt : dt;
        });
        gm.normalize();
        return gm;
    }

  private:
    const ModelSpace& space_;
    const ExperimentConfig& cfg_;
    Grid grid_;
    GridMeasure target_;
    bool use_exact_ = true;
    std::vector<std::pair<double, double>> eps_;
};

double power_mean(const std::vector<double>& x, const std::vector<std::size_t>& idx, double q) {
    std::vector<double> v(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) v[i] = std::pow(x[idx[i]], q);
    return pairwise_sum(v.data(), v.size()) / double(v.size());
}

std::vector<std::size_t> iota_idx(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    return idx;
}

std::uint32_t replica_index(std::size_t t_idx, std::size_t R, std::size_t r) {
    const std::size_t id = t_idx * R + r;
    if (id > 0xffffffffu) throw ConfigError("too many replicas for the 32-bit replica counter");
    return std::uint32_t(id);
}

// Streams for bootstrap resampling; disjoint per use.
enum : std::uint32_t { kStreamPerT = 0, kStreamSlope = 100000, kStreamMoment = 200000, kStreamPsi = 300000 };

}  // namespace

double gamma_rate(double d, double T) {
    check_T(T);
    if (!(d >= 1)) throw InputError("dimension must be >= 1");
    if (d < 4) return 1.0 / std::sqrt(T);
    if (d == 4) return std::sqrt(std::log(T) / T);
    return std::pow(T, -1.0 / (d - 2));
}

Range admissible_p(double d) {
    if (!(d >= 1)) throw InputError("dimension must be >= 1");
    if (d <= 2) return {};
    if (d <= 4) return {1.0, 2 * d / (d - 2), true};
    return {1.0, d * (d - 2) / 2, true};
}

Range admissible_q_limit(double d) {
    if (!(d >= 1)) throw InputError("dimension must be >= 1");
    if (d <= 3) return {};
    if (d < 4) return {1.0, (d - 2) / (2 * (d - 3)), false};
    return {1.0, 1.0, false};  // empty: no limit statement for d >= 4
}

ModelSpace ExperimentConfig::make_space() const {
    if (space == SpaceKind::interval) return ModelSpace::interval(potential);
    return ModelSpace::torus(dim, DriftSpec{drift});
}

SimulationParams ExperimentConfig::sim(double T) const {
    SimulationParams sp;
    sp.h = h;
    sp.T = T;
    sp.stride = stride;
    sp.init = init;
    sp.substeps = substeps;
    return sp;
}

std::size_t ExperimentConfig::basis_size() const { return basis_modes ? basis_modes : default_truncation(dim); }

std::size_t ExperimentConfig::resolution() const { return grid_m ? grid_m : default_grid_resolution(dim); }

void ExperimentConfig::validate() const {
    const auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (dim < 1 || dim > 16) fail("space.dim must be in [1, 16]");
    if (space == SpaceKind::interval) {
        if (dim != 1) fail("the interval space is one-dimensional");
        if (!drift.empty()) fail("a drift is only supported on the torus");
    } else {
        if (!potential.is_zero()) fail("a potential is only supported on the interval");
        if (!drift.empty() && drift.size() != std::size_t(dim)) fail("space.drift needs one entry per dimension");
    }
    for (double z : drift)
        if (!std::isfinite(z)) fail("space.drift entries must be finite");
    if (!(h > 0) || !std::isfinite(h)) fail("sde.h must be positive");
    if (stride < 1) fail("sde.stride must be >= 1");
    if (substeps < 1) fail("sde.substeps must be >= 1");
    if (init.kind != InitKind::stationary) {
        if (init.x0.size() != std::size_t(dim)) fail("sde.x0 needs one coordinate per dimension");
        if (init.kind == InitKind::smoothed && !(init.r > 0)) fail("sde.r must be positive for smoothed init");
    }
    if (T_list.empty()) fail("experiment.T must list at least one horizon");
    for (std::size_t i = 0; i < T_list.size(); ++i) {
        if (!(T_list[i] > 0) || !std::isfinite(T_list[i])) fail("experiment.T entries must be positive");
        if (i > 0 && !(T_list[i] > T_list[i - 1])) fail("experiment.T must be strictly increasing");
        if (step_count(T_list[i], h) / stride < 1) fail("experiment.T shorter than one stored step");
    }
    if (replicas < 2) fail("experiment.replicas must be >= 2 for bootstrap intervals");
    if (bootstrap < 2) fail("experiment.bootstrap must be >= 2");
    if (p_list.empty()) fail("experiment.p must list at least one exponent");
    for (double p : p_list)
        if (!(p >= 1) || !std::isfinite(p)) fail("experiment.p entries must be >= 1");
    if (!(q >= 1) || !std::isfinite(q)) fail("experiment.q must be >= 1");
    if (!(zeta > 0)) fail("experiment.zeta must be positive");
    if (!(r_shift >= 0)) fail("experiment.r_shift must be >= 0");
    if (xi_draws < 2) fail("experiment.xi_draws must be >= 2");
    if (xi_points < 1) fail("experiment.xi_points must be >= 1");
    if (!(x_lo > 0) || !(x_hi >= x_lo)) fail("experiment.x_lo/x_hi must satisfy 0 < x_lo <= x_hi");
    if (!(g_scale != 0) || !std::isfinite(g_scale)) fail("experiment.g_scale must be nonzero");
    for (double t : theta_list)
        if (!(t >= 0 && t <= 1)) fail("experiment.theta entries must lie in [0, 1]");
    if (nu != "point" && nu != "box") fail("experiment.nu must be point or box");
    if (modes.empty()) fail("experiment.modes must list at least one mode");
    const std::size_t N = basis_size();
    for (std::size_t i : modes)
        if (i >= N) fail("experiment.modes index beyond the basis truncation");
    if (!(sinkhorn_eps_factor > 0)) fail("wasserstein.sinkhorn_eps_factor must be positive");
    if (dim >= 2 && resolution() < 2) fail("wasserstein.grid_m must be >= 2");
    if (out_dir.empty()) fail("output.dir must not be empty");
}

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void Table::add(double T, long long replicate, std::string statistic, double value) {
    rows.push_back({T, replicate, std::move(statistic), value});
}

void Table::append(const Table& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }

std::string Table::csv() const {
    std::string s = "T,replicate,statistic,value\n";
    for (const auto& r : rows) {
        s += format_double(r.T);
        s += ',';
        s += std::to_string(r.replicate);
        s += ',';
        s += r.statistic;
        s += ',';
        s += format_double(r.value);
        s += '\n';
    }
    return s;
}

void Table::write(const std::string& path) const {
    const std::filesystem::path fp(path);
    if (fp.has_parent_path()) std::filesystem::create_directories(fp.parent_path());
    std::ofstream out(fp, std::ios::binary);
    if (!out) throw InputError("cannot open " + path + " for writing");
    const auto s = csv();
    out.write(s.data(), std::streamsize(s.size()));
    if (!out) throw InputError("failed writing " + path);
}

double empirical_distance(const Trajectory& traj, const ModelSpace& space, double p, const ExperimentConfig& cfg) {
    DistanceEngine eng(space, cfg);
    return eng.path_distance(traj, p);
}

RateReport run_rate_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    for (double T : cfg.T_list) check_T(T);
    const auto space = cfg.make_space();
    DistanceEngine eng(space, cfg);
    const std::size_t nT = cfg.T_list.size(), R = cfg.replicas, nP = cfg.p_list.size();
    if (!eng.exact())
        for (double p : cfg.p_list) eng.sinkhorn_eps(p);  // fill the cache before going parallel

    // w[(pi * nT + t) * R + r]
    std::vector<double> w(nP * nT * R);
    parallel_for(nT * R, resolve_threads(cfg.threads), [&](std::size_t job) {
        const std::size_t t = job / R, r = job % R;
        const auto sp = cfg.sim(cfg.T_list[t]);
        const ReplicaId id{cfg.seed, replica_index(t, R, r)};
        if (space.dim() == 1) {
            const auto traj = simulate(space, sp, id);
            const auto m = Measure1D::empirical(traj);
            for (std::size_t pi = 0; pi < nP; ++pi)
                w[(pi * nT + t) * R + r] = w_p_to_invariant(space, m, cfg.p_list[pi]);
        } else {
            const auto gm = eng.binned_path(sp, id);
            for (std::size_t pi = 0; pi < nP; ++pi) w[(pi * nT + t) * R + r] = eng.grid_distance(gm, cfg.p_list[pi]);
        }
    });

    RateReport rep;
    const double d = cfg.dim, q = cfg.q;
    std::vector<double> gam(nT);
    for (std::size_t t = 0; t < nT; ++t) gam[t] = gamma_rate(d, cfg.T_list[t]);
    for (std::size_t pi = 0; pi < nP; ++pi) {
        const double p = cfg.p_list[pi];
        RateResult res;
        res.p = p;
        res.q = q;
        std::vector<std::vector<double>> col(nT);
        for (std::size_t t = 0; t < nT; ++t) {
            col[t].assign(w.begin() + std::ptrdiff_t((pi * nT + t) * R), w.begin() + std::ptrdiff_t((pi * nT + t + 1) * R));
            for (std::size_t r = 0; r < R; ++r) rep.table.add(cfg.T_list[t], (long long)r, stat_name("W", p), col[t][r]);
        }
        for (std::size_t t = 0; t < nT; ++t) {
            RatePoint pt;
            pt.T = cfg.T_list[t];
            const auto& c = col[t];
            const std::uint32_t stream = std::uint32_t(kStreamPerT + pi * nT + t);
            pt.moment = bootstrap(R, [&](const auto& idx) { return power_mean(c, idx, q); }, cfg.bootstrap, cfg.seed,
                                  stream);
            pt.estimate = bootstrap(R, [&](const auto& idx) { return std::pow(power_mean(c, idx, q), 1.0 / q); },
                                    cfg.bootstrap, cfg.seed, stream);
            if (!(pt.estimate.estimate > 0)) throw NumericalError("rate estimate is not positive");
            res.points.push_back(pt);
            rep.table.add(pt.T, -1, stat_name("estimate", p), pt.estimate.estimate);
            rep.table.add(pt.T, -1, stat_name("estimate_lo", p), pt.estimate.lo);
            rep.table.add(pt.T, -1, stat_name("estimate_hi", p), pt.estimate.hi);
            rep.table.add(pt.T, -1, stat_name("moment", p), pt.moment.estimate);
            rep.table.add(pt.T, -1, stat_name("gamma", p), gam[t]);
        }

        double lc = 0;
        for (std::size_t t = 0; t < nT; ++t) lc += std::log(res.points[t].estimate.estimate / gam[t]);
        res.gamma_const = std::exp(lc / double(nT));
        res.min_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < nT; ++t) {
            const double ratio = res.points[t].estimate.estimate / (res.gamma_const * gam[t]);
            res.min_ratio = std::min(res.min_ratio, ratio);
            res.max_ratio = std::max(res.max_ratio, ratio);
        }

        if (nT >= 3) {
            res.fitted = true;
            std::vector<double> est(nT), mom(nT), wt(nT);
            bool weighted = true;
            for (std::size_t t = 0; t < nT; ++t) {
                est[t] = res.points[t].estimate.estimate;
                mom[t] = res.points[t].moment.estimate;
                const double sl = res.points[t].estimate.se / est[t];
                if (!(sl > 0)) weighted = false;
                wt[t] = weighted ? 1.0 / (sl * sl) : 1.0;
            }
            if (!weighted) wt.clear();
            res.fit = fit_loglog(cfg.T_list, est, wt);
            res.reference_slope = fit_loglog(cfg.T_list, gam).slope;
            // Replicas are resampled jointly across T; the T blocks are independent.
            const auto joint = [&](const std::vector<std::size_t>& idx, bool moment) {
                std::vector<double> v(nT);
                for (std::size_t t = 0; t < nT; ++t) {
                    const double m = power_mean(col[t], idx, q);
                    v[t] = moment ? m : std::pow(m, 1.0 / q);
                    if (!(v[t] > 0)) v[t] = std::numeric_limits<double>::min();
                }
                return fit_loglog(cfg.T_list, v, wt).slope;
            };
            res.slope = bootstrap(R, [&](const auto& idx) { return joint(idx, false); }, cfg.bootstrap, cfg.seed,
                                  std::uint32_t(kStreamSlope + pi));
            res.moment_slope = bootstrap(R, [&](const auto& idx) { return joint(idx, true); }, cfg.bootstrap,
                                         cfg.seed, std::uint32_t(kStreamMoment + pi));
            rep.table.add(0, -1, stat_name("slope", p), res.slope.estimate);
            rep.table.add(0, -1, stat_name("slope_lo", p), res.slope.lo);
            rep.table.add(0, -1, stat_name("slope_hi", p), res.slope.hi);
            rep.table.add(0, -1, stat_name("moment_slope", p), res.moment_slope.estimate);
            rep.table.add(0, -1, stat_name("moment_slope_lo", p), res.moment_slope.lo);
            rep.table.add(0, -1, stat_name("moment_slope_hi", p), res.moment_slope.hi);
            rep.table.add(0, -1, stat_name("reference_slope", p), res.reference_slope);

            // T E[W^2] against log T and log log T (the d = 4 regime).
            std::vector<double> tw(nT), lt(nT), llt(nT), ltw(nT);
            bool positive = true;
            for (std::size_t t = 0; t < nT; ++t) {
                const double T = cfg.T_list[t];
                tw[t] = T * power_mean(col[t], iota_idx(R), 2.0);
                lt[t] = std::log(T);
                llt[t] = std::log(lt[t]);
                ltw[t] = std::log(tw[t]);
                positive = positive && tw[t] > 0 && lt[t] > 0;
            }
            res.log_corr = pearson(tw, lt);
            if (positive) res.loglog_coef = wls(llt, ltw, {}).slope;
            rep.table.add(0, -1, stat_name("log_corr", p), res.log_corr);
            rep.table.add(0, -1, stat_name("loglog_coef", p), res.loglog_coef);
        }
        rep.table.add(0, -1, stat_name("gamma_const", p), res.gamma_const);
        rep.results.push_back(std::move(res));
    }
    return rep;
}

LimitReport run_limit_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto space = cfg.make_space();
    if (space.has_drift()) throw ConfigError("the weak-limit comparison needs Z = 0");
    if (space.dim() > 3) throw ConfigError("the limit experiment covers d <= 3");
    if (space.dim() > 2 && !(cfg.zeta < 2.0 / (space.dim() - 2)))
        throw ConfigError("experiment.zeta must be below 2/(d-2)");
    const auto basis = SpectralBasis::build(space, cfg.basis_size());
    DistanceEngine eng(space, cfg);
    const std::size_t nT = cfg.T_list.size(), R = cfg.replicas;
    const double r_shift = cfg.r_shift;
    const double dt = cfg.h * double(cfg.stride);

    LimitReport rep;
    std::vector<double> xinf(cfg.xi_draws);
    {
        RngStream rng(cfg.seed, 0, RngTag::xi_infinity);
        for (double& v : xinf) v = sample_xi_infinity(basis, rng);
    }
    rep.xi_inf_mean = mean(xinf);
    {
        std::vector<double> sq(xinf.size());
        for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = xinf[i] * xinf[i];
        rep.xi_inf_moments = {rep.xi_inf_mean, mean(sq)};
    }

    // per (t, r): T W^2, Xi, Xi-bar, Xi-tilde, Xi_eps with eps = T^-zeta
    std::vector<std::array<double, 5>> out(nT * R);
    parallel_for(nT * R, resolve_threads(cfg.threads), [&](std::size_t job) {
        const std::size_t t = job / R, r = job % R;
        const double T = cfg.T_list[t];
        const auto traj = simulate(space, cfg.sim(T + r_shift), ReplicaId{cfg.seed, replica_index(t, R, r)});
        const std::size_t jT = step_count(T, cfg.h) / cfg.stride;
        const std::size_t jr = std::size_t(std::llround(r_shift / dt));
        if (std::abs(double(jr) * dt - r_shift) > 1e-9 * std::max(1.0, r_shift) ||
            std::abs(double(jT) * dt - T) > 1e-9 * T)
            throw ConfigError("T and r must be multiples of h * stride");
        if (!(jr < jT)) throw ConfigError("experiment.r_shift must be below every T");

        Trajectory head = traj;
        head.T = T;
        head.points.resize((jT + 1) * std::size_t(traj.dim));
        const double W = eng.path_distance(head, 2.0);

        // Trapezoid sums over [0, r], [r, T] and [T, T + r] add up exactly.
        const auto seg = [&](std::size_t j0, std::size_t j1) {
            if (j1 == j0) return std::vector<double>(basis.size(), 0.0);
            std::vector<double> wts(j1 - j0 + 1, dt);
            wts.front() = wts.back() = 0.5 * dt;
            return mode_integrals(traj.point(j0), wts.data(), j1 - j0 + 1, basis);
        };
        const auto a = seg(0, jr), b = seg(jr, jT), c = seg(jT, jT + jr);
        std::vector<double> ps(basis.size()), pb(basis.size()), pt(basis.size());
        for (std::size_t i = 0; i < basis.size(); ++i) {
            ps[i] = (a[i] + b[i]) / std::sqrt(T);
            pb[i] = b[i] / std::sqrt(T - r_shift);
            pt[i] = (b[i] + c[i]) / std::sqrt(T);
        }
        out[job] = {T * W * W, xi_from_psi(ps, basis), xi_from_psi(pb, basis), xi_from_psi(pt, basis),
                    xi_smoothed(ps, basis, std::pow(T, -cfg.zeta))};
    });

    const double q = cfg.q;
    for (std::size_t t = 0; t < nT; ++t) {
        const double T = cfg.T_list[t];
        LimitPoint pt;
        pt.T = T;
        std::vector<double> tw(R), xi(R), dq(R), db(R), dtl(R), tw2(R), xe(R);
        for (std::size_t r = 0; r < R; ++r) {
            const auto& o = out[t * R + r];
            tw[r] = o[0];
            xi[r] = o[1];
            tw2[r] = o[0] * o[0];
            dq[r] = std::pow(std::abs(o[0] - o[1]), q);
            db[r] = std::abs(o[2] - o[1]);
            dtl[r] = std::abs(o[3] - o[1]);
            xe[r] = o[4];
            rep.table.add(T, (long long)r, "TW2", o[0]);
            rep.table.add(T, (long long)r, "Xi", o[1]);
            rep.table.add(T, (long long)r, "Xi_bar", o[2]);
            rep.table.add(T, (long long)r, "Xi_tilde", o[3]);
            rep.table.add(T, (long long)r, "Xi_eps", o[4]);
        }
        pt.tw2 = summarize(tw);
        pt.xi = summarize(xi);
        pt.abs_diff_q = mean(dq);
        pt.bar_diff = mean(db);
        pt.tilde_diff = mean(dtl);
        pt.ks = ks_statistic(tw, xinf);
        pt.ks_xi = ks_statistic(xi, xinf);
        pt.ratio_q1 = pt.tw2.mean / rep.xi_inf_moments[0];
        pt.ratio_q2 = mean(tw2) / rep.xi_inf_moments[1];
        rep.table.add(T, -1, "TW2_mean", pt.tw2.mean);
        rep.table.add(T, -1, "TW2_stderr", pt.tw2.stderr_);
        rep.table.add(T, -1, "Xi_mean", pt.xi.mean);
        rep.table.add(T, -1, "Xi_eps_mean", mean(xe));
        rep.table.add(T, -1, "abs_diff_q", pt.abs_diff_q);
        rep.table.add(T, -1, "bar_diff", pt.bar_diff);
        rep.table.add(T, -1, "tilde_diff", pt.tilde_diff);
        rep.table.add(T, -1, "ks", pt.ks);
        rep.table.add(T, -1, "ks_xi", pt.ks_xi);
        rep.table.add(T, -1, "ratio_q1", pt.ratio_q1);
        rep.table.add(T, -1, "ratio_q2", pt.ratio_q2);
        rep.points.push_back(pt);
    }
    rep.diff_decreasing = nT >= 2;
    for (std::size_t t = 1; t < nT; ++t)
        rep.diff_decreasing = rep.diff_decreasing && rep.points[t].abs_diff_q < rep.points[t - 1].abs_diff_q;
    rep.table.add(0, -1, "xi_inf_mean", rep.xi_inf_mean);
    rep.table.add(0, -1, "xi_inf_mean_series", xi_infinity_mean(basis));
    return rep;
}

double bernstein_bound(double xi, double T, double sigma_sq, double frak_m, double alpha) {
    if (!(xi >= 0)) throw InputError("deviation level must be >= 0");
    const double den = 2 * sigma_sq + alpha * frak_m * xi;
    if (!(den > 0)) return xi > 0 ? 0.0 : 2.0;
    return 2 * std::exp(-T * xi * xi / den);
}

double minimal_alpha(const std::vector<double>& xi, const std::vector<double>& target, double T, double sigma_sq,
                     double frak_m) {
    if (xi.size() != target.size()) throw InputError("xi grid and targets differ in length");
    double a = 0;
    for (std::size_t k = 0; k < xi.size(); ++k) {
        if (!(target[k] > 0)) continue;
        if (target[k] >= 2) return std::numeric_limits<double>::infinity();
        const double L = -std::log(target[k] / 2);
        const double need = T * xi[k] * xi[k] / L - 2 * sigma_sq;
        if (need <= 0) continue;
        if (!(frak_m * xi[k] > 0)) return std::numeric_limits<double>::infinity();
        a = std::max(a, need / (frak_m * xi[k]));
    }
    return a;
}

BernsteinReport run_bernstein_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto space = cfg.make_space();
    const auto basis = SpectralBasis::build(space, cfg.basis_size());
    const std::size_t mode = cfg.modes.front(), R = cfg.replicas;
    std::vector<double> coeffs(mode + 1, 0.0);
    coeffs[mode] = cfg.g_scale;

    BernsteinReport rep;
    rep.T = cfg.T_list.front();
    rep.params = deviation_params(basis, coeffs, double(cfg.dim));
    const double s2 = rep.params.sigma_sq, fm = rep.params.frak_m, T = rep.T;

    std::vector<double> avg(R);
    parallel_for(R, resolve_threads(cfg.threads), [&](std::size_t r) {
        const auto traj = simulate(space, cfg.sim(T), ReplicaId{cfg.seed, replica_index(0, R, r)});
        const auto w = trapezoid_weights(traj.count(), traj.dt());
        avg[r] = cfg.g_scale * mode_integrals(traj.points.data(), w.data(), traj.count(), basis, mode + 1)[mode] /
                 traj.horizon();
    });

    const std::size_t n = cfg.xi_points;
    std::vector<double> target(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double x = n == 1 ? cfg.x_lo : cfg.x_lo + (cfg.x_hi - cfg.x_lo) * double(k) / double(n - 1);
        const double xi = x * std::sqrt(s2 / T);
        std::size_t hits = 0;
        for (double a : avg) hits += std::abs(a) > xi;
        const double ph = double(hits) / double(R);
        rep.xi.push_back(xi);
        rep.empirical.push_back(ph);
        rep.se.push_back(binomial_se(ph, R));
        rep.bound_alpha10.push_back(bernstein_bound(xi, T, s2, fm, 10.0));
        target[k] = ph + 3 * rep.se.back();
        rep.table.add(T, -1, "xi_" + std::to_string(k), xi);
        rep.table.add(T, -1, "exceedance_" + std::to_string(k), ph);
        rep.table.add(T, -1, "exceedance_se_" + std::to_string(k), rep.se.back());
        rep.table.add(T, -1, "bound_alpha10_" + std::to_string(k), rep.bound_alpha10.back());
    }
    rep.dominated_at_10 = true;
    for (std::size_t k = 0; k < n; ++k) rep.dominated_at_10 = rep.dominated_at_10 && rep.bound_alpha10[k] >= target[k];
    rep.alpha_hat = minimal_alpha(rep.xi, target, T, s2, fm);
    for (std::size_t r = 0; r < R; ++r) rep.table.add(T, (long long)r, "average", avg[r]);
    rep.table.add(T, -1, "sigma_sq", s2);
    rep.table.add(T, -1, "frak_m", fm);
    rep.table.add(T, -1, "alpha_hat", rep.alpha_hat);
    return rep;
}

double gaussian_abs_moment(double V, double q) {
    if (!(V >= 0) || !(q > -1)) throw InputError("gaussian moment needs V >= 0 and q > -1");
    return std::pow(2.0, q) * std::tgamma(0.5 * (q + 1)) / std::sqrt(kPi) * std::pow(V, 0.5 * q);
}

PsiMomentReport run_psi_moment_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.init.kind != InitKind::stationary) throw ConfigError("the psi-moment experiment needs stationary init");
    const auto space = cfg.make_space();
    const auto basis = SpectralBasis::build(space, cfg.basis_size());
    const std::size_t nT = cfg.T_list.size(), R = cfg.replicas, nm = cfg.modes.size();
    std::size_t n = 0;
    for (std::size_t i : cfg.modes) n = std::max(n, i + 1);
    const double dt = cfg.h * double(cfg.stride);
    const std::size_t acf_reps = std::min<std::size_t>(R, 100);

    // Autocovariance grid per mode: spacing ~ 0.05 / lambda, lags to 10 / lambda.
    std::vector<std::size_t> sub(nm), lags(nm);
    for (std::size_t k = 0; k < nm; ++k) {
        const double lam = basis.eigenvalue(cfg.modes[k]);
        sub[k] = std::max<std::size_t>(1, std::size_t(std::ceil(0.05 / (lam * dt))));
        lags[k] = std::max<std::size_t>(2, std::size_t(std::ceil(10.0 / (lam * dt * double(sub[k])))));
    }

    PsiMomentReport rep;
    for (std::size_t t = 0; t < nT; ++t) {
        const double T = cfg.T_list[t];
        std::vector<double> ps(R * nm);
        std::vector<std::vector<std::vector<double>>> series(nm, std::vector<std::vector<double>>(acf_reps));
        parallel_for(R, resolve_threads(cfg.threads), [&](std::size_t r) {
            const auto traj = simulate(space, cfg.sim(T), ReplicaId{cfg.seed, replica_index(t, R, r)});
            const auto all = psi_all(traj, basis, n);
            for (std::size_t k = 0; k < nm; ++k) ps[r * nm + k] = all[cfg.modes[k]];
            if (r < acf_reps)
                for (std::size_t k = 0; k < nm; ++k) {
                    auto& s = series[k][r];
                    for (std::size_t j = 0; j < traj.count(); j += sub[k]) s.push_back(basis.eval(cfg.modes[k], traj.point(j)));
                }
        });
        for (std::size_t k = 0; k < nm; ++k) {
            const std::size_t i = cfg.modes[k];
            const double lam = basis.eigenvalue(i);
            std::vector<double> e(i + 1, 0.0);
            e[i] = 1.0;
            const double V = long_run_variance(basis, e, space.drift());
            PsiMomentRow row;
            row.T = T;
            row.mode = i;
            row.target = space.has_drift()
                             ? 2 / lam - 2 * long_run_variance_of_drift_derivative(basis, i, space.drift()) / (lam * lam)
                             : 2 / lam;
            std::vector<double> x(R), sq(R);
            for (std::size_t r = 0; r < R; ++r) {
                x[r] = ps[r * nm + k];
                sq[r] = x[r] * x[r];
                rep.table.add(T, (long long)r, "psi_" + std::to_string(i), x[r]);
            }
            row.second = summarize(sq);
            row.raw_gap = row.target - row.second.mean;
            row.raw_gap_se = row.second.stderr_;

            // E psi_T^2 = 2 int_0^T (1 - t/T) C(t) dt, so the gap to 2 int_0^inf C
            // is 2 int_T^inf C + (2/T) int_0^T t C(t) dt.
            const std::size_t L = std::min(lags[k], series[k][0].size() - 1);
            const auto C = autocovariance(series[k], L, 0.0);
            const double step = dt * double(sub[k]);
            double tc = 0, tail = 0;
            for (std::size_t l = 0; l <= L; ++l) {
                const double tl = double(l) * step;
                const double wl = (l == 0 || l == L) ? 0.5 * step : step;
                if (tl <= T) tc += wl * tl * C[l];
                else tail += wl * C[l];
            }
            row.acf_gap = 2 * tail + 2 * tc / T;

            const double qs[3] = {1, 2, 4};
            for (int j = 0; j < 3; ++j) {
                std::vector<double> m(R);
                for (std::size_t r = 0; r < R; ++r) m[r] = std::pow(std::abs(x[r]), qs[j]);
                row.abs_moments[j] =
                    bootstrap_mean(m, cfg.bootstrap, cfg.seed, std::uint32_t(kStreamPsi + (t * nm + k) * 3 + j));
                row.gaussian[j] = gaussian_abs_moment(V, qs[j]);
            }
            const std::string tag = "_" + std::to_string(i);
            rep.table.add(T, -1, "target" + tag, row.target);
            rep.table.add(T, -1, "second_moment" + tag, row.second.mean);
            rep.table.add(T, -1, "second_moment_stderr" + tag, row.second.stderr_);
            rep.table.add(T, -1, "raw_gap" + tag, row.raw_gap);
            rep.table.add(T, -1, "acf_gap" + tag, row.acf_gap);
            for (int j = 0; j < 3; ++j) {
                const std::string qn = format_double(qs[j]);
                rep.table.add(T, -1, "abs_moment_q" + qn + tag, row.abs_moments[j].estimate);
                rep.table.add(T, -1, "abs_moment_se_q" + qn + tag, row.abs_moments[j].se);
                rep.table.add(T, -1, "gaussian_q" + qn + tag, row.gaussian[j]);
            }
            rep.rows.push_back(row);
        }
    }
    return rep;
}

MixtureReport run_mixture_scaling_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto space = cfg.make_space();
    const double p = cfg.p_list.front(), d = cfg.dim;
    MixtureReport rep;
    rep.p = p;
    const bool point = cfg.nu == "point";

    std::vector<double> thetas = cfg.theta_list;
    std::sort(thetas.begin(), thetas.end());
    thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());

    std::vector<double> dist(thetas.size());
    if (space.dim() == 1) {
        if (!space.uniform()) throw ConfigError("the one-dimensional mixture needs the uniform invariant law");
        // Breakpoints 0, 1/4, 1/2, 1 carry both the uniform part and nu.
        for (std::size_t k = 0; k < thetas.size(); ++k) {
            const double th = thetas[k];
            std::vector<Measure1D::Piece> pc{{0.0, 0.25, 0.25 * (1 - th)},
                                             {0.25, 0.5, 0.25 * (1 - th) + (point ? 0.0 : th)},
                                             {0.5, 1.0, 0.5 * (1 - th)}};
            if (point) pc.push_back({0.5, 0.5, th});
            dist[k] = w_p_to_invariant(space, Measure1D::from_pieces(pc), p);
        }
    } else {
        DistanceEngine eng(space, cfg);
        const Grid& g = eng.grid();
        const auto mu = GridMeasure::invariant(space, g);
        GridMeasure nu{g, std::vector<double>(g.size(), 0.0)};
        std::vector<double> x(std::size_t(g.dim));
        if (point) {
            std::fill(x.begin(), x.end(), 0.5);
            nu.w[g.locate(x.data())] = 1.0;
        } else {
            for (std::size_t c = 0; c < g.size(); ++c) {
                g.center(c, x.data());
                bool in = true;
                for (double v : x) in = in && v >= 0.25 && v <= 0.5;
                if (in) nu.w[c] = 1.0;
            }
            nu.normalize();
        }
        parallel_for(thetas.size(), resolve_threads(cfg.threads),
                     [&](std::size_t k) { dist[k] = eng.grid_distance(mix(mu, nu, thetas[k]), p); });
    }
    rep.theta = thetas;
    rep.distance = dist;
    for (std::size_t k = 0; k < thetas.size(); ++k) rep.table.add(0, -1, "W_theta_" + format_double(thetas[k]), dist[k]);

    const double crit = d > 1 ? d / (d - 1) : std::numeric_limits<double>::infinity();
    rep.predicted_case = p < crit ? "theta" : (p == crit ? "theta_log" : "power");
    rep.monotone = true;
    for (std::size_t k = 1; k < dist.size(); ++k) rep.monotone = rep.monotone && dist[k] >= dist[k - 1];
    // Fits use theta > 0 only; theta = 0 gives W = 0.
    std::vector<double> th_pos, d_pos;
    for (std::size_t k = 0; k < thetas.size(); ++k)
        if (thetas[k] > 0) th_pos.push_back(thetas[k]), d_pos.push_back(dist[k]);
    if (th_pos.size() >= 3) {
        rep.fit = fit_loglog(th_pos, d_pos);
        const auto rss = [&](auto&& g) {
            std::vector<double> res(th_pos.size());
            for (std::size_t k = 0; k < th_pos.size(); ++k) res[k] = std::log(d_pos[k]) - std::log(g(th_pos[k]));
            const double m = mean(res);
            double s = 0;
            for (double v : res) s += (v - m) * (v - m);
            return s;
        };
        const auto g_theta = [](double th) { return th; };
        const auto g_log = [](double th) { return th * std::log(1 + 1 / th); };
        const auto g_pow = [&](double th) { return std::pow(th, 1 / p + 1 / d); };
        rep.rss_theta = rss(g_theta);
        rep.rss_theta_log = rss(g_log);
        rep.rss_power = rss(g_pow);
        rep.best_model = "theta";
        double best = rep.rss_theta;
        if (rep.rss_theta_log < best) best = rep.rss_theta_log, rep.best_model = "theta_log";
        if (rep.rss_power < best) best = rep.rss_power, rep.best_model = "power";
        for (std::size_t k = 0; k < th_pos.size(); ++k) {
            const double th = th_pos[k];
            const double gv = rep.predicted_case == "theta" ? g_theta(th)
                              : rep.predicted_case == "theta_log" ? g_log(th)
                                                                  : g_pow(th);
            rep.bound_const = std::max(rep.bound_const, d_pos[k] / gv);
        }
        rep.table.add(0, -1, "slope", rep.fit.slope);
        rep.table.add(0, -1, "rss_theta", rep.rss_theta);
        rep.table.add(0, -1, "rss_theta_log", rep.rss_theta_log);
        rep.table.add(0, -1, "rss_power", rep.rss_power);
        rep.table.add(0, -1, "bound_const", rep.bound_const);
    }
    return rep;
}

}  // namespace lab
