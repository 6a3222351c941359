// lab: command-line front end for the experiment harness.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 64 usage error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lab/config.hpp"
#include "lab/error.hpp"
#include "lab/experiments.hpp"
#include "lab/manifest.hpp"
#include "lab/parallel.hpp"
#include "lab/spectral.hpp"
#include "lab/wasserstein.hpp"

namespace {

using namespace lab;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitUsage = 64;

const std::vector<std::string> kCommands{"simulate", "rates", "limit", "bernstein", "psi-moments",
                                         "mixture", "spectrum", "ot-selftest"};

void usage(std::ostream& out) {
    out << "usage: lab <command> [--config FILE] [--seed N] [--out DIR] [--threads N]\n"
           "                     [--T t1,t2,...] [--reps N] [--print-config]\n"
           "commands:\n"
           "  simulate      write trajectories (binary) and per-replica summaries\n"
           "  rates         W_p(mu_T, mu) moments over a T list with log-log fits\n"
           "  limit         T W_2^2 against the spectral functional and its limit law\n"
           "  bernstein     empirical tails of ergodic averages against the deviation bound\n"
           "  psi-moments   second and Gaussian moments of normalized mode integrals\n"
           "  mixture       W_p((1-theta) mu + theta nu, mu) scaling in theta\n"
           "  spectrum      eigenvalues of the symmetric generator\n"
           "  ot-selftest   cross-checks of the transport solvers\n";
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw ConfigError("--T expects comma-separated numbers, got '" + s + "'");
        }
        if (used != item.size()) throw ConfigError("--T expects comma-separated numbers, got '" + s + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("--T needs at least one value");
    return out;
}

struct Output {
    std::string dir;
    std::vector<std::string> files;

    void table(const std::string& name, const Table& t) {
        t.write((std::filesystem::path(dir) / name).string());
        files.push_back(name);
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void run_simulate(const ExperimentConfig& cfg, Output& out) {
    const auto space = cfg.make_space();
    const double T = cfg.T_list.front();
    Table t;
    std::vector<Trajectory> trajs(cfg.replicas);
    parallel_for(cfg.replicas, resolve_threads(cfg.threads), [&](std::size_t r) {
        trajs[r] = simulate(space, cfg.sim(T), ReplicaId{cfg.seed, std::uint32_t(r)});
    });
    for (std::size_t r = 0; r < trajs.size(); ++r) {
        const auto name = "trajectory_" + std::to_string(r) + ".bin";
        write_trajectory((std::filesystem::path(out.dir) / name).string(), trajs[r]);
        out.files.push_back(name);
        const auto& tr = trajs[r];
        const auto w = trapezoid_weights(tr.count(), tr.dt());
        for (int k = 0; k < tr.dim; ++k) {
            double m = 0;
            for (std::size_t j = 0; j < tr.count(); ++j) m += w[j] * tr.point(j)[k];
            t.add(T, (long long)r, "time_mean_x" + std::to_string(k), m / tr.horizon());
            t.add(T, (long long)r, "final_x" + std::to_string(k), tr.point(tr.count() - 1)[k]);
        }
    }
    out.table("simulate.csv", t);
    std::cout << "wrote " << trajs.size() << " trajectories of " << trajs.front().count() << " points\n";
}

void run_rates(const ExperimentConfig& cfg, Output& out) {
    const auto rep = run_rate_experiment(cfg);
    out.table("rates.csv", rep.table);
    for (const auto& r : rep.results) {
        std::cout << "p = " << r.p << ", q = " << r.q << "\n";
        std::cout << "        T     (E W^q)^(1/q)        95% CI\n";
        for (const auto& pt : r.points)
            std::printf("%9g  %15s  [%s, %s]\n", pt.T, fmt(pt.estimate.estimate).c_str(), fmt(pt.estimate.lo).c_str(),
                        fmt(pt.estimate.hi).c_str());
        if (r.fitted) {
            std::printf("slope %s [%s, %s], reference %s\n", fmt(r.slope.estimate).c_str(), fmt(r.slope.lo).c_str(),
                        fmt(r.slope.hi).c_str(), fmt(r.reference_slope).c_str());
            std::printf("slope of E W^q %s [%s, %s]\n", fmt(r.moment_slope.estimate).c_str(),
                        fmt(r.moment_slope.lo).c_str(), fmt(r.moment_slope.hi).c_str());
            std::printf("corr(T E W^2, log T) %s\n", fmt(r.log_corr).c_str());
        } else {
            std::cout << "fewer than three horizons: no slope fit\n";
        }
    }
}

void run_limit(const ExperimentConfig& cfg, Output& out) {
    const auto rep = run_limit_experiment(cfg);
    out.table("limit.csv", rep.table);
    std::printf("E Xi(inf) from draws %s\n", fmt(rep.xi_inf_mean).c_str());
    std::cout << "        T     mean T W2^2    stderr      E|TW2-Xi|^q   KS      ratio q=1  ratio q=2\n";
    for (const auto& p : rep.points)
        std::printf("%9g  %12s  %9s  %12s  %7s  %9s  %9s\n", p.T, fmt(p.tw2.mean).c_str(), fmt(p.tw2.stderr_).c_str(),
                    fmt(p.abs_diff_q).c_str(), fmt(p.ks).c_str(), fmt(p.ratio_q1).c_str(), fmt(p.ratio_q2).c_str());
    std::cout << "E|TW2 - Xi|^q decreasing: " << (rep.diff_decreasing ? "yes" : "no") << "\n";
}

void run_bernstein(const ExperimentConfig& cfg, Output& out) {
    const auto rep = run_bernstein_experiment(cfg);
    out.table("bernstein.csv", rep.table);
    std::printf("sigma^2 %s, m %s, T %g\n", fmt(rep.params.sigma_sq).c_str(), fmt(rep.params.frak_m).c_str(), rep.T);
    std::cout << "      xi      exceedance   stderr     bound(alpha=10)\n";
    for (std::size_t k = 0; k < rep.xi.size(); ++k)
        std::printf("%10s  %10s  %9s  %10s\n", fmt(rep.xi[k]).c_str(), fmt(rep.empirical[k]).c_str(),
                    fmt(rep.se[k]).c_str(), fmt(rep.bound_alpha10[k]).c_str());
    std::printf("minimal alpha %s, alpha = 10 dominates: %s\n", fmt(rep.alpha_hat).c_str(),
                rep.dominated_at_10 ? "yes" : "no");
}

void run_psi(const ExperimentConfig& cfg, Output& out) {
    const auto rep = run_psi_moment_experiment(cfg);
    out.table("psi_moments.csv", rep.table);
    for (const auto& r : rep.rows) {
        std::printf("T %g mode %zu: E psi^2 %s +- %s, target %s, autocovariance gap %s\n", r.T, r.mode + 1,
                    fmt(r.second.mean).c_str(), fmt(r.second.stderr_).c_str(), fmt(r.target).c_str(),
                    fmt(r.acf_gap).c_str());
        const char* qs[3] = {"1", "2", "4"};
        for (int j = 0; j < 3; ++j)
            std::printf("   q=%s: E|psi|^q %s +- %s, gaussian %s\n", qs[j], fmt(r.abs_moments[j].estimate).c_str(),
                        fmt(r.abs_moments[j].se).c_str(), fmt(r.gaussian[j]).c_str());
    }
}

void run_mixture(const ExperimentConfig& cfg, Output& out) {
    const auto rep = run_mixture_scaling_experiment(cfg);
    out.table("mixture.csv", rep.table);
    for (std::size_t k = 0; k < rep.theta.size(); ++k)
        std::printf("theta %-12s W_p %s\n", fmt(rep.theta[k]).c_str(), fmt(rep.distance[k]).c_str());
    std::printf("fitted exponent %s; residuals theta %s, theta log %s, power %s; best %s, predicted %s\n",
                fmt(rep.fit.slope).c_str(), fmt(rep.rss_theta).c_str(), fmt(rep.rss_theta_log).c_str(),
                fmt(rep.rss_power).c_str(), rep.best_model.c_str(), rep.predicted_case.c_str());
}

void run_spectrum(const ExperimentConfig& cfg, Output& out) {
    const auto space = cfg.make_space();
    const auto basis = SpectralBasis::build(space, cfg.basis_size());
    Table t;
    for (std::size_t i = 0; i < basis.size(); ++i) t.add(0, (long long)(i + 1), "eigenvalue", basis.eigenvalue(i));
    out.table("spectrum.csv", t);
    for (std::size_t i = 0; i < std::min<std::size_t>(basis.size(), 10); ++i)
        std::printf("lambda_%zu = %s  %s\n", i + 1, fmt(basis.eigenvalue(i)).c_str(), basis.mode_descriptor(i).c_str());
    std::printf("%zu modes\n", basis.size());
}

// Independent routes to the same transport value.
bool run_selftest(const ExperimentConfig& cfg, Output& out) {
    Table t;
    bool all = true;
    const auto row = [&](const std::string& name, double gap, double tol) {
        const bool ok = gap <= tol;
        all = all && ok;
        std::printf("%-46s gap %-11s tol %-8s %s\n", name.c_str(), fmt(gap).c_str(), fmt(tol).c_str(),
                    ok ? "PASS" : "FAIL");
        t.add(0, -1, name, gap);
    };
    RngStream rng(cfg.seed, 0, RngTag::test);
    const auto random_atoms = [&](std::size_t n, std::vector<double>& x, std::vector<double>& w) {
        x.resize(n);
        w.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform();
            w[i] = 0.1 + rng.uniform();
        }
    };
    const auto circle_cost = [](const std::vector<double>& x, const std::vector<double>& y, double p) {
        std::vector<double> c(x.size() * y.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j < y.size(); ++j) {
                const double d = std::abs(x[i] - y[j]);
                c[i * y.size() + j] = std::pow(std::min(d, 1 - d), p);
            }
        return c;
    };
    const auto norm = [](std::vector<double> w) {
        double s = 0;
        for (double v : w) s += v;
        for (double& v : w) v /= s;
        return w;
    };

    for (double p : {1.0, 1.5, 2.0}) {
        double worst = 0;
        for (int rep = 0; rep < 40; ++rep) {
            std::vector<double> x, wx, y, wy;
            random_atoms(1 + rng.below(16), x, wx);
            random_atoms(1 + rng.below(16), y, wy);
            const auto a = Measure1D::atoms(x, wx), b = Measure1D::atoms(y, wy);
            const double lp = transport_exact(circle_cost(x, y, p), norm(wx), norm(wy)).cost;
            worst = std::max(worst, std::abs(std::pow(w_p_circle(a, b, p), p) - lp));
            if (p == 1.0) worst = std::max(worst, std::abs(w1_circle_cdf(a, b) - lp));
        }
        row("circle quantile vs LP, p=" + format_double(p), worst, 1e-9);
    }
    {
        double worst = 0;
        for (int rep = 0; rep < 40; ++rep) {
            std::vector<double> x, wx, y, wy;
            random_atoms(1 + rng.below(16), x, wx);
            random_atoms(1 + rng.below(16), y, wy);
            std::vector<double> c(x.size() * y.size());
            for (std::size_t i = 0; i < x.size(); ++i)
                for (std::size_t j = 0; j < y.size(); ++j) c[i * y.size() + j] = (x[i] - y[j]) * (x[i] - y[j]);
            const double lp = transport_exact(c, norm(wx), norm(wy)).cost;
            const double q = w_p_interval(Measure1D::atoms(x, wx), Measure1D::atoms(y, wy), 2.0);
            worst = std::max(worst, std::abs(q * q - lp));
        }
        row("interval quantile vs LP, p=2", worst, 1e-9);
    }
    {
        // W_2^2 of product measures on Torus(2) is the sum of the axis costs.
        const std::size_t m = 8;
        std::vector<double> ax(m), ay(m), bx(m), by(m);
        for (auto* v : {&ax, &ay, &bx, &by})
            for (double& e : *v) e = 0.05 + rng.uniform();
        ax = norm(ax), ay = norm(ay), bx = norm(bx), by = norm(by);
        const auto g1 = Grid{1, m, true}, g2 = Grid{2, m, true};
        GridMeasure a{g2, std::vector<double>(m * m)}, b{g2, std::vector<double>(m * m)};
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t i = 0; i < m; ++i) {
                a.w[j * m + i] = ax[i] * ay[j];
                b.w[j * m + i] = bx[i] * by[j];
            }
        const double joint = w_p_grid_exact(a, b, 2.0).cost;
        const double sep = w_p_grid_exact({g1, ax}, {g1, bx}, 2.0).cost + w_p_grid_exact({g1, ay}, {g1, by}, 2.0).cost;
        row("product separability on Torus(2)", std::abs(joint - sep), 1e-6);
    }
    {
        double worst = 0;
        const Grid g{2, 16, true};
        for (int rep = 0; rep < 3; ++rep) {
            GridMeasure a{g, std::vector<double>(g.size())}, b{g, std::vector<double>(g.size())};
            for (double& v : a.w) v = 0.1 + rng.uniform();
            for (double& v : b.w) v = 0.1 + rng.uniform();
            a.normalize();
            b.normalize();
            const double ex = w_p_grid_exact(a, b, 2.0).cost;
            const double sk = w_p_grid_sinkhorn(a, b, 2.0).cost;
            worst = std::max(worst, std::abs(sk - ex) / std::max(1e-3, 0.02 * ex));
        }
        // Gap in units of the envelope max(1e-3, 2% of the LP value).
        row("sinkhorn vs LP on 16x16 / envelope", worst, 1.0);
    }
    out.table("ot_selftest.csv", t);
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2 || std::find(kCommands.begin(), kCommands.end(), std::string(argv[1])) == kCommands.end()) {
        if (argc >= 2 && (std::string(argv[1]) == "--help" || std::string(argv[1]) == "-h")) {
            usage(std::cout);
            return 0;
        }
        if (argc >= 2) std::cerr << "unknown command '" << argv[1] << "'\n";
        usage(std::cerr);
        return kExitUsage;
    }
    const std::string command = argv[1];

    CLI::App app{"lab " + command};
    std::string config_path, out_dir, T_text;
    std::uint64_t seed = 0;
    int threads = 0;
    std::size_t reps = 0;
    bool print = false;
    auto* opt_config = app.add_option("--config", config_path, "experiment config file");
    auto* opt_seed = app.add_option("--seed", seed, "master seed");
    auto* opt_out = app.add_option("--out", out_dir, "output directory");
    auto* opt_threads = app.add_option("--threads", threads, "worker threads (0: LAB_THREADS or hardware)");
    auto* opt_T = app.add_option("--T", T_text, "comma-separated horizons");
    auto* opt_reps = app.add_option("--reps", reps, "replicas per horizon");
    app.add_flag("--print-config", print, "print the effective configuration and exit");
    try {
        app.parse(argc - 1, argv + 1);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "lab " << command << ": " << e.what() << "\n";
        return kExitConfig;
    }

    const auto t0 = std::chrono::steady_clock::now();
    RunManifest man;
    man.command = command;
    man.start_utc = utc_timestamp();
    try {
        ExperimentConfig cfg = default_config(command);
        if (*opt_config) {
            if (config_path.empty()) throw ConfigError("--config needs a file path");
            cfg = load_config(config_path, command);
        }
        if (*opt_seed) cfg.seed = seed;
        if (*opt_out) cfg.out_dir = out_dir;
        if (*opt_threads) cfg.threads = threads;
        if (*opt_T) cfg.T_list = parse_list(T_text);
        if (*opt_reps) cfg.replicas = reps;
        if (print) {
            std::cout << print_config(cfg);
            return 0;
        }
        cfg.validate();

        Output out{cfg.out_dir, {}};
        std::filesystem::create_directories(out.dir);
        bool ok = true;
        if (command == "simulate") run_simulate(cfg, out);
        else if (command == "rates") run_rates(cfg, out);
        else if (command == "limit") run_limit(cfg, out);
        else if (command == "bernstein") run_bernstein(cfg, out);
        else if (command == "psi-moments") run_psi(cfg, out);
        else if (command == "mixture") run_mixture(cfg, out);
        else if (command == "spectrum") run_spectrum(cfg, out);
        else ok = run_selftest(cfg, out);

        man.config_text = print_config(cfg);
        man.config_hash = config_hash(cfg);
        man.seed = cfg.seed;
        man.threads = resolve_threads(cfg.threads);
        man.outputs = out.files;
        man.end_utc = utc_timestamp();
        man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        man.check_outputs(out.dir);
        std::ofstream mf(std::filesystem::path(out.dir) / "manifest.json", std::ios::binary);
        mf << man.json();
        if (!mf) throw ConfigError("cannot write manifest.json in " + out.dir);
        if (!ok) {
            std::cerr << "lab ot-selftest: some checks failed\n";
            return kExitNumerical;
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "lab " << command << ": config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ResourceError& e) {
        std::cerr << "lab " << command << ": size limit: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "lab " << command << ": numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const InputError& e) {
        std::cerr << "lab " << command << ": invalid parameter: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "lab " << command << ": " << e.what() << "\n";
        return kExitNumerical;
    }
}
