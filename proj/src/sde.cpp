#include "lab/sde.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lab/error.hpp"

namespace lab {

namespace {

constexpr char kMagic[8] = {'L', 'A', 'B', 'T', 'R', 'A', 'J', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kChunkSteps = 4096;

void validate(const ModelSpace& space, const SimulationParams& p) {
    if (!(p.h > 0) || p.h > 1e-2) throw InputError("step h must lie in (0, 1e-2]");
    if (!(p.T >= p.h)) throw InputError("horizon T must be >= h");
    if (p.stride < 1) throw InputError("observation stride must be >= 1");
    if (p.substeps < 1) throw InputError("substeps must be >= 1");
    if (p.init.kind != InitKind::stationary) {
        if (int(p.init.x0.size()) != space.dim()) throw InputError("initial point dimension mismatch");
        for (double v : p.init.x0)
            if (!std::isfinite(v)) throw InputError("initial point must be finite");
    }
    if (p.init.kind == InitKind::smoothed && !(p.init.r >= 0)) throw InputError("smoothing time r must be >= 0");
}

}  // namespace

std::string InitialLaw::describe() const {
    std::ostringstream os;
    switch (kind) {
        case InitKind::stationary: return "stationary";
        case InitKind::point: os << "point("; break;
        case InitKind::smoothed: os << "smoothed(r=" << r << ", "; break;
    }
    for (std::size_t i = 0; i < x0.size(); ++i) os << (i ? "," : "") << x0[i];
    os << ")";
    return os.str();
}

std::size_t step_count(double T, double h) {
    const double q = T / h;
    const double r = std::round(q);
    if (std::abs(q - r) <= 1e-9 * std::max(1.0, r)) return std::size_t(r);
    return std::size_t(std::floor(q));
}

void em_step(const ModelSpace& space, double h, double* x, const double* xi) {
    const int d = space.dim();
    double b[16];
    if (d > 16) throw InputError("dimension too large");
    space.drift_at(x, b);
    const double s = std::sqrt(2.0 * h);
    for (int k = 0; k < d; ++k) x[k] += b[k] * h + s * xi[k];
    space.canonicalize_inplace(x);
}

void simulate_visit(const ModelSpace& space, const SimulationParams& p, ReplicaId id,
                    const std::function<void(std::size_t, const double*)>& visit) {
    validate(space, p);
    const int d = space.dim();
    const std::size_t du = std::size_t(d);
    if (d > 16) throw InputError("dimension too large");
    double x[16];
    if (p.init.kind == InitKind::stationary) {
        RngStream init(id.seed, id.replica, RngTag::init);
        space.sample_invariant(init, x);
    } else {
        for (std::size_t k = 0; k < du; ++k) x[k] = p.init.x0[k];
        space.canonicalize_inplace(x);
    }

    RngStream path(id.seed, id.replica, RngTag::path);
    const std::size_t sub = p.substeps;
    const double inv_sqrt_sub = 1.0 / std::sqrt(double(sub));
    std::vector<double> z(kChunkSteps * du * sub), xi(kChunkSteps * du);
    const double s = std::sqrt(2.0 * p.h);
    const bool constant_drift = space.is_torus();
    double bconst[16] = {0};
    if (constant_drift) space.drift_at(x, bconst);
    const bool torus1 = constant_drift && d == 1;

    const auto run = [&](std::size_t nsteps, std::size_t first_index, bool record) {
        std::size_t done = 0;
        while (done < nsteps) {
            const std::size_t c = std::min(kChunkSteps, nsteps - done);
            path.normals(z.data(), c * du * sub);
            if (sub == 1) {
                std::memcpy(xi.data(), z.data(), c * du * sizeof(double));
            } else {
                for (std::size_t t = 0; t < c; ++t)
                    for (std::size_t k = 0; k < du; ++k) {
                        double acc = 0;
                        for (std::size_t q = 0; q < sub; ++q) acc += z[(t * sub + q) * du + k];
                        xi[t * du + k] = acc * inv_sqrt_sub;
                    }
            }
            if (torus1) {
                const double bh = bconst[0] * p.h;
                for (std::size_t t = 0; t < c; ++t) {
                    double v = x[0] + bh + s * xi[t];
                    v -= std::floor(v);
                    if (v >= 1.0) v = 0.0;
                    x[0] = v;
                    const std::size_t step = done + t + 1;
                    if (record && step % p.stride == 0) visit(first_index + step / p.stride, x);
                }
            } else {
                for (std::size_t t = 0; t < c; ++t) {
                    em_step(space, p.h, x, &xi[t * du]);
                    const std::size_t step = done + t + 1;
                    if (record && step % p.stride == 0) visit(first_index + step / p.stride, x);
                }
            }
            done += c;
        }
    };

    if (p.init.kind == InitKind::smoothed && p.init.r > 0) run(step_count(p.init.r, p.h), 0, false);
    visit(0, x);
    const std::size_t nsteps = step_count(p.T, p.h);
    // only whole strides are recorded
    run(nsteps - nsteps % p.stride, 0, true);
}

Trajectory simulate(const ModelSpace& space, const SimulationParams& p, ReplicaId id) {
    validate(space, p);
    Trajectory tr;
    tr.dim = space.dim();
    tr.h = p.h;
    tr.T = p.T;
    tr.stride = p.stride;
    tr.init = p.init;
    tr.id = id;
    const std::size_t count = step_count(p.T, p.h) / p.stride + 1;
    tr.points.resize(count * std::size_t(tr.dim));
    simulate_visit(space, p, id, [&](std::size_t j, const double* x) {
        std::memcpy(&tr.points[j * std::size_t(tr.dim)], x, std::size_t(tr.dim) * sizeof(double));
    });
    return tr;
}

std::vector<double> trapezoid_weights(std::size_t count, double dt) {
    if (count < 2) throw InputError("trapezoid rule needs at least two points");
    std::vector<double> w(count, dt);
    w.front() = w.back() = 0.5 * dt;
    return w;
}

std::vector<StationarityRow> stationarity_report(const std::vector<Trajectory>& trajs, const SpectralBasis& basis,
                                                 std::size_t m) {
    if (trajs.size() < 2) throw InputError("stationarity report needs at least two replicas");
    m = std::min(m, basis.size());
    std::vector<double> sum(m, 0.0), sumsq(m, 0.0), vals(m);
    for (const auto& tr : trajs) {
        if (tr.init.kind != InitKind::stationary) throw InputError("stationarity report requires stationary init");
        const auto w = trapezoid_weights(tr.count(), tr.dt());
        std::vector<double> avg(m, 0.0);
        for (std::size_t j = 0; j < tr.count(); ++j) {
            basis.eval_all(tr.point(j), vals.data(), m);
            for (std::size_t i = 0; i < m; ++i) avg[i] += w[j] * vals[i];
        }
        for (std::size_t i = 0; i < m; ++i) {
            const double a = avg[i] / tr.horizon();
            sum[i] += a;
            sumsq[i] += a * a;
        }
    }
    const double R = double(trajs.size());
    std::vector<StationarityRow> rows;
    for (std::size_t i = 0; i < m; ++i) {
        const double mean = sum[i] / R;
        const double var = std::max(0.0, (sumsq[i] - R * mean * mean) / (R - 1));
        const double se = std::sqrt(var / R);
        rows.push_back({i, mean, se, std::abs(mean) > 4 * se});
    }
    return rows;
}

void write_trajectory(const std::string& path, const Trajectory& traj) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open " + path + " for writing");
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    const std::uint32_t d = std::uint32_t(traj.dim);
    const std::uint64_t n = traj.count();
    const char reserved[8] = {0};
    os.write(kMagic, 8);
    os.write(reinterpret_cast<const char*>(&kVersion), 4);
    os.write(reinterpret_cast<const char*>(&d), 4);
    os.write(reinterpret_cast<const char*>(&n), 8);
    os.write(reserved, 8);
    os.write(reinterpret_cast<const char*>(traj.points.data()), std::streamsize(traj.points.size() * sizeof(double)));
    if (!os) throw InputError("write failed: " + path);
}

Trajectory read_trajectory(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open " + path);
    char magic[8];
    std::uint32_t version = 0, d = 0;
    std::uint64_t n = 0;
    char reserved[8];
    is.read(magic, 8);
    is.read(reinterpret_cast<char*>(&version), 4);
    is.read(reinterpret_cast<char*>(&d), 4);
    is.read(reinterpret_cast<char*>(&n), 8);
    is.read(reserved, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) throw InputError(path + ": not a trajectory dump");
    if (version != kVersion) throw InputError(path + ": unsupported trajectory version");
    Trajectory tr;
    tr.dim = int(d);
    tr.points.resize(std::size_t(n) * d);
    is.read(reinterpret_cast<char*>(tr.points.data()), std::streamsize(tr.points.size() * sizeof(double)));
    if (!is) throw InputError(path + ": truncated trajectory dump");
    return tr;
}

}  // namespace lab
