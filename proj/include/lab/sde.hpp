#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lab/model_space.hpp"
#include "lab/spectral.hpp"

namespace lab {

enum class InitKind { stationary, point, smoothed };

/// Law of X_0: mu itself, a point mass, or a point mass evolved for time r
/// before recording starts.
struct InitialLaw {
    InitKind kind = InitKind::stationary;
    std::vector<double> x0;
    double r = 0.0;

    static InitialLaw stationary() { return {}; }
    static InitialLaw point(std::vector<double> x) { return {InitKind::point, std::move(x), 0.0}; }
    static InitialLaw smoothed(std::vector<double> x, double r) { return {InitKind::smoothed, std::move(x), r}; }
    std::string describe() const;
};

struct SimulationParams {
    double h = 1e-3;
    double T = 1.0;
    std::size_t stride = 1;
    InitialLaw init;
    /// Each step's Gaussian is the normalized sum of `substeps` unit normals
    /// of a finer grid, so a run at h with substeps 2 and a run at h/2 share
    /// one Brownian path.
    std::size_t substeps = 1;
};

/// Replica identity: the path is a function of (seed, replica) only.
struct ReplicaId {
    std::uint64_t seed = 0;
    std::uint32_t replica = 0;
};

struct Trajectory {
    int dim = 1;
    double h = 0.0;
    double T = 0.0;
    std::size_t stride = 1;
    InitialLaw init;
    ReplicaId id;
    std::vector<double> points;  // count() x dim, row-major

    std::size_t count() const { return points.size() / std::size_t(dim); }
    const double* point(std::size_t j) const { return &points[j * std::size_t(dim)]; }
    /// Spacing of stored points.
    double dt() const { return h * double(stride); }
    /// Time covered by the stored points, (count - 1) * dt.
    double horizon() const { return double(count() - 1) * dt(); }
};

/// Number of Euler steps for horizon T and step h (T/h rounded when it is
/// within 1e-9 of an integer, else floored).
std::size_t step_count(double T, double h);

/// One Euler-Maruyama step x <- canon(x + b(x) h + sqrt(2h) xi).
void em_step(const ModelSpace& space, double h, double* x, const double* xi);

/// Streams the stored points of a path to `visit(j, x)` without keeping them.
void simulate_visit(const ModelSpace& space, const SimulationParams& params, ReplicaId id,
                    const std::function<void(std::size_t, const double*)>& visit);

Trajectory simulate(const ModelSpace& space, const SimulationParams& params, ReplicaId id);

/// Trapezoid weights on the stored grid; they sum to horizon().
std::vector<double> trapezoid_weights(std::size_t count, double dt);

struct StationarityRow {
    std::size_t mode;
    double mean;
    double stderr_;
    bool flagged;
};

/// Time-and-replica averages of phi_i(X_t) for i < m with standard errors
/// across replicas; rows with |mean| > 4 stderr are flagged.
std::vector<StationarityRow> stationarity_report(const std::vector<Trajectory>& trajectories,
                                                 const SpectralBasis& basis, std::size_t m);

/// Binary dump: 32-byte header (magic "LABTRAJ\0", u32 version, u32 d,
/// u64 count, 8 reserved bytes) then count*d little-endian f64.
void write_trajectory(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory(const std::string& path);

}  // namespace lab
