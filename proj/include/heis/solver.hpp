#pragma once

// Grid solver for the horizontal p-Laplace Dirichlet problem on an annulus in H^1:
//   u = inner_value on Omega_1, u = outer_value outside Omega_2,
//   sum_i X_i(|grad_H u|^{p-2} X_i u) + Y_i(|grad_H u|^{p-2} Y_i u) = 0 in between.
//
// The discrete energy is P1 finite elements on the grid's cubes, each cube split by
// the Kuhn triangulation in four reflected orientations (averaged).

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "heis/core.hpp"
#include "heis/domains.hpp"

namespace heis {

class Grid {
public:
    Grid() = default;
    Grid(std::array<double, 3> lo, std::array<double, 3> hi, std::array<int, 3> res);

    const std::array<double, 3>& lo() const { return lo_; }
    const std::array<double, 3>& hi() const { return hi_; }
    const std::array<int, 3>& res() const { return res_; }
    const std::array<double, 3>& h() const { return h_; }
    double cell_volume() const { return h_[0] * h_[1] * h_[2]; }

    std::size_t node_count() const {
        return static_cast<std::size_t>(res_[0]) * res_[1] * res_[2];
    }
    /// x-fastest linear index.
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * res_[1] + j) * res_[0] + i;
    }
    std::array<int, 3> ijk(std::size_t idx) const;
    std::array<double, 3> coord(int i, int j, int k) const {
        return {lo_[0] + i * h_[0], lo_[1] + j * h_[1], lo_[2] + k * h_[2]};
    }
    std::array<double, 3> coord(std::size_t idx) const;
    Point node_point(std::size_t idx) const;

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::array<double, 3> lo_{};
    std::array<double, 3> hi_{};
    std::array<int, 3> res_{};
    std::array<double, 3> h_{};
};

inline constexpr int kMinResolution = 17;

/// Outer bounding box inflated by 5% about its center.
Grid build_grid(const AnnulusProblem& problem, int resolution);
Grid build_grid(const AnnulusProblem& problem, std::array<int, 3> resolution);

enum class Region : std::uint8_t { Inner = 0, Free = 1, Outer = 2 };

struct RegionMask {
    std::vector<Region> labels;

    std::size_t count(Region r) const;
    bool operator==(const RegionMask&) const = default;
};

struct NoFreeNodes : Error {
    using Error::Error;
};

/// Inner where phi_1 <= 0, Outer where phi_2 >= 0, Free otherwise.
RegionMask classify_nodes(const Grid& grid, const AnnulusProblem& problem);

struct ScalarField {
    Grid grid;
    std::vector<double> values;
    RegionMask mask;

    double at(int i, int j, int k) const { return values[grid.index(i, j, k)]; }
};

/// Samples f at every node.
template <class F>
ScalarField sample_field(const Grid& grid, const RegionMask& mask, F&& f) {
    ScalarField out{grid, std::vector<double>(grid.node_count()), mask};
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = f(grid.node_point(i));
    return out;
}

/// Central-difference horizontal gradient at a Free node.
HorizontalVector discrete_horizontal_gradient(const ScalarField& field, std::size_t node);

/// Discrete energy sum_T |T| (|grad_H u|^2 + eps^2)^{p/2} over elements touching a Free node.
double discrete_p_energy(const ScalarField& field, double p, double eps, int threads = 1);

/// -dE/du_i divided by the cell volume at Free nodes, zero elsewhere.
ScalarField discrete_p_laplacian_residual(const ScalarField& field, double p, double eps, int threads = 1);

enum class NonlinearMethod { Newton, Picard };
std::string to_string(NonlinearMethod m);
NonlinearMethod nonlinear_method_from_string(const std::string& s);

struct SolveOptions {
    double tolerance = 1e-8;           // sup |dE/du| at the final epsilon
    std::vector<double> eps_schedule;  // empty: 1e-2, 1e-4, 1e-6 / diam(box)
    int max_iterations = 200;          // nonlinear iterations over all stages
    NonlinearMethod method = NonlinearMethod::Newton;
    double linear_rtol = 1e-6;
    int max_linear_iterations = 5000;
    double snap_fraction = 0.3;  // Free nodes closer than this * h to a boundary are moved onto it
    double inner_value = 1.0;
    double outer_value = 0.0;
    int threads = 1;
};

/// Default epsilon schedule for a grid.
std::vector<double> default_eps_schedule(const Grid& grid);

struct StageReport {
    double eps = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    double final_energy = 0.0;
    double final_residual = 0.0;
    std::vector<double> eps_schedule;
    double wall_time = 0.0;
    std::vector<StageReport> stages;
    std::vector<double> energy_history;  // per accepted iteration, at that iteration's epsilon
    std::vector<std::size_t> stage_starts;  // index into energy_history where each stage begins
    long linear_iterations = 0;
    int picard_fallbacks = 0;
    std::size_t dofs = 0;
    std::size_t snapped_nodes = 0;
    std::size_t elements = 0;
    double min_free = 0.0;
    double max_free = 0.0;
    bool bounds_ok = false;  // inner/outer data strictly bracket every Free value
    std::string message;
};

struct SolveResult {
    ScalarField field;
    SolveReport report;
};

SolveResult solve(const AnnulusProblem& problem, const Grid& grid, const SolveOptions& options = {});

/// Trilinear interpolation at a point of the grid box; throws outside it.
double sample_trilinear(const ScalarField& field, const std::array<double, 3>& x);

struct ResampleRangeError : Error {
    using Error::Error;
};

/// u_lambda(z) = u(delta_lambda z) on the grid spanning delta_{-lambda}(box).
ScalarField resample_dilated(const ScalarField& field, double lambda);
/// Same, on a caller-chosen grid. Points leaving the source box take `outside`
/// if given, otherwise raise ResampleRangeError.
ScalarField resample_dilated(const ScalarField& field, double lambda, const Grid& target,
                             const double* outside = nullptr);

}  // namespace heis
