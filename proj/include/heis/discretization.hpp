#pragma once

// P1 finite elements on a structured grid. Every cube carries the six Kuhn
// tetrahedra for each of four reflected main diagonals; element volumes are
// divided by four so the union covers the cube once. With a problem attached,
// Free nodes very close to a boundary are snapped onto it and the pinned
// vertices of active elements are moved onto their boundary surface.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "heis/solver.hpp"

namespace heis {

struct CsrMatrix {
    int rows = 0;
    std::vector<int> row_ptr;
    std::vector<int> cols;
    std::vector<double> vals;
};

enum class HessianKind { Newton, Picard };

class Discretization {
public:
    static constexpr int kOrientations = 4;
    static constexpr int kTypes = 6 * kOrientations;

    /// Regular mesh; degrees of freedom are the Free nodes of the mask.
    Discretization(const Grid& grid, const RegionMask& mask, int threads = 1);
    /// Boundary-fitted mesh for a solve.
    Discretization(const Grid& grid, const RegionMask& mask, const AnnulusProblem& problem, double snap_fraction,
                   int threads = 1);

    const Grid& grid() const { return grid_; }
    std::size_t dof_count() const { return dof_nodes_.size(); }
    /// Per node: dof number, or -1 when the value is pinned.
    const std::vector<int>& dof_index() const { return dof_index_; }
    const std::vector<std::size_t>& dof_nodes() const { return dof_nodes_; }
    /// Boundary a pinned node carries data from (snapped nodes take their target's label).
    Region pinned_region(std::size_t node) const { return pinned_region_[node]; }
    const std::vector<std::size_t>& snapped_nodes() const { return snapped_; }
    std::size_t moved_vertex_count() const { return moved_count_; }
    std::size_t element_count() const { return tets_.size(); }
    double active_volume() const;

    double energy(std::span<const double> u, double p, double eps) const;
    /// dE/du at each dof.
    void gradient(std::span<const double> u, double p, double eps, std::vector<double>& g) const;
    /// Hessian on dofs; Picard drops the (p-2) rank-one term.
    void hessian(std::span<const double> u, double p, double eps, HessianKind kind, CsrMatrix& H) const;
    /// Finite-element value at the node's original grid position.
    double interpolate(std::span<const double> u, std::size_t node) const;

private:
    struct Tet {
        std::array<std::int32_t, 4> v;
        std::int32_t geom;  // < kTypes: regular element of that type; else irregular table entry + kTypes
        std::uint8_t type;
    };
    struct Geometry {
        double G[4][3];  // gradients of barycentric coordinates
        double vol;      // weighted volume
    };

    void build(const AnnulusProblem* problem, double snap_fraction);
    void build_pattern();
    const Geometry& geometry(const Tet& t) const {
        return t.geom < kTypes ? regular_[t.geom] : irregular_[t.geom - kTypes];
    }
    // Horizontal-gradient coefficients of the four vertices.
    void frame_coefficients(const Tet& t, const Geometry& g, double hx[4], double hy[4]) const;
    std::array<double, 3> position(std::size_t node) const {
        return {pos_[3 * node], pos_[3 * node + 1], pos_[3 * node + 2]};
    }

    template <class F>
    void for_each_layer_colored(F&& f) const;

    Grid grid_;
    RegionMask mask_;
    int threads_;
    std::vector<double> pos_;
    std::vector<int> dof_index_;
    std::vector<std::size_t> dof_nodes_;
    std::vector<Region> pinned_region_;
    std::vector<std::size_t> snapped_;
    std::size_t moved_count_ = 0;
    std::vector<Tet> tets_;
    std::vector<std::size_t> layer_begin_;  // tets of cube layer k are [layer_begin_[k], layer_begin_[k+1])
    Geometry regular_[kTypes];
    double type_sign_[kTypes];
    std::vector<Geometry> irregular_;
    // CSR pattern over dofs and a 27-slot neighbor lookup.
    std::vector<int> row_ptr_;
    std::vector<int> cols_;
    std::vector<int> slot_;
};

/// Local corner offsets (in {0,1}^3) of the four vertices of each element type.
const std::array<std::array<std::array<int, 3>, 4>, Discretization::kTypes>& element_corner_offsets();

}  // namespace heis
