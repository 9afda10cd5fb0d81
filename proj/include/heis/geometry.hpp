#pragma once

// Certified quantities of a solved field: the pairing <grad u, Z>, the empirical
// constant M, level-surface extraction and starshapedness of level sets.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "heis/domains.hpp"
#include "heis/solver.hpp"

namespace heis {

using Vec3 = std::array<double, 3>;

/// Central-difference Euclidean gradient at Free nodes; zero elsewhere.
std::vector<Vec3> full_gradient(const ScalarField& field);

/// Free nodes whose Chebyshev distance to every non-Free node is at least m.
std::vector<std::size_t> certified_nodes(const ScalarField& field, int m);

struct PairingField {
    int m = 0;
    std::vector<std::size_t> nodes;
    std::vector<double> values;  // <grad u, Z> at nodes[i]
};

struct NoCertifiedNodes : Error {
    using Error::Error;
};

PairingField pairing_field(const ScalarField& field, int m);

struct SignCertificate {
    double M = 0.0;  // -max pairing over certified nodes
    Point worst;
    int m = 0;
    bool pass = false;
    double min_gradient_norm = 0.0;
    std::size_t certified_nodes = 0;
    std::string note;
};

SignCertificate sign_certificate(const ScalarField& field, int m = 2);

struct LevelSurface {
    double level = 0.0;
    std::vector<Vec3> vertices;
    std::vector<Vec3> normals;     // -grad u / |grad u|
    std::vector<double> pairing;   // <normal, Z> per vertex
    std::vector<std::array<int, 3>> triangles;
};

struct EmptySurface : Error {
    using Error::Error;
};

/// Marching tetrahedra over the six-tetrahedron split of each grid cube. With
/// m = 0 every cube takes part (pinned values included) and normals come from
/// nodal central differences; with m > 0 only cubes whose corners are all
/// certified at margin m are used, and the surface may then be open. Levels not
/// strictly between the extreme Free-node values raise EmptySurface.
LevelSurface extract_level_surface(const ScalarField& field, double level, int m = 0);

/// Every edge shared by exactly two triangles.
bool is_closed(const LevelSurface& s);

StarshapednessReport level_starshape(const LevelSurface& s);

struct DilationComparisonReport {
    double lambda = 0.0;
    double max_quotient = 0.0;
    Point argmax;
    std::size_t nodes = 0;
    bool pass = false;
};

/// max over certified nodes of (u(delta_lambda z) - u(z)) / lambda. Points leaving
/// the grid box take the field's exterior value.
DilationComparisonReport dilation_comparison_check(const ScalarField& field, double lambda, int m = 2);

/// (u(delta_lambda z) - u(z)) / lambda at one node, reading u(delta_lambda z) from
/// a C1 tricubic interpolant so the quotient tends to the central-difference
/// pairing as lambda -> 0.
double dilation_quotient_at(const ScalarField& field, std::size_t node, double lambda);

void write_ply(const LevelSurface& s, const std::string& path);

}  // namespace heis
