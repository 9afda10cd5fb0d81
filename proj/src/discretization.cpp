#include "heis/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "heis/parallel.hpp"

namespace heis {

namespace {

using Corners = std::array<std::array<int, 3>, 4>;

std::array<Corners, Discretization::kTypes> make_offsets() {
    const int sgn[Discretization::kOrientations][3] = {{1, 1, 1}, {-1, 1, 1}, {1, -1, 1}, {1, 1, -1}};
    const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    std::array<Corners, Discretization::kTypes> out{};
    for (int o = 0; o < Discretization::kOrientations; ++o)
        for (int q = 0; q < 6; ++q) {
            Corners c{};
            for (int a = 0; a < 3; ++a) c[0][a] = sgn[o][a] > 0 ? 0 : 1;
            for (int s = 0; s < 3; ++s) {
                c[s + 1] = c[s];
                const int ax = perms[q][s];
                c[s + 1][ax] += sgn[o][ax];
            }
            out[o * 6 + q] = c;
        }
    return out;
}

double det3(const double E[3][3]) {
    return E[0][0] * (E[1][1] * E[2][2] - E[1][2] * E[2][1]) - E[0][1] * (E[1][0] * E[2][2] - E[1][2] * E[2][0]) +
           E[0][2] * (E[1][0] * E[2][1] - E[1][1] * E[2][0]);
}

// Barycentric gradients of a tetrahedron; returns the signed determinant of the edge matrix.
double barycentric_gradients(const std::array<std::array<double, 3>, 4>& P, double G[4][3]) {
    double E[3][3];
    for (int k = 0; k < 3; ++k)
        for (int d = 0; d < 3; ++d) E[k][d] = P[k + 1][d] - P[0][d];
    const double det = det3(E);
    if (det == 0.0) return 0.0;
    // Rows of E^{-T}: the gradient of lambda_{k+1} is row k of inverse-transpose.
    const double inv = 1.0 / det;
    double C[3][3];
    C[0][0] = (E[1][1] * E[2][2] - E[1][2] * E[2][1]) * inv;
    C[0][1] = (E[1][2] * E[2][0] - E[1][0] * E[2][2]) * inv;
    C[0][2] = (E[1][0] * E[2][1] - E[1][1] * E[2][0]) * inv;
    C[1][0] = (E[0][2] * E[2][1] - E[0][1] * E[2][2]) * inv;
    C[1][1] = (E[0][0] * E[2][2] - E[0][2] * E[2][0]) * inv;
    C[1][2] = (E[0][1] * E[2][0] - E[0][0] * E[2][1]) * inv;
    C[2][0] = (E[0][1] * E[1][2] - E[0][2] * E[1][1]) * inv;
    C[2][1] = (E[0][2] * E[1][0] - E[0][0] * E[1][2]) * inv;
    C[2][2] = (E[0][0] * E[1][1] - E[0][1] * E[1][0]) * inv;
    for (int d = 0; d < 3; ++d) {
        G[0][d] = 0.0;
        for (int k = 0; k < 3; ++k) {
            G[k + 1][d] = C[k][d];
            G[0][d] -= C[k][d];
        }
    }
    return det;
}

// Newton projection onto {phi = 0} along grad phi.
std::array<double, 3> project_to_boundary(const ImplicitDomain& d, std::array<double, 3> x) {
    for (int it = 0; it < 40; ++it) {
        const Point z(x[0], x[1], x[2]);
        const double f = d.phi(z);
        if (std::abs(f) < 1e-15) break;
        const FullVector g = d.grad_phi(z);
        const double gg = g.dot(g);
        if (!(gg > 1e-300)) break;
        for (int a = 0; a < 3; ++a) x[a] -= f / gg * g[a];
    }
    return x;
}

double dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

int stencil_code(const std::array<int, 3>& d) { return (d[2] + 1) * 9 + (d[1] + 1) * 3 + (d[0] + 1); }

}  // namespace

const std::array<Corners, Discretization::kTypes>& element_corner_offsets() {
    static const auto table = make_offsets();
    return table;
}

Discretization::Discretization(const Grid& grid, const RegionMask& mask, int threads)
    : grid_(grid), mask_(mask), threads_(threads) {
    build(nullptr, 0.0);
}

Discretization::Discretization(const Grid& grid, const RegionMask& mask, const AnnulusProblem& problem,
                               double snap_fraction, int threads)
    : grid_(grid), mask_(mask), threads_(threads) {
    if (snap_fraction < 0.0 || snap_fraction >= 0.5) throw Error("snap fraction must lie in [0, 0.5)");
    build(&problem, snap_fraction);
}

void Discretization::build(const AnnulusProblem* problem, double snap_fraction) {
    const std::size_t N = grid_.node_count();
    if (mask_.labels.size() != N) throw DimensionMismatch("mask size differs from grid");
    const auto& res = grid_.res();
    const auto& h = grid_.h();
    const auto& offsets = element_corner_offsets();

    pos_.resize(3 * N);
    for (std::size_t n = 0; n < N; ++n) {
        const auto c = grid_.coord(n);
        std::copy(c.begin(), c.end(), pos_.begin() + 3 * n);
    }
    pinned_region_ = mask_.labels;

    // Snap Free nodes lying within snap_fraction * h of a boundary.
    if (problem && snap_fraction > 0.0) {
        const double hmin = std::min({h[0], h[1], h[2]});
        const double hmax = std::max({h[0], h[1], h[2]});
        for (std::size_t n = 0; n < N; ++n) {
            if (mask_.labels[n] != Region::Free) continue;
            const auto x = grid_.coord(n);
            const Point z(x[0], x[1], x[2]);
            for (const auto* dom : {&problem->inner(), &problem->outer()}) {
                const double f = dom->phi(z);
                const double gn = dom->grad_phi(z).norm();
                if (!(gn > 0.0) || std::abs(f) / gn > 2.0 * hmax) continue;
                const auto q = project_to_boundary(*dom, x);
                if (dist(q, x) < snap_fraction * hmin) {
                    std::copy(q.begin(), q.end(), pos_.begin() + 3 * n);
                    pinned_region_[n] = dom == &problem->inner() ? Region::Inner : Region::Outer;
                    snapped_.push_back(n);
                    break;
                }
            }
        }
    }

    dof_index_.assign(N, -1);
    for (std::size_t n = 0; n < N; ++n)
        if (pinned_region_[n] == Region::Free) {
            dof_index_[n] = static_cast<int>(dof_nodes_.size());
            dof_nodes_.push_back(n);
        }

    // Regular element geometry.
    for (int t = 0; t < kTypes; ++t) {
        std::array<std::array<double, 3>, 4> P{};
        for (int v = 0; v < 4; ++v)
            for (int a = 0; a < 3; ++a) P[v][a] = offsets[t][v][a] * h[a];
        const double det = barycentric_gradients(P, regular_[t].G);
        type_sign_[t] = det > 0.0 ? 1.0 : -1.0;
        regular_[t].vol = std::abs(det) / 6.0 / kOrientations;
    }

    // Active elements, ordered by cube layer.
    layer_begin_.assign(res[2], 0);
    for (int k = 0; k + 1 < res[2]; ++k) {
        layer_begin_[k] = tets_.size();
        for (int j = 0; j + 1 < res[1]; ++j)
            for (int i = 0; i + 1 < res[0]; ++i)
                for (int t = 0; t < kTypes; ++t) {
                    Tet tet{};
                    bool active = false;
                    for (int v = 0; v < 4; ++v) {
                        const auto& o = offsets[t][v];
                        const std::size_t node = grid_.index(i + o[0], j + o[1], k + o[2]);
                        tet.v[v] = static_cast<std::int32_t>(node);
                        active = active || dof_index_[node] >= 0;
                    }
                    if (!active) continue;
                    tet.geom = t;
                    tet.type = static_cast<std::uint8_t>(t);
                    tets_.push_back(tet);
                }
    }
    layer_begin_[res[2] - 1] = tets_.size();

    if (problem) {
        // Move pinned vertices of active elements onto their boundary.
        std::vector<std::array<double, 3>> disp(N, {0.0, 0.0, 0.0});
        std::vector<char> pinned_used(N, 0);
        for (const auto& t : tets_)
            for (auto v : t.v)
                if (dof_index_[v] < 0) pinned_used[v] = 1;
        // Snapped nodes already sit on their boundary; that is their fallback position.
        const std::vector<double> grid_pos = pos_;
        for (std::size_t n = 0; n < N; ++n) {
            if (!pinned_used[n]) continue;
            const auto& dom = pinned_region_[n] == Region::Inner ? problem->inner() : problem->outer();
            const auto x = position(n);
            const auto q = project_to_boundary(dom, x);
            for (int a = 0; a < 3; ++a) disp[n][a] = q[a] - x[a];
        }
        auto place = [&](std::size_t n) {
            for (int a = 0; a < 3; ++a) pos_[3 * n + a] = grid_pos[3 * n + a] + disp[n][a];
        };
        for (std::size_t n = 0; n < N; ++n)
            if (pinned_used[n]) place(n);

        // Halve displacements around inverted or flattened elements.
        const double min_ratio = 0.05;
        const int rounds = 12;
        for (int round = 0; round <= rounds; ++round) {
            std::vector<std::size_t> shrink;
            for (const auto& t : tets_) {
                bool moved = false;
                for (auto v : t.v) moved = moved || dof_index_[v] < 0;
                if (!moved) continue;
                std::array<std::array<double, 3>, 4> P{};
                for (int v = 0; v < 4; ++v) P[v] = position(t.v[v]);
                double G[4][3];
                const double det = barycentric_gradients(P, G) * type_sign_[t.type];
                if (det > min_ratio * regular_[t.type].vol * 6.0 * kOrientations) continue;
                for (auto v : t.v)
                    if (dof_index_[v] < 0) shrink.push_back(v);
            }
            if (shrink.empty()) break;
            std::sort(shrink.begin(), shrink.end());
            shrink.erase(std::unique(shrink.begin(), shrink.end()), shrink.end());
            for (auto n : shrink) {
                for (int a = 0; a < 3; ++a) disp[n][a] = round == rounds ? 0.0 : 0.5 * disp[n][a];
                place(n);
            }
        }
        std::vector<char> off_grid(N, 0);
        for (std::size_t n = 0; n < N; ++n) {
            const auto c = grid_.coord(n);
            if (pos_[3 * n] != c[0] || pos_[3 * n + 1] != c[1] || pos_[3 * n + 2] != c[2]) {
                off_grid[n] = 1;
                ++moved_count_;
            }
        }

        for (auto& t : tets_) {
            bool moved = false;
            for (auto v : t.v) moved = moved || off_grid[v];
            if (!moved) continue;
            std::array<std::array<double, 3>, 4> P{};
            for (int v = 0; v < 4; ++v) P[v] = position(t.v[v]);
            Geometry g{};
            const double det = barycentric_gradients(P, g.G);
            g.vol = std::abs(det) / 6.0 / kOrientations;
            t.geom = static_cast<std::int32_t>(kTypes + irregular_.size());
            irregular_.push_back(g);
        }
    }
    build_pattern();
}

void Discretization::build_pattern() {
    const std::size_t M = dof_nodes_.size();
    row_ptr_.assign(M + 1, 0);
    cols_.clear();
    slot_.assign(M * 27, -1);
    for (std::size_t r = 0; r < M; ++r) {
        const auto c = grid_.ijk(dof_nodes_[r]);
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const std::size_t nb = grid_.index(c[0] + dx, c[1] + dy, c[2] + dz);
                    const int col = dof_index_[nb];
                    if (col < 0) continue;
                    slot_[r * 27 + stencil_code({dx, dy, dz})] = static_cast<int>(cols_.size());
                    cols_.push_back(col);
                }
        row_ptr_[r + 1] = static_cast<int>(cols_.size());
    }
}

double Discretization::active_volume() const {
    double s = 0.0;
    for (const auto& t : tets_) s += geometry(t).vol;
    return s;
}

void Discretization::frame_coefficients(const Tet& t, const Geometry& g, double hx[4], double hy[4]) const {
    double cx = 0.0;
    double cy = 0.0;
    for (auto v : t.v) {
        cx += pos_[3 * v];
        cy += pos_[3 * v + 1];
    }
    cx *= 0.25;
    cy *= 0.25;
    for (int k = 0; k < 4; ++k) {
        hx[k] = g.G[k][0] + 2.0 * cy * g.G[k][2];
        hy[k] = g.G[k][1] - 2.0 * cx * g.G[k][2];
    }
}

template <class F>
void Discretization::for_each_layer_colored(F&& f) const {
    const std::size_t layers = layer_begin_.size() - 1;
    for (std::size_t parity = 0; parity < 2; ++parity) {
        const std::size_t count = (layers + 1 - parity) / 2;
        parallel_for(count, threads_, [&](std::size_t i) {
            const std::size_t k = 2 * i + parity;
            f(k, layer_begin_[k], layer_begin_[k + 1]);
        });
    }
}

namespace {

inline double power_half(double s, double p) { return p == 2.0 ? s : std::pow(s, 0.5 * p); }

}  // namespace

double Discretization::energy(std::span<const double> u, double p, double eps) const {
    if (u.size() != grid_.node_count()) throw DimensionMismatch("nodal vector size differs from grid");
    std::vector<double> partial(layer_begin_.size(), 0.0);
    for_each_layer_colored([&](std::size_t k, std::size_t b, std::size_t e) {
        double s = 0.0;
        double hx[4];
        double hy[4];
        for (std::size_t i = b; i < e; ++i) {
            const Tet& t = tets_[i];
            const Geometry& g = geometry(t);
            frame_coefficients(t, g, hx, hy);
            double gx = 0.0;
            double gy = 0.0;
            for (int v = 0; v < 4; ++v) {
                gx += hx[v] * u[t.v[v]];
                gy += hy[v] * u[t.v[v]];
            }
            s += g.vol * power_half(gx * gx + gy * gy + eps * eps, p);
        }
        partial[k] = s;
    });
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

void Discretization::gradient(std::span<const double> u, double p, double eps, std::vector<double>& out) const {
    if (u.size() != grid_.node_count()) throw DimensionMismatch("nodal vector size differs from grid");
    out.assign(dof_nodes_.size(), 0.0);
    for_each_layer_colored([&](std::size_t, std::size_t b, std::size_t e) {
        double hx[4];
        double hy[4];
        for (std::size_t i = b; i < e; ++i) {
            const Tet& t = tets_[i];
            const Geometry& g = geometry(t);
            frame_coefficients(t, g, hx, hy);
            double gx = 0.0;
            double gy = 0.0;
            for (int v = 0; v < 4; ++v) {
                gx += hx[v] * u[t.v[v]];
                gy += hy[v] * u[t.v[v]];
            }
            const double s = gx * gx + gy * gy + eps * eps;
            const double w = g.vol * p * (p == 2.0 ? 1.0 : std::pow(s, 0.5 * p - 1.0));
            for (int v = 0; v < 4; ++v) {
                const int d = dof_index_[t.v[v]];
                if (d >= 0) out[d] += w * (gx * hx[v] + gy * hy[v]);
            }
        }
    });
}

void Discretization::hessian(std::span<const double> u, double p, double eps, HessianKind kind, CsrMatrix& H) const {
    if (u.size() != grid_.node_count()) throw DimensionMismatch("nodal vector size differs from grid");
    H.rows = static_cast<int>(dof_nodes_.size());
    H.row_ptr = row_ptr_;
    H.cols = cols_;
    H.vals.assign(cols_.size(), 0.0);
    const auto& offsets = element_corner_offsets();
    for_each_layer_colored([&](std::size_t, std::size_t b, std::size_t e) {
        double hx[4];
        double hy[4];
        for (std::size_t i = b; i < e; ++i) {
            const Tet& t = tets_[i];
            const Geometry& g = geometry(t);
            frame_coefficients(t, g, hx, hy);
            double gx = 0.0;
            double gy = 0.0;
            for (int v = 0; v < 4; ++v) {
                gx += hx[v] * u[t.v[v]];
                gy += hy[v] * u[t.v[v]];
            }
            const double s = gx * gx + gy * gy + eps * eps;
            const double w = g.vol * p * (p == 2.0 ? 1.0 : std::pow(s, 0.5 * p - 1.0));
            const double w2 =
                kind == HessianKind::Newton && p != 2.0 ? g.vol * p * (p - 2.0) * std::pow(s, 0.5 * p - 2.0) : 0.0;
            double proj[4];
            for (int v = 0; v < 4; ++v) proj[v] = gx * hx[v] + gy * hy[v];
            const auto& off = offsets[t.type];
            for (int a = 0; a < 4; ++a) {
                const int da = dof_index_[t.v[a]];
                if (da < 0) continue;
                for (int c = 0; c < 4; ++c) {
                    const int dc = dof_index_[t.v[c]];
                    if (dc < 0) continue;
                    const int code =
                        stencil_code({off[c][0] - off[a][0], off[c][1] - off[a][1], off[c][2] - off[a][2]});
                    H.vals[slot_[static_cast<std::size_t>(da) * 27 + code]] +=
                        w * (hx[a] * hx[c] + hy[a] * hy[c]) + w2 * proj[a] * proj[c];
                }
            }
        }
    });
}

double Discretization::interpolate(std::span<const double> u, std::size_t node) const {
    // Each orientation is a conforming triangulation; average their interpolants.
    const auto x = grid_.coord(node);
    const auto c = grid_.ijk(node);
    const auto& res = grid_.res();
    const auto& offsets = element_corner_offsets();
    double total = 0.0;
    int used = 0;
    for (int o = 0; o < kOrientations; ++o) {
        double best_min = -std::numeric_limits<double>::infinity();
        double best_val = 0.0;
        bool best_active = false;
        for (int dz = -1; dz <= 0; ++dz)
            for (int dy = -1; dy <= 0; ++dy)
                for (int dx = -1; dx <= 0; ++dx) {
                    const int ci = c[0] + dx;
                    const int cj = c[1] + dy;
                    const int ck = c[2] + dz;
                    if (ci < 0 || cj < 0 || ck < 0 || ci + 1 >= res[0] || cj + 1 >= res[1] || ck + 1 >= res[2])
                        continue;
                    for (int t = 6 * o; t < 6 * o + 6; ++t) {
                        std::array<std::array<double, 3>, 4> P{};
                        std::array<std::size_t, 4> ids{};
                        bool active = false;
                        for (int v = 0; v < 4; ++v) {
                            const auto& off = offsets[t][v];
                            ids[v] = grid_.index(ci + off[0], cj + off[1], ck + off[2]);
                            P[v] = position(ids[v]);
                            active = active || dof_index_[ids[v]] >= 0;
                        }
                        double G[4][3];
                        const double det = barycentric_gradients(P, G);
                        if (!(det * type_sign_[t] > 0.0)) continue;  // inverted by boundary moves
                        double lam[4];
                        for (int k = 1; k < 4; ++k) {
                            lam[k] = 0.0;
                            for (int a = 0; a < 3; ++a) lam[k] += G[k][a] * (x[a] - P[0][a]);
                        }
                        lam[0] = 1.0 - lam[1] - lam[2] - lam[3];
                        const double lmin = std::min({lam[0], lam[1], lam[2], lam[3]});
                        // Prefer elements that carry a degree of freedom once the point is inside.
                        const bool inside = lmin >= -1e-12;
                        const bool best_inside = best_min >= -1e-12;
                        const bool better = inside && best_inside ? (active && !best_active) ||
                                                                        (active == best_active && lmin > best_min)
                                                                  : lmin > best_min;
                        if (!better) continue;
                        double wsum = 0.0;
                        double val = 0.0;
                        for (int k = 0; k < 4; ++k) {
                            const double l = std::max(lam[k], 0.0);
                            wsum += l;
                            val += l * u[ids[k]];
                        }
                        if (wsum <= 0.0) continue;
                        best_min = lmin;
                        best_val = val / wsum;
                        best_active = active;
                    }
                }
        if (best_min > -std::numeric_limits<double>::infinity()) {
            total += best_val;
            ++used;
        }
    }
    return used > 0 ? total / used : u[node];
}

}  // namespace heis
