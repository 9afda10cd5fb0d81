#include "heis/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <unordered_map>

#include "heis/discretization.hpp"

namespace heis {

std::vector<Vec3> full_gradient(const ScalarField& f) {
    const auto& g = f.grid;
    std::vector<Vec3> out(g.node_count(), Vec3{0.0, 0.0, 0.0});
    for (std::size_t n = 0; n < out.size(); ++n) {
        if (f.mask.labels[n] != Region::Free) continue;
        const auto c = g.ijk(n);
        for (int a = 0; a < 3; ++a) {
            auto lo = c;
            auto hi = c;
            --lo[a];
            ++hi[a];
            out[n][a] = (f.at(hi[0], hi[1], hi[2]) - f.at(lo[0], lo[1], lo[2])) / (2.0 * g.h()[a]);
        }
    }
    return out;
}

std::vector<std::size_t> certified_nodes(const ScalarField& f, int m) {
    if (m < 1) throw Error("certification margin m must be >= 1");
    const auto& g = f.grid;
    const auto& res = g.res();
    // ok[n]: every node within Chebyshev distance (m - 1) of n is Free.
    std::vector<char> ok(g.node_count());
    for (std::size_t n = 0; n < ok.size(); ++n) ok[n] = f.mask.labels[n] == Region::Free;
    for (int pass = 1; pass < m; ++pass) {
        std::vector<char> next(ok.size(), 0);
        for (int k = 1; k + 1 < res[2]; ++k)
            for (int j = 1; j + 1 < res[1]; ++j)
                for (int i = 1; i + 1 < res[0]; ++i) {
                    bool all = true;
                    for (int dz = -1; dz <= 1 && all; ++dz)
                        for (int dy = -1; dy <= 1 && all; ++dy)
                            for (int dx = -1; dx <= 1 && all; ++dx) all = ok[g.index(i + dx, j + dy, k + dz)];
                    next[g.index(i, j, k)] = all;
                }
        ok.swap(next);
    }
    std::vector<std::size_t> out;
    for (std::size_t n = 0; n < ok.size(); ++n)
        if (ok[n]) out.push_back(n);
    return out;
}

namespace {

double z_pairing(const Vec3& v, const Vec3& x) { return v[0] * x[0] + v[1] * x[1] + 2.0 * v[2] * x[2]; }

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

}  // namespace

PairingField pairing_field(const ScalarField& f, int m) {
    PairingField pf;
    pf.m = m;
    pf.nodes = certified_nodes(f, m);
    if (pf.nodes.empty()) throw NoCertifiedNodes("no certified nodes at this margin");
    const auto grad = full_gradient(f);
    pf.values.reserve(pf.nodes.size());
    for (std::size_t n : pf.nodes) pf.values.push_back(z_pairing(grad[n], f.grid.coord(n)));
    return pf;
}

SignCertificate sign_certificate(const ScalarField& f, int m) {
    const PairingField pf = pairing_field(f, m);
    const auto grad = full_gradient(f);
    SignCertificate c;
    c.m = m;
    c.certified_nodes = pf.nodes.size();
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t arg = pf.nodes.front();
    c.min_gradient_norm = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pf.nodes.size(); ++i) {
        if (pf.values[i] > worst) {
            worst = pf.values[i];
            arg = pf.nodes[i];
        }
        c.min_gradient_norm = std::min(c.min_gradient_norm, norm3(grad[pf.nodes[i]]));
    }
    c.M = -worst;
    c.worst = f.grid.node_point(arg);
    c.pass = c.M > 0.0;
    c.note = "sampled at grid nodes " + std::to_string(m) +
             " or more layers from pinned nodes; points where the continuum gradient fails to exist cannot be "
             "distinguished";
    return c;
}

namespace {

Vec3 trilinear_vector(const Grid& g, const std::vector<Vec3>& v, int i, int j, int k, const Vec3& x) {
    double w[3];
    const int c[3] = {i, j, k};
    for (int a = 0; a < 3; ++a) w[a] = std::clamp((x[a] - (g.lo()[a] + c[a] * g.h()[a])) / g.h()[a], 0.0, 1.0);
    Vec3 out{0.0, 0.0, 0.0};
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const double s = (dx ? w[0] : 1.0 - w[0]) * (dy ? w[1] : 1.0 - w[1]) * (dz ? w[2] : 1.0 - w[2]);
                const auto& gv = v[g.index(i + dx, j + dy, k + dz)];
                for (int a = 0; a < 3; ++a) out[a] += s * gv[a];
            }
    return out;
}

// Central differences at every node (one-sided on the box faces), pinned values included.
std::vector<Vec3> nodal_gradient(const ScalarField& f) {
    const auto& g = f.grid;
    const auto& res = g.res();
    std::vector<Vec3> out(g.node_count());
    for (std::size_t n = 0; n < out.size(); ++n) {
        const auto c = g.ijk(n);
        for (int a = 0; a < 3; ++a) {
            auto lo = c;
            auto hi = c;
            if (c[a] > 0) --lo[a];
            if (c[a] + 1 < res[a]) ++hi[a];
            out[n][a] = (f.at(hi[0], hi[1], hi[2]) - f.at(lo[0], lo[1], lo[2])) / ((hi[a] - lo[a]) * g.h()[a]);
        }
    }
    return out;
}

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

LevelSurface extract_level_surface(const ScalarField& f, double level, int m) {
    if (!(level > 0.0 && level < 1.0)) throw Error("level must lie in (0, 1)");
    const auto& g = f.grid;
    const auto& res = g.res();
    if (m < 0) throw Error("certification margin m must be >= 0");
    std::vector<char> cert(g.node_count(), m == 0);
    if (m > 0)
        for (std::size_t n : certified_nodes(f, m)) cert[n] = 1;
    const auto grad = m == 0 ? nodal_gradient(f) : full_gradient(f);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t n = 0; n < f.values.size(); ++n)
        if (f.mask.labels[n] == Region::Free) {
            lo = std::min(lo, f.values[n]);
            hi = std::max(hi, f.values[n]);
        }
    if (!(level > lo && level < hi)) throw EmptySurface("level lies outside the range of computed values");
    const auto& offsets = element_corner_offsets();

    LevelSurface s;
    s.level = level;
    std::unordered_map<std::uint64_t, int> edge_vertex;
    const std::uint64_t N = g.node_count();

    for (int k = 0; k + 1 < res[2]; ++k)
        for (int j = 0; j + 1 < res[1]; ++j)
            for (int i = 0; i + 1 < res[0]; ++i) {
                bool all = true;
                for (int c = 0; c < 8 && all; ++c) all = cert[g.index(i + (c & 1), j + (c >> 1 & 1), k + (c >> 2))];
                if (!all) continue;
                // Six Kuhn tetrahedra around the main diagonal.
                for (int t = 0; t < 6; ++t) {
                    std::size_t ids[4];
                    Vec3 P[4];
                    double val[4];
                    int inside = 0;
                    for (int v = 0; v < 4; ++v) {
                        const auto& o = offsets[t][v];
                        ids[v] = g.index(i + o[0], j + o[1], k + o[2]);
                        P[v] = g.coord(ids[v]);
                        val[v] = f.values[ids[v]];
                        inside += val[v] >= level;
                    }
                    if (inside == 0 || inside == 4) continue;
                    auto vertex_on = [&](int a, int b) {
                        const std::uint64_t lo = std::min(ids[a], ids[b]);
                        const std::uint64_t hi = std::max(ids[a], ids[b]);
                        const std::uint64_t key = lo * N + hi;
                        auto it = edge_vertex.find(key);
                        if (it != edge_vertex.end()) return it->second;
                        const double r = (level - val[a]) / (val[b] - val[a]);
                        Vec3 x;
                        for (int d = 0; d < 3; ++d) x[d] = P[a][d] + r * (P[b][d] - P[a][d]);
                        Vec3 gr = trilinear_vector(g, grad, i, j, k, x);
                        const double gn = norm3(gr);
                        Vec3 nu{0.0, 0.0, 0.0};
                        if (gn > 0.0)
                            for (int d = 0; d < 3; ++d) nu[d] = -gr[d] / gn;
                        const int id = static_cast<int>(s.vertices.size());
                        s.vertices.push_back(x);
                        s.normals.push_back(nu);
                        s.pairing.push_back(z_pairing(nu, x));
                        edge_vertex.emplace(key, id);
                        return id;
                    };
                    // Gradient of the linear interpolant orients the triangles.
                    Vec3 lin{0.0, 0.0, 0.0};
                    {
                        const Vec3 e1 = sub(P[1], P[0]);
                        const Vec3 e2 = sub(P[2], P[0]);
                        const Vec3 e3 = sub(P[3], P[0]);
                        const double det = dot(e1, cross(e2, e3));
                        const Vec3 c23 = cross(e2, e3);
                        const Vec3 c31 = cross(e3, e1);
                        const Vec3 c12 = cross(e1, e2);
                        for (int d = 0; d < 3; ++d)
                            lin[d] = ((val[1] - val[0]) * c23[d] + (val[2] - val[0]) * c31[d] +
                                      (val[3] - val[0]) * c12[d]) /
                                     det;
                    }
                    auto emit = [&](int a, int b, int c) {
                        const Vec3 nrm = cross(sub(s.vertices[b], s.vertices[a]), sub(s.vertices[c], s.vertices[a]));
                        if (dot(nrm, lin) > 0.0) std::swap(b, c);  // face along -grad u
                        s.triangles.push_back({a, b, c});
                    };
                    std::vector<int> in;
                    std::vector<int> out;
                    for (int v = 0; v < 4; ++v) (val[v] >= level ? in : out).push_back(v);
                    if (in.size() == 1 || out.size() == 1) {
                        const int lone = in.size() == 1 ? in[0] : out[0];
                        const auto& rest = in.size() == 1 ? out : in;
                        emit(vertex_on(lone, rest[0]), vertex_on(lone, rest[1]), vertex_on(lone, rest[2]));
                    } else {
                        const int a = vertex_on(in[0], out[0]);
                        const int b = vertex_on(in[0], out[1]);
                        const int c = vertex_on(in[1], out[1]);
                        const int d = vertex_on(in[1], out[0]);
                        emit(a, b, c);
                        emit(a, c, d);
                    }
                }
            }
    if (s.triangles.empty()) throw EmptySurface("level set does not cross the certified region");
    return s;
}

bool is_closed(const LevelSurface& s) {
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : s.triangles)
        for (int e = 0; e < 3; ++e) {
            const int a = t[e];
            const int b = t[(e + 1) % 3];
            ++count[{std::min(a, b), std::max(a, b)}];
        }
    return std::all_of(count.begin(), count.end(), [](const auto& kv) { return kv.second == 2; });
}

StarshapednessReport level_starshape(const LevelSurface& s) {
    if (s.vertices.empty()) throw EmptySurface("empty level surface");
    StarshapednessReport r;
    r.sample_count = static_cast<int>(s.vertices.size());
    r.min_pairing = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.vertices.size(); ++i)
        if (s.pairing[i] < r.min_pairing) {
            r.min_pairing = s.pairing[i];
            r.argmin = Point(s.vertices[i][0], s.vertices[i][1], s.vertices[i][2]);
        }
    return r;
}

namespace {

double exterior_value(const ScalarField& f) {
    if (f.mask.labels.front() != Region::Outer) throw Error("grid corner is not an exterior node");
    return f.values.front();
}

// Catmull-Rom tensor interpolation; C1, and its gradient at a node is the
// central difference. Falls back to trilinear within one cell of the box face.
double sample_cubic(const ScalarField& f, const Vec3& x) {
    const auto& g = f.grid;
    const auto& res = g.res();
    int c[3];
    double w[3][4];
    for (int a = 0; a < 3; ++a) {
        const double r = (x[a] - g.lo()[a]) / g.h()[a];
        c[a] = static_cast<int>(std::floor(r));
        if (c[a] < 1 || c[a] + 2 > res[a] - 1) return sample_trilinear(f, x);
        const double s = r - c[a];
        w[a][0] = 0.5 * (-s * s * s + 2.0 * s * s - s);
        w[a][1] = 0.5 * (3.0 * s * s * s - 5.0 * s * s + 2.0);
        w[a][2] = 0.5 * (-3.0 * s * s * s + 4.0 * s * s + s);
        w[a][3] = 0.5 * (s * s * s - s * s);
    }
    double v = 0.0;
    for (int dz = 0; dz < 4; ++dz)
        for (int dy = 0; dy < 4; ++dy)
            for (int dx = 0; dx < 4; ++dx)
                v += w[0][dx] * w[1][dy] * w[2][dz] * f.at(c[0] - 1 + dx, c[1] - 1 + dy, c[2] - 1 + dz);
    return v;
}

}  // namespace

double dilation_quotient_at(const ScalarField& f, std::size_t node, double lambda) {
    if (lambda == 0.0) throw Error("lambda must be nonzero");
    const Point z = dilate_point(f.grid.node_point(node), lambda);
    const Vec3 x{z.x(0), z.y(0), z.t()};
    double v = exterior_value(f);
    try {
        v = sample_cubic(f, x);
    } catch (const ResampleRangeError&) {
    }
    return (v - f.values[node]) / lambda;
}

DilationComparisonReport dilation_comparison_check(const ScalarField& f, double lambda, int m) {
    if (!(lambda > 0.0)) throw Error("lambda must be positive");
    const auto nodes = certified_nodes(f, m);
    if (nodes.empty()) throw NoCertifiedNodes("no certified nodes at this margin");
    const double outside = exterior_value(f);
    const ScalarField ul = resample_dilated(f, lambda, f.grid, &outside);
    DilationComparisonReport r;
    r.lambda = lambda;
    r.nodes = nodes.size();
    r.max_quotient = -std::numeric_limits<double>::infinity();
    for (std::size_t n : nodes) {
        const double q = (ul.values[n] - f.values[n]) / lambda;
        if (q > r.max_quotient) {
            r.max_quotient = q;
            r.argmax = f.grid.node_point(n);
        }
    }
    r.pass = r.max_quotient < 0.0;
    return r;
}

void write_ply(const LevelSurface& s, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    os.precision(10);
    os << "ply\nformat ascii 1.0\n";
    os << "comment level " << s.level << "\n";
    os << "element vertex " << s.vertices.size() << "\n";
    os << "property double x\nproperty double y\nproperty double z\n";
    os << "property double nx\nproperty double ny\nproperty double nz\n";
    os << "property double pairing\n";
    os << "element face " << s.triangles.size() << "\n";
    os << "property list uchar int vertex_indices\nend_header\n";
    for (std::size_t i = 0; i < s.vertices.size(); ++i) {
        const auto& v = s.vertices[i];
        const auto& nrm = s.normals[i];
        os << v[0] << ' ' << v[1] << ' ' << v[2] << ' ' << nrm[0] << ' ' << nrm[1] << ' ' << nrm[2] << ' '
           << s.pairing[i] << '\n';
    }
    for (const auto& t : s.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    if (!os) throw Error("write failed for " + path);
}

}  // namespace heis
