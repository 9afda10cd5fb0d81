#include "heis/domains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

namespace heis {

bool Box::contains(const Point& z) const {
    const auto c = z.coords();
    if (c.size() != lo.size()) throw DimensionMismatch("box and point dimensions differ");
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i] < lo[i] || c[i] > hi[i]) return false;
    return true;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double euclid_dist_sq(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.coords().size(); ++i) {
        const double d = a.coords()[i] - b.coords()[i];
        s += d * d;
    }
    return s;
}

}  // namespace

ImplicitDomain::ImplicitDomain(int n, Kind kind) : n_(n), kind_(std::move(kind)) {
    if (n < 1) throw Error("ambient dimension n must be >= 1");
}

std::string ImplicitDomain::kind_name() const {
    return std::visit(overloaded{[](const GaugeBallKind&) { return std::string("gauge_ball"); },
                                 [](const AnisotropicGaugeKind&) { return std::string("anisotropic_gauge"); },
                                 [](const EuclideanBallKind&) { return std::string("euclidean_ball"); },
                                 [](const DilatedKind&) { return std::string("dilated"); }},
                      kind_);
}

double ImplicitDomain::phi(const Point& z) const {
    if (z.dim() != n_) throw DimensionMismatch("point dimension differs from domain");
    return std::visit(
        overloaded{[&](const GaugeBallKind& k) {
                       const double R2 = k.R * k.R;
                       return gauge_norm4(group_product(group_inverse(k.center), z)) - R2 * R2;
                   },
                   [&](const AnisotropicGaugeKind& k) {
                       const double s = z.horizontal_sq();
                       const double R2 = k.R * k.R;
                       return s * s + k.a * z.t() * z.t() - R2 * R2;
                   },
                   [&](const EuclideanBallKind& k) { return euclid_dist_sq(z, k.center) - k.R * k.R; },
                   [&](const DilatedKind& k) { return k.base->phi(dilate_point(z, -k.lambda)); }},
        kind_);
}

FullVector ImplicitDomain::grad_phi(const Point& z) const {
    if (z.dim() != n_) throw DimensionMismatch("point dimension differs from domain");
    return std::visit(overloaded{[&](const GaugeBallKind& k) { return translated_gauge4_gradient(k.center, z); },
                                 [&](const AnisotropicGaugeKind& k) {
                                     const double s = z.horizontal_sq();
                                     FullVector g(n_);
                                     for (int i = 0; i < n_; ++i) {
                                         g.x(i) = 4.0 * s * z.x(i);
                                         g.y(i) = 4.0 * s * z.y(i);
                                     }
                                     g.t() = 2.0 * k.a * z.t();
                                     return g;
                                 },
                                 [&](const EuclideanBallKind& k) {
                                     FullVector g(n_);
                                     for (std::size_t i = 0; i < g.size(); ++i)
                                         g[i] = 2.0 * (z.coords()[i] - k.center.coords()[i]);
                                     return g;
                                 },
                                 [&](const DilatedKind& k) {
                                     FullVector g = k.base->grad_phi(dilate_point(z, -k.lambda));
                                     const double s = std::exp(-k.lambda);
                                     for (int i = 0; i < 2 * n_; ++i) g[i] *= s;
                                     g.t() *= s * s;
                                     return g;
                                 }},
                      kind_);
}

Box ImplicitDomain::bounding_box() const {
    const int d = 2 * n_ + 1;
    Box b{std::vector<double>(d), std::vector<double>(d)};
    std::visit(overloaded{[&](const GaugeBallKind& k) {
                              // z = c.w with rho(w) <= R: |w_h| <= R, |w_t| <= R^2,
                              // and the twist term is bounded by 2 R |c_h|.
                              const double ch = std::sqrt(k.center.horizontal_sq());
                              for (int i = 0; i < 2 * n_; ++i) {
                                  b.lo[i] = k.center.coords()[i] - k.R;
                                  b.hi[i] = k.center.coords()[i] + k.R;
                              }
                              const double tr = k.R * k.R + 2.0 * k.R * ch;
                              b.lo[d - 1] = k.center.t() - tr;
                              b.hi[d - 1] = k.center.t() + tr;
                          },
                          [&](const AnisotropicGaugeKind& k) {
                              for (int i = 0; i < 2 * n_; ++i) {
                                  b.lo[i] = -k.R;
                                  b.hi[i] = k.R;
                              }
                              b.hi[d - 1] = k.R * k.R / std::sqrt(k.a);
                              b.lo[d - 1] = -b.hi[d - 1];
                          },
                          [&](const EuclideanBallKind& k) {
                              for (int i = 0; i < d; ++i) {
                                  b.lo[i] = k.center.coords()[i] - k.R;
                                  b.hi[i] = k.center.coords()[i] + k.R;
                              }
                          },
                          [&](const DilatedKind& k) {
                              b = k.base->bounding_box();
                              const double s = std::exp(k.lambda);
                              for (int i = 0; i < d; ++i) {
                                  const double f = i == d - 1 ? s * s : s;
                                  b.lo[i] *= f;
                                  b.hi[i] *= f;
                              }
                          }},
               kind_);
    return b;
}

ImplicitDomain make_gauge_ball(const Point& center, double R) {
    if (!(R > 0.0)) throw Error("gauge ball radius must be positive");
    return ImplicitDomain(center.dim(), GaugeBallKind{center, R});
}

ImplicitDomain make_anisotropic_gauge(double a, double R, int n) {
    if (!(a > 0.0)) throw Error("anisotropy a must be positive");
    if (!(R > 0.0)) throw Error("anisotropic gauge radius must be positive");
    return ImplicitDomain(n, AnisotropicGaugeKind{a, R});
}

ImplicitDomain make_euclidean_ball(const Point& center, double R) {
    if (!(R > 0.0)) throw Error("euclidean ball radius must be positive");
    return ImplicitDomain(center.dim(), EuclideanBallKind{center, R});
}

ImplicitDomain dilate_domain(const ImplicitDomain& d, double lambda) {
    if (!std::isfinite(lambda)) throw Error("dilation parameter must be finite");
    const double s = std::exp(lambda);
    return std::visit(
        overloaded{[&](const GaugeBallKind& k) {
                       return ImplicitDomain(d.dim(), GaugeBallKind{dilate_point(k.center, lambda), s * k.R});
                   },
                   // phi(delta_{-l} z) = e^{-4l} (s^2 + a t^2) - R^4, same zero set as radius e^l R.
                   [&](const AnisotropicGaugeKind& k) {
                       return ImplicitDomain(d.dim(), AnisotropicGaugeKind{k.a, s * k.R});
                   },
                   [&](const EuclideanBallKind&) {
                       return ImplicitDomain(d.dim(),
                                             DilatedKind{std::make_shared<const ImplicitDomain>(d), lambda});
                   },
                   [&](const DilatedKind& k) {
                       return ImplicitDomain(d.dim(), DilatedKind{k.base, k.lambda + lambda});
                   }},
        d.kind());
}

bool contains(const ImplicitDomain& d, const Point& z) { return d.phi(z) < 0.0; }

namespace {

std::vector<std::vector<double>> sample_directions(int dim, int N, std::uint64_t seed) {
    std::vector<std::vector<double>> dirs;
    dirs.reserve(N);
    std::mt19937_64 rng(seed);
    if (dim == 3) {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < N; ++i) {
            const double zc = 1.0 - (2.0 * i + 1.0) / N;
            const double r = std::sqrt(std::max(0.0, 1.0 - zc * zc));
            const double th = golden * i;
            dirs.push_back({r * std::cos(th), r * std::sin(th), zc});
        }
    } else {
        std::normal_distribution<double> gauss;
        while (static_cast<int>(dirs.size()) < N) {
            std::vector<double> v(dim);
            double s = 0.0;
            for (double& c : v) {
                c = gauss(rng);
                s += c * c;
            }
            if (s < 1e-20) continue;
            for (double& c : v) c /= std::sqrt(s);
            dirs.push_back(std::move(v));
        }
    }
    if (seed != 0 && dim == 3) {
        // Seeded rotation: orthonormalize three gaussian vectors.
        std::normal_distribution<double> gauss;
        double M[3][3];
        for (auto& row : M)
            for (double& c : row) c = gauss(rng);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < i; ++j) {
                double d = 0.0;
                for (int k = 0; k < 3; ++k) d += M[i][k] * M[j][k];
                for (int k = 0; k < 3; ++k) M[i][k] -= d * M[j][k];
            }
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += M[i][k] * M[i][k];
            for (int k = 0; k < 3; ++k) M[i][k] /= std::sqrt(s);
        }
        for (auto& v : dirs) {
            std::vector<double> w(3, 0.0);
            for (int i = 0; i < 3; ++i)
                for (int k = 0; k < 3; ++k) w[i] += M[i][k] * v[k];
            v = std::move(w);
        }
    }
    return dirs;
}

Point along(const Point& anchor, const std::vector<double>& dir, double s) {
    std::vector<double> c(anchor.coords().begin(), anchor.coords().end());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += s * dir[i];
    return Point::from_coords(anchor.dim(), c);
}

BoundarySample cast_ray(const ImplicitDomain& d, const Point& anchor, const std::vector<double>& dir, double reach) {
    const int steps = 512;
    const double ds = 2.0 * reach / steps;
    double a = 0.0;
    double b = -1.0;
    for (int k = 1; k <= steps; ++k) {
        const double s = k * ds;
        if (d.phi(along(anchor, dir, s)) >= 0.0) {
            b = s;
            break;
        }
        a = s;
    }
    if (b < 0.0) throw SamplingError("ray from anchor does not leave the domain");
    double fa = d.phi(along(anchor, dir, a));
    double fb = d.phi(along(anchor, dir, b));
    for (int it = 0; it < 200 && b - a > 4.0 * std::numeric_limits<double>::epsilon() * b; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = d.phi(along(anchor, dir, m));
        if (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    const double s = std::abs(fa) < std::abs(fb) ? a : b;
    Point z = along(anchor, dir, s);
    if (std::abs(d.phi(z)) > 1e-10) throw SamplingError("bisection did not reach |phi| <= 1e-10");
    FullVector g = d.grad_phi(z);
    const double gn = g.norm();
    if (!(gn > 0.0)) throw SamplingError("defining function has a vanishing gradient on the boundary");
    for (std::size_t i = 0; i < g.size(); ++i) g[i] /= gn;
    return BoundarySample{std::move(z), std::move(g)};
}

}  // namespace

std::vector<BoundarySample> boundary_sample(const ImplicitDomain& d, int N, std::uint64_t seed) {
    return boundary_sample(d, N, Point(d.dim()), seed);
}

std::vector<BoundarySample> boundary_sample(const ImplicitDomain& d, int N, const Point& anchor,
                                            std::uint64_t seed) {
    if (N < 1) throw Error("boundary sample count must be >= 1");
    if (!contains(d, anchor)) throw SamplingError("sampling anchor lies outside the domain");
    const Box box = d.bounding_box();
    double reach = 0.0;
    for (std::size_t i = 0; i < box.lo.size(); ++i) {
        const double e = std::max(std::abs(box.lo[i] - anchor.coords()[i]), std::abs(box.hi[i] - anchor.coords()[i]));
        reach += e * e;
    }
    reach = std::sqrt(reach);
    std::vector<BoundarySample> out;
    out.reserve(N);
    for (const auto& dir : sample_directions(d.dim() * 2 + 1, N, seed)) out.push_back(cast_ray(d, anchor, dir, reach));
    return out;
}

StarshapednessReport starshapedness_report(const ImplicitDomain& d, int N, std::uint64_t seed) {
    if (!contains(d, Point(d.dim()))) throw Error("starshapedness is tested with respect to the origin, which lies outside");
    const auto samples = boundary_sample(d, N, seed);
    StarshapednessReport rep;
    rep.min_pairing = std::numeric_limits<double>::infinity();
    rep.sample_count = static_cast<int>(samples.size());
    for (const auto& s : samples) {
        const double v = s.outward_normal.dot(z_field(s.point));
        if (v < rep.min_pairing) {
            rep.min_pairing = v;
            rep.argmin = s.point;
        }
    }
    return rep;
}

std::string to_string(ProbeSide side) { return side == ProbeSide::Interior ? "interior" : "exterior"; }

namespace {

// Solves A x = b in place for a small dense system; false if singular.
bool solve_dense(std::vector<double>& A, std::vector<double>& b, int m) {
    for (int c = 0; c < m; ++c) {
        int piv = c;
        for (int r = c + 1; r < m; ++r)
            if (std::abs(A[r * m + c]) > std::abs(A[piv * m + c])) piv = r;
        if (std::abs(A[piv * m + c]) < 1e-300) return false;
        if (piv != c) {
            for (int k = 0; k < m; ++k) std::swap(A[c * m + k], A[piv * m + k]);
            std::swap(b[c], b[piv]);
        }
        for (int r = c + 1; r < m; ++r) {
            const double f = A[r * m + c] / A[c * m + c];
            for (int k = c; k < m; ++k) A[r * m + k] -= f * A[c * m + k];
            b[r] -= f * b[c];
        }
    }
    for (int c = m - 1; c >= 0; --c) {
        double s = b[c];
        for (int k = c + 1; k < m; ++k) s -= A[c * m + k] * b[k];
        b[c] = s / A[c * m + c];
    }
    return true;
}

// Projects v onto the gauge sphere of radius R along its dilation orbit.
Point to_gauge_sphere(const Point& v, double R) {
    const double rho = gauge_norm(v);
    return dilate_point(v, std::log(R / rho));
}

struct TangencyResidual {
    std::vector<double> F;
    Point center;
};

TangencyResidual tangency(const Point& z, const Point& v, double R, const FullVector& target) {
    const Point w = to_gauge_sphere(v, R);
    Point c = group_product(z, group_inverse(w));
    FullVector m = translated_gauge4_gradient(c, z);
    const double mn = m.norm();
    std::vector<double> F(m.size());
    for (std::size_t i = 0; i < F.size(); ++i) F[i] = m[i] / mn - target[i];
    return {std::move(F), std::move(c)};
}

double sq(const std::vector<double>& F) {
    double s = 0.0;
    for (double f : F) s += f * f;
    return s;
}

std::optional<Point> levenberg_marquardt(const Point& z, Point v, double R, const FullVector& target) {
    const int m = static_cast<int>(target.size());
    double mu = 1e-3;
    auto cur = tangency(z, v, R, target);
    for (int it = 0; it < 200; ++it) {
        if (sq(cur.F) <= 1e-26) return cur.center;
        v = to_gauge_sphere(v, R);
        std::vector<double> J(m * m);
        const double hstep = 1e-7 * std::max(R, 1e-3);
        for (int j = 0; j < m; ++j) {
            std::vector<double> c(v.coords().begin(), v.coords().end());
            c[j] += hstep;
            const auto fp = tangency(z, Point::from_coords(v.dim(), c), R, target);
            c[j] -= 2.0 * hstep;
            const auto fm = tangency(z, Point::from_coords(v.dim(), c), R, target);
            for (int i = 0; i < m; ++i) J[i * m + j] = (fp.F[i] - fm.F[i]) / (2.0 * hstep);
        }
        bool improved = false;
        for (int tries = 0; tries < 30 && !improved; ++tries) {
            std::vector<double> A(m * m, 0.0);
            std::vector<double> g(m, 0.0);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    double s = 0.0;
                    for (int k = 0; k < m; ++k) s += J[k * m + i] * J[k * m + j];
                    A[i * m + j] = s + (i == j ? mu : 0.0);
                }
            for (int i = 0; i < m; ++i)
                for (int k = 0; k < m; ++k) g[i] -= J[k * m + i] * cur.F[k];
            if (!solve_dense(A, g, m)) {
                mu *= 10.0;
                continue;
            }
            std::vector<double> c(v.coords().begin(), v.coords().end());
            for (int i = 0; i < m; ++i) c[i] += g[i];
            const Point trial = Point::from_coords(v.dim(), c);
            if (gauge_norm(trial) < 1e-12) {
                mu *= 10.0;
                continue;
            }
            auto next = tangency(z, trial, R, target);
            if (sq(next.F) < sq(cur.F)) {
                v = trial;
                cur = std::move(next);
                mu = std::max(mu * 0.1, 1e-15);
                improved = true;
            } else {
                mu *= 10.0;
            }
        }
        if (!improved) break;
    }
    if (sq(cur.F) <= 1e-20) return cur.center;
    return std::nullopt;
}

}  // namespace

TangentBall find_tangent_ball(const BoundarySample& sample, ProbeSide side, double R) {
    if (!(R > 0.0)) throw Error("probe radius must be positive");
    FullVector target = sample.outward_normal;
    if (side == ProbeSide::Exterior)
        for (std::size_t i = 0; i < target.size(); ++i) target[i] = -target[i];
    const int n = sample.point.dim();
    // Starting guesses: the Euclidean normal itself, then the contact point.
    std::vector<Point> starts;
    starts.push_back(Point::from_coords(n, target.components()));
    if (gauge_norm(sample.point) > 1e-9) starts.push_back(sample.point);
    for (const auto& v0 : starts) {
        if (auto c = levenberg_marquardt(sample.point, v0, R, target)) return TangentBall{true, *c};
    }
    return TangentBall{false, Point(n)};
}

GaugeBallProbeReport gauge_ball_probe(const ImplicitDomain& d, ProbeSide side, double R, int N, std::uint64_t seed) {
    if (!(R > 0.0)) throw Error("probe radius must be positive");
    GaugeBallProbeReport rep;
    rep.side = side;
    rep.R = R;
    rep.samples = boundary_sample(d, N, seed);
    const auto& S = rep.samples;
    rep.margins.assign(S.size(), -std::numeric_limits<double>::infinity());
    rep.balls.resize(S.size());
    for (std::size_t i = 0; i < S.size(); ++i) {
        rep.balls[i] = find_tangent_ball(S[i], side, R);
        if (!rep.balls[i].found) {
            ++rep.failed_searches;
            continue;
        }
        const Point& c = rep.balls[i].center;
        const bool center_ok = side == ProbeSide::Interior ? d.phi(c) < 0.0 : d.phi(c) > 0.0;
        if (!center_ok) continue;
        const Point cinv = group_inverse(c);
        double margin = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < S.size(); ++j) {
            if (j == i) continue;
            margin = std::min(margin, gauge_norm(group_product(cinv, S[j].point)) - R);
        }
        rep.margins[i] = margin;
    }
    rep.worst_violation = *std::min_element(rep.margins.begin(), rep.margins.end());
    rep.pass = rep.worst_violation >= -kProbeTolerance;
    return rep;
}

FlowEntryReport flow_entry_check(const ImplicitDomain& d, ProbeSide side, double R, int N, std::uint64_t seed) {
    const auto probe = gauge_ball_probe(d, side, R, N, seed);
    if (!probe.pass) throw Error("flow-entry check needs a passing gauge-ball probe for this side and radius");
    FlowEntryReport rep;
    rep.side = side;
    rep.R = R;
    rep.min_lambda_bar = std::numeric_limits<double>::infinity();
    const double dir = side == ProbeSide::Interior ? -1.0 : 1.0;
    for (std::size_t i = 0; i < probe.samples.size(); ++i) {
        const Point cinv = group_inverse(probe.balls[i].center);
        const Point& z = probe.samples[i].point;
        auto inside = [&](double lam) { return gauge_norm(group_product(cinv, dilate_point(z, dir * lam))) < R; };
        const int steps = 200;
        double good = 0.0;
        double bad = -1.0;
        for (int k = 1; k <= steps; ++k) {
            const double lam = static_cast<double>(k) / steps;
            if (!inside(lam)) {
                bad = lam;
                break;
            }
            good = lam;
        }
        double lb = 1.0;
        if (bad > 0.0) {
            for (int it = 0; it < 60; ++it) {
                const double m = 0.5 * (good + bad);
                (inside(m) ? good : bad) = m;
            }
            lb = good;
        }
        rep.lambda_bar.push_back(lb);
        if (lb < rep.min_lambda_bar) {
            rep.min_lambda_bar = lb;
            rep.argmin = z;
        }
    }
    return rep;
}

AnnulusProblem::AnnulusProblem(ImplicitDomain inner, ImplicitDomain outer, PExponent p, AmbientParams params)
    : inner_(std::move(inner)), outer_(std::move(outer)), p_(p), params_(params) {
    if (inner_.dim() != params_.n || outer_.dim() != params_.n)
        throw DimensionMismatch("domain dimensions differ from ambient n");
    const Point origin(params_.n);
    if (!contains(inner_, origin)) throw Error("inner domain must contain the origin");
    for (const auto& s : boundary_sample(inner_, 256))
        if (!(outer_.phi(s.point) < 0.0)) throw Error("inner domain closure is not inside the outer domain");
}

}  // namespace heis
