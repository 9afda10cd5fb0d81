#include "heis/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "heis/discretization.hpp"

namespace heis {

Grid::Grid(std::array<double, 3> lo, std::array<double, 3> hi, std::array<int, 3> res)
    : lo_(lo), hi_(hi), res_(res) {
    for (int a = 0; a < 3; ++a) {
        if (res[a] < 2) throw Error("grid resolution must be >= 2 per axis");
        if (!(hi[a] > lo[a])) throw Error("grid box must have positive extent");
        h_[a] = (hi[a] - lo[a]) / (res[a] - 1);
    }
}

std::array<int, 3> Grid::ijk(std::size_t idx) const {
    const int i = static_cast<int>(idx % res_[0]);
    idx /= res_[0];
    const int j = static_cast<int>(idx % res_[1]);
    return {i, j, static_cast<int>(idx / res_[1])};
}

std::array<double, 3> Grid::coord(std::size_t idx) const {
    const auto c = ijk(idx);
    return coord(c[0], c[1], c[2]);
}

Point Grid::node_point(std::size_t idx) const {
    const auto x = coord(idx);
    return Point(x[0], x[1], x[2]);
}

Grid build_grid(const AnnulusProblem& problem, int resolution) {
    return build_grid(problem, {resolution, resolution, resolution});
}

Grid build_grid(const AnnulusProblem& problem, std::array<int, 3> resolution) {
    if (problem.params().n != 1) throw Error("the grid solver supports n = 1 only");
    for (int r : resolution)
        if (r < kMinResolution) throw Error("grid resolution must be >= 17 per axis");
    const Box b = problem.outer().bounding_box();
    std::array<double, 3> lo{};
    std::array<double, 3> hi{};
    for (int a = 0; a < 3; ++a) {
        const double c = 0.5 * (b.lo[a] + b.hi[a]);
        const double half = 0.5 * (b.hi[a] - b.lo[a]) * 1.05;
        lo[a] = c - half;
        hi[a] = c + half;
    }
    return Grid(lo, hi, resolution);
}

std::size_t RegionMask::count(Region r) const { return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), r)); }

RegionMask classify_nodes(const Grid& grid, const AnnulusProblem& problem) {
    RegionMask m;
    m.labels.resize(grid.node_count());
    std::size_t free = 0;
    for (std::size_t n = 0; n < m.labels.size(); ++n) {
        const Point z = grid.node_point(n);
        if (problem.inner().phi(z) <= 0.0)
            m.labels[n] = Region::Inner;
        else if (problem.outer().phi(z) >= 0.0)
            m.labels[n] = Region::Outer;
        else {
            m.labels[n] = Region::Free;
            ++free;
            const auto c = grid.ijk(n);
            for (int a = 0; a < 3; ++a)
                if (c[a] == 0 || c[a] + 1 == grid.res()[a]) throw Error("free node on the grid boundary");
        }
    }
    if (free == 0) throw NoFreeNodes("no free nodes: the annulus is too thin for this grid");
    return m;
}

HorizontalVector discrete_horizontal_gradient(const ScalarField& f, std::size_t node) {
    if (node >= f.values.size() || f.mask.labels[node] != Region::Free)
        throw Error("discrete horizontal gradient is defined at Free nodes only");
    const auto c = f.grid.ijk(node);
    const auto& h = f.grid.h();
    const auto x = f.grid.coord(node);
    double D[3];
    for (int a = 0; a < 3; ++a) {
        auto lo = c;
        auto hi = c;
        --lo[a];
        ++hi[a];
        D[a] = (f.at(hi[0], hi[1], hi[2]) - f.at(lo[0], lo[1], lo[2])) / (2.0 * h[a]);
    }
    HorizontalVector g(1);
    g.X(0) = D[0] + 2.0 * x[1] * D[2];
    g.Y(0) = D[1] - 2.0 * x[0] * D[2];
    return g;
}

double discrete_p_energy(const ScalarField& field, double p, double eps, int threads) {
    if (eps < 0.0) throw Error("epsilon must be nonnegative");
    const Discretization disc(field.grid, field.mask, threads);
    return disc.energy(field.values, p, eps);
}

ScalarField discrete_p_laplacian_residual(const ScalarField& field, double p, double eps, int threads) {
    if (eps < 0.0) throw Error("epsilon must be nonnegative");
    const Discretization disc(field.grid, field.mask, threads);
    std::vector<double> g;
    disc.gradient(field.values, p, eps, g);
    ScalarField out{field.grid, std::vector<double>(field.values.size(), 0.0), field.mask};
    const double cv = field.grid.cell_volume();
    for (std::size_t d = 0; d < g.size(); ++d) out.values[disc.dof_nodes()[d]] = -g[d] / cv;
    return out;
}

std::string to_string(NonlinearMethod m) { return m == NonlinearMethod::Newton ? "newton" : "picard"; }

NonlinearMethod nonlinear_method_from_string(const std::string& s) {
    if (s == "newton") return NonlinearMethod::Newton;
    if (s == "picard") return NonlinearMethod::Picard;
    throw Error("unknown nonlinear method '" + s + "'");
}

std::vector<double> default_eps_schedule(const Grid& grid) {
    double diam = 0.0;
    for (int a = 0; a < 3; ++a) diam += (grid.hi()[a] - grid.lo()[a]) * (grid.hi()[a] - grid.lo()[a]);
    return {1e-2, 1e-4, 1e-6 / std::sqrt(diam)};
}

namespace {

// Dilation parameter s at which the orbit delta_s(z) crosses {phi = 0}, searched on [a, b].
bool orbit_crossing(const ImplicitDomain& d, const Point& z, double a, double b, double& s) {
    double fa = d.phi(dilate_point(z, a));
    const double fb = d.phi(dilate_point(z, b));
    if ((fa < 0.0) == (fb < 0.0)) return false;
    for (int it = 0; it < 48; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = d.phi(dilate_point(z, m));
        if ((fm < 0.0) == (fa < 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    s = 0.5 * (a + b);
    return true;
}

// Log-radial interpolation of the boundary data along dilation orbits.
double initial_value(const AnnulusProblem& problem, const Point& z, double vin, double vout) {
    double s1 = 0.0;
    double s2 = 0.0;
    if (orbit_crossing(problem.inner(), z, -30.0, 0.0, s1) && orbit_crossing(problem.outer(), z, 0.0, 30.0, s2) &&
        s2 - s1 > 0.0) {
        const double w = s2 / (s2 - s1);
        return vout + (vin - vout) * w;
    }
    const double f1 = problem.inner().phi(z);
    const double f2 = problem.outer().phi(z);
    return vout + (vin - vout) * (-f2 / (f1 - f2));
}

double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct LinearSolveResult {
    bool ok;
    long iterations;
};

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// The Hessian is symmetric, so the CSR arrays double as CSC arrays.
void to_eigen(const CsrMatrix& H, SpMat& M) {
    M.resize(H.rows, H.rows);
    M.resizeNonZeros(static_cast<Eigen::Index>(H.vals.size()));
    std::copy(H.row_ptr.begin(), H.row_ptr.end(), M.outerIndexPtr());
    std::copy(H.cols.begin(), H.cols.end(), M.innerIndexPtr());
    std::copy(H.vals.begin(), H.vals.end(), M.valuePtr());
}

LinearSolveResult solve_linear(const CsrMatrix& H, const std::vector<double>& rhs, std::vector<double>& x,
                               double rtol, int max_it) {
    SpMat M;
    to_eigen(H, M);
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double, Eigen::Lower>> cg;
    cg.setTolerance(rtol);
    cg.setMaxIterations(max_it);
    cg.compute(M);
    if (cg.info() != Eigen::Success) return {false, 0};
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::VectorXd sol = cg.solve(b);
    x.assign(sol.data(), sol.data() + sol.size());
    const bool finite = std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
    return {finite && (cg.info() == Eigen::Success || cg.error() < 1e3 * rtol), static_cast<long>(cg.iterations())};
}

}  // namespace

SolveResult solve(const AnnulusProblem& problem, const Grid& grid, const SolveOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    if (problem.params().n != 1) throw Error("the grid solver supports n = 1 only");
    if (!(opt.tolerance > 0.0)) throw Error("solver tolerance must be positive");
    if (opt.max_iterations < 0) throw Error("max_iterations must be nonnegative");
    const double p = problem.p().value();
    const RegionMask mask = classify_nodes(grid, problem);
    const Discretization disc(grid, mask, problem, opt.snap_fraction, opt.threads);

    SolveReport rep;
    rep.eps_schedule = opt.eps_schedule.empty() ? default_eps_schedule(grid) : opt.eps_schedule;
    for (double e : rep.eps_schedule)
        if (!(e >= 0.0)) throw Error("epsilon schedule entries must be nonnegative");
    rep.dofs = disc.dof_count();
    rep.snapped_nodes = disc.snapped_nodes().size();
    rep.elements = disc.element_count();
    if (rep.dofs == 0) throw NoFreeNodes("every free node was snapped to a boundary");

    const double vin = opt.inner_value;
    const double vout = opt.outer_value;
    std::vector<double> u(grid.node_count());
    for (std::size_t n = 0; n < u.size(); ++n) {
        const Region r = disc.pinned_region(n);
        u[n] = r == Region::Inner ? vin : vout;
    }
    for (std::size_t n : disc.dof_nodes()) u[n] = initial_value(problem, grid.node_point(n), vin, vout);

    std::vector<double> g;
    std::vector<double> dir;
    std::vector<double> trial(u.size());
    CsrMatrix H;
    bool stalled = false;
    double res = std::numeric_limits<double>::infinity();
    double eps = rep.eps_schedule.empty() ? 0.0 : rep.eps_schedule.front();
    for (std::size_t stage = 0; stage < rep.eps_schedule.size() && !stalled; ++stage) {
        eps = rep.eps_schedule[stage];
        StageReport sr{eps, 0, 0.0};
        rep.stage_starts.push_back(rep.energy_history.size());
        double E = disc.energy(u, p, eps);
        rep.energy_history.push_back(E);
        for (;;) {
            disc.gradient(u, p, eps, g);
            res = sup_norm(g);
            if (res <= opt.tolerance) break;
            if (rep.iterations >= opt.max_iterations) break;
            bool accepted = false;
            for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
                const bool newton = opt.method == NonlinearMethod::Newton && attempt == 0;
                disc.hessian(u, p, eps, newton ? HessianKind::Newton : HessianKind::Picard, H);
                std::vector<double> rhs(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) rhs[i] = -g[i];
                const auto ls = solve_linear(H, rhs, dir, opt.linear_rtol, opt.max_linear_iterations);
                rep.linear_iterations += ls.iterations;
                if (!ls.ok) {
                    if (newton) ++rep.picard_fallbacks;
                    continue;
                }
                double slope = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) slope += g[i] * dir[i];
                if (!(slope < 0.0)) {
                    if (newton) ++rep.picard_fallbacks;
                    continue;
                }
                // Armijo backtracking on the energy; near convergence the decrease drops
                // below rounding in E, so a full step that shrinks the gradient is accepted.
                double alpha = 1.0;
                for (int bt = 0; bt < 40; ++bt) {
                    trial = u;
                    for (std::size_t i = 0; i < dir.size(); ++i) trial[disc.dof_nodes()[i]] += alpha * dir[i];
                    const double Et = disc.energy(trial, p, eps);
                    const double noise = 1e-13 * (std::abs(E) + 1.0);
                    bool ok = std::isfinite(Et) && Et <= E + 1e-4 * alpha * slope;
                    if (!ok && std::isfinite(Et) && alpha == 1.0 && std::abs(slope) < noise && Et <= E + noise) {
                        std::vector<double> gt;
                        disc.gradient(trial, p, eps, gt);
                        ok = sup_norm(gt) < res;
                    }
                    if (ok) {
                        u.swap(trial);
                        E = Et;
                        accepted = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if (!accepted && newton) ++rep.picard_fallbacks;
            }
            if (!accepted) {
                stalled = true;
                rep.message = "line search failed at epsilon " + std::to_string(eps);
                break;
            }
            ++rep.iterations;
            ++sr.iterations;
            rep.energy_history.push_back(E);
        }
        sr.residual = res;
        rep.stages.push_back(sr);
        if (res > opt.tolerance) break;
    }
    rep.final_residual = res;
    rep.final_energy = disc.energy(u, p, eps);
    rep.converged = !stalled && res <= opt.tolerance && rep.stages.size() == rep.eps_schedule.size();
    if (!rep.converged && rep.message.empty())
        rep.message = "iteration limit reached with residual " + std::to_string(res);

    ScalarField field{grid, std::vector<double>(grid.node_count()), mask};
    for (std::size_t n = 0; n < u.size(); ++n) {
        if (mask.labels[n] == Region::Inner)
            field.values[n] = vin;
        else if (mask.labels[n] == Region::Outer)
            field.values[n] = vout;
        else
            field.values[n] = u[n];
    }
    for (std::size_t n : disc.snapped_nodes()) field.values[n] = disc.interpolate(u, n);

    rep.min_free = std::numeric_limits<double>::infinity();
    rep.max_free = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < u.size(); ++n) {
        if (mask.labels[n] != Region::Free) continue;
        rep.min_free = std::min(rep.min_free, field.values[n]);
        rep.max_free = std::max(rep.max_free, field.values[n]);
    }
    const double lo = std::min(vin, vout);
    const double hi = std::max(vin, vout);
    rep.bounds_ok = rep.min_free > lo && rep.max_free < hi;
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(field), std::move(rep)};
}

double sample_trilinear(const ScalarField& f, const std::array<double, 3>& x) {
    const auto& g = f.grid;
    int idx[3];
    double w[3];
    for (int a = 0; a < 3; ++a) {
        double s = (x[a] - g.lo()[a]) / g.h()[a];
        const double tol = 1e-9;
        if (!(s >= -tol && s <= g.res()[a] - 1 + tol)) throw ResampleRangeError("sample point outside the grid box");
        // Node-aligned samples return the nodal value exactly.
        if (std::abs(s - std::round(s)) <= tol) s = std::round(s);
        int i = static_cast<int>(std::floor(s));
        i = std::clamp(i, 0, g.res()[a] - 2);
        idx[a] = i;
        w[a] = std::clamp(s - i, 0.0, 1.0);
    }
    // Nested lerps are exact on constant data.
    auto lerp = [](double a, double b, double t) { return t == 0.0 ? a : t == 1.0 ? b : a + t * (b - a); };
    double yz[2][2];
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            yz[dz][dy] = lerp(f.at(idx[0], idx[1] + dy, idx[2] + dz), f.at(idx[0] + 1, idx[1] + dy, idx[2] + dz), w[0]);
    return lerp(lerp(yz[0][0], yz[0][1], w[1]), lerp(yz[1][0], yz[1][1], w[1]), w[2]);
}

ScalarField resample_dilated(const ScalarField& field, double lambda) {
    const double s = std::exp(-lambda);
    const auto& g = field.grid;
    const Grid target({g.lo()[0] * s, g.lo()[1] * s, g.lo()[2] * s * s}, {g.hi()[0] * s, g.hi()[1] * s, g.hi()[2] * s * s},
                      g.res());
    return resample_dilated(field, lambda, target);
}

ScalarField resample_dilated(const ScalarField& field, double lambda, const Grid& target, const double* outside) {
    ScalarField out{target, std::vector<double>(target.node_count()), RegionMask{}};
    out.mask.labels.resize(target.node_count());
    const auto& src = field.grid;
    for (std::size_t n = 0; n < out.values.size(); ++n) {
        const Point z = dilate_point(target.node_point(n), lambda);
        const std::array<double, 3> x{z.x(0), z.y(0), z.t()};
        bool inside = true;
        std::array<int, 3> near{};
        for (int a = 0; a < 3; ++a) {
            const double s = (x[a] - src.lo()[a]) / src.h()[a];
            if (!(s >= -1e-9 && s <= src.res()[a] - 1 + 1e-9)) inside = false;
            near[a] = std::clamp(static_cast<int>(std::lround(s)), 0, src.res()[a] - 1);
        }
        if (!inside) {
            if (!outside) throw ResampleRangeError("dilated sample point leaves the source grid");
            out.values[n] = *outside;
            out.mask.labels[n] = Region::Outer;
            continue;
        }
        out.values[n] = sample_trilinear(field, x);
        out.mask.labels[n] = field.mask.labels[src.index(near[0], near[1], near[2])];
    }
    return out;
}

}  // namespace heis
