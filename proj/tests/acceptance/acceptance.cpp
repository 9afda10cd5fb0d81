// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "heis/exact.hpp"
#include "heis/geometry.hpp"
#include "heis/solver.hpp"

using namespace heis;

namespace {

int failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
    std::printf("%s %s %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failures += !pass;
}

std::string fmt(const char* f, double a) {
    char b[64];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

const AmbientParams kP(1);

AnnulusProblem gauge_annulus(double p) {
    return AnnulusProblem(make_gauge_ball(Point(1), 0.4), make_gauge_ball(Point(1), 1.0), PExponent(p, kP), kP);
}

struct Run {
    SolveResult result;
    double seconds = 0.0;
    double sup_error = 0.0;
};

Run solve_model(double p, int res, const SolveOptions& o = {}) {
    const AnnulusProblem pr = gauge_annulus(p);
    const Grid g = build_grid(pr, res);
    const auto t0 = std::chrono::steady_clock::now();
    Run r{solve(pr, g, o), 0.0, 0.0};
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const ModelPotentialSpec spec(0.4, 1.0, pr.p(), pr.params());
    for (std::size_t n = 0; n < g.node_count(); ++n)
        if (r.result.field.mask.labels[n] == Region::Free)
            r.sup_error = std::max(r.sup_error,
                                   std::abs(r.result.field.values[n] - model_potential(spec, g.node_point(n))) *
                                       o.inner_value);
    return r;
}

// Strict 0 < u < 1 at Free nodes, with 1e-10 slack as in the solver contract.
bool strict_bounds(const ScalarField& f, double hi = 1.0) {
    for (std::size_t n = 0; n < f.values.size(); ++n)
        if (f.mask.labels[n] == Region::Free && !(f.values[n] > 1e-10 && f.values[n] < hi - 1e-10)) return false;
    return true;
}

double window_residual(int res, double p, double lambda) {
    const AnnulusProblem pr = gauge_annulus(p);
    const Grid g = build_grid(pr, res);
    const RegionMask m = classify_nodes(g, pr);
    const PExponent pe(p, kP);
    const ScalarField f = sample_field(g, m, [&](const Point& z) {
        const Point w = dilate_point(z, lambda);
        return gauge_norm(w) < 1e-9 ? 0.0 : fundamental_solution(Point(1), pe, kP, w);
    });
    const ScalarField r = discrete_p_laplacian_residual(f, p, 0.0);
    double s = 0.0;
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        const double rho = gauge_norm(g.node_point(n));
        if (m.labels[n] == Region::Free && rho >= 0.55 && rho <= 0.9) s = std::max(s, std::abs(r.values[n]));
    }
    return s;
}

}  // namespace

int main() {
    std::printf("acceptance: concentric gauge balls r=0.4, R=1 unless stated; single thread\n");

    // A1
    const Run a1 = solve_model(2.0, 65);
    report("A1", a1.result.report.converged && a1.sup_error <= 0.03 && a1.seconds <= 300.0,
           "p=2 65^3 sup_error=" + fmt("%.4f", a1.sup_error) + " (<= 0.03) runtime=" + fmt("%.1f", a1.seconds) +
               "s (<= 300s) residual=" + fmt("%.2e", a1.result.report.final_residual));

    // A2
    {
        bool ok = true;
        std::string d;
        for (double p : {2.0, 1.5, 3.0}) {
            const Run c = solve_model(p, 33);
            const Run f = p == 2.0 ? a1 : solve_model(p, 65);
            const double ratio = c.sup_error / f.sup_error;
            const bool conv = c.result.report.converged && f.result.report.converged;
            const bool budget = p == 2.0 || f.sup_error <= 0.05;
            ok = ok && conv && ratio >= 1.5 && budget;
            d += "p=" + fmt("%g", p) + ": 33^3 " + fmt("%.4f", c.sup_error) + " 65^3 " + fmt("%.4f", f.sup_error) +
                 " ratio " + fmt("%.2f", ratio) + (p == 2.0 ? "" : " (65^3 budget 0.05)") + "; ";
        }
        report("A2", ok, d + "ratio >= 1.5");
    }

    // A3
    {
        const SignCertificate c = sign_certificate(a1.result.field, 2);
        const double rel = std::abs(c.M - 0.381) / 0.381;
        report("A3", c.M > 0.0 && rel <= 0.15,
               "M=" + fmt("%.4f", c.M) + " continuum 0.381 rel_err=" + fmt("%.3f", rel) + " (<= 0.15) m=2");
    }

    // A4
    {
        const Run r = solve_model(4.0, 65);
        const SignCertificate c = sign_certificate(r.result.field, 2);
        report("A4", r.result.report.converged && r.sup_error <= 0.05 && c.pass,
               "p=Q=4 65^3 log-oracle sup_error=" + fmt("%.4f", r.sup_error) + " (<= 0.05) certificate M=" +
                   fmt("%.4f", c.M));
    }

    // A5
    {
        const AnnulusProblem pr(make_gauge_ball(Point(1), 0.4), make_anisotropic_gauge(4.0, 1.0), PExponent(2.0, kP),
                                kP);
        const SolveResult s = solve(pr, build_grid(pr, 65));
        bool ok = s.report.converged;
        std::string d = "anisotropic a=4 outer, 65^3:";
        for (double t : {0.2, 0.5, 0.8}) {
            const LevelSurface surf = extract_level_surface(s.field, t);
            const StarshapednessReport r = level_starshape(surf);
            ok = ok && r.min_pairing > 0.0 && is_closed(surf);
            d += " t=" + fmt("%g", t) + " min<nu,Z>=" + fmt("%.4f", r.min_pairing) + (is_closed(surf) ? "" : " (open)");
        }
        report("A5", ok, d + " (> 0)");
    }

    // A6
    {
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        auto rp = [&] { return Point(u(rng), u(rng), u(rng)); };
        double hom = 0.0, flow = 0.0, assoc = 0.0, inv = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const Point z = rp();
            const double l = u(rng);
            hom = std::max(hom, std::abs(gauge_norm(dilate_point(z, l)) - std::exp(l) * gauge_norm(z)) /
                                    (std::exp(l) * gauge_norm(z)));
            const double h = 1e-4;
            const Point a = dilate_point(z, l + h);
            const Point b = dilate_point(z, l - h);
            const FullVector zf = z_field(dilate_point(z, l));
            for (int k = 0; k < 3; ++k)
                flow = std::max(flow, std::abs((a.coords()[k] - b.coords()[k]) / (2 * h) - zf[k]) / std::max(1.0, zf.norm()));
            const Point x = rp(), y = rp(), w = rp();
            const Point l1 = group_product(group_product(x, y), w);
            const Point r1 = group_product(x, group_product(y, w));
            for (int k = 0; k < 3; ++k)
                assoc = std::max(assoc, std::abs(l1.coords()[k] - r1.coords()[k]) / std::max(1.0, std::abs(l1.coords()[k])));
            const Point e1 = group_product(x, group_inverse(x));
            const Point e2 = group_product(group_inverse(x), x);
            for (int k = 0; k < 3; ++k) inv = std::max({inv, std::abs(e1.coords()[k]), std::abs(e2.coords()[k])});
        }
        report("A6", hom <= 1e-10 && flow <= 1e-6 && assoc <= 1e-10 && inv <= 1e-10,
               "10^3 samples: homogeneity " + fmt("%.1e", hom) + " associativity " + fmt("%.1e", assoc) + " inverse " +
                   fmt("%.1e", inv) + " (<= 1e-10), flow " + fmt("%.1e", flow) + " (<= 1e-6)");
    }

    // A7
    {
        bool ok = true;
        std::string d = "residual sup over 0.55<=rho<=0.9, 33^3/65^3:";
        for (double p : {2.0, 3.0})
            for (double l : {0.0, 0.1}) {
                const double ratio = window_residual(33, p, l) / window_residual(65, p, l);
                ok = ok && ratio >= 2.5 && ratio <= 6.0;
                d += " p=" + fmt("%g", p) + (l == 0.0 ? "" : " f o delta_0.1") + " " + fmt("%.2f", ratio) + ";";
            }
        report("A7", ok, d + " ratio in [2.5, 6]");
    }

    // A8
    {
        const double tau = 1e-8;
        bool ok = true;
        std::string d;
        for (auto [p, res] : {std::pair{2.0, 65}, std::pair{3.0, 33}, std::pair{1.5, 33}}) {
            SolveOptions lo;
            lo.inner_value = 0.8;
            const SolveResult hi = p == 2.0 && res == 65 ? a1.result : solve(gauge_annulus(p), build_grid(gauge_annulus(p), res));
            const SolveResult low = solve(gauge_annulus(p), build_grid(gauge_annulus(p), res), lo);
            double worst = 1e300;
            for (std::size_t n = 0; n < hi.field.values.size(); ++n)
                worst = std::min(worst, hi.field.values[n] - low.field.values[n]);
            const bool b = strict_bounds(hi.field) && strict_bounds(low.field, 0.8);
            ok = ok && hi.report.converged && low.report.converged && worst >= -2 * tau && b;
            d += "p=" + fmt("%g", p) + " " + std::to_string(res) + "^3 min(u1-u0.8)=" + fmt("%.2e", worst) +
                 (b ? " bounds ok; " : " bounds violated; ");
        }
        report("A8", ok, d + "ordered within 2*tau=2e-8, 0<u<1 strictly");
    }

    // A9
    {
        const ScalarField& f = a1.result.field;
        bool ok = true;
        std::string d = "max quotient:";
        for (double l : {0.1, 0.05, 0.025}) {
            const DilationComparisonReport r = dilation_comparison_check(f, l);
            ok = ok && r.pass;
            d += " lambda=" + fmt("%g", l) + " " + fmt("%.4f", r.max_quotient);
        }
        const std::size_t probe = f.grid.index(32 + 18, 32 + 4, 32 + 6);
        const PairingField pf = pairing_field(f, 2);
        const auto it = std::find(pf.nodes.begin(), pf.nodes.end(), probe);
        if (it == pf.nodes.end()) {
            ok = false;
            d += "; probe node not certified";
        } else {
            const double pv = pf.values[it - pf.nodes.begin()];
            const double e1 = std::abs(dilation_quotient_at(f, probe, 0.1) - pv);
            const double e2 = std::abs(dilation_quotient_at(f, probe, 0.05) - pv);
            const double e3 = std::abs(dilation_quotient_at(f, probe, 0.025) - pv);
            const double o1 = std::log2(e1 / e2);
            const double o2 = std::log2(e2 / e3);
            ok = ok && o1 >= 0.7 && o1 <= 1.3 && o2 >= 0.7 && o2 <= 1.3;
            d += "; probe pairing " + fmt("%.4f", pv) + " errors " + fmt("%.4f", e1) + "/" + fmt("%.4f", e2) + "/" +
                 fmt("%.4f", e3) + " observed order " + fmt("%.2f", o1) + ", " + fmt("%.2f", o2) + " (in [0.7, 1.3])";
        }
        report("A9", ok, d);
    }

    // A10
    {
        std::mt19937_64 rng(77);
        std::uniform_real_distribution<double> up(1.1, 8.0), uR(0.05, 5.0), uc(-1.0, 1.0);
        double worst = 0.0;
        int count = 0;
        while (count < 20) {
            const double p = up(rng);
            if (std::abs(p - 4.0) < 1e-6) continue;
            const double R = uR(rng);
            const Point c(uc(rng), uc(rng), uc(rng));
            const BarrierSpec b = make_barrier(c, R, count % 2 ? BallSide::Interior : BallSide::Exterior, PExponent(p, kP), kP);
            Point w(uc(rng), uc(rng), uc(rng));
            w = dilate_point(w, -std::log(gauge_norm(w)));
            const double v0 = eval_barrier(b, group_product(c, dilate_point(w, std::log(R))));
            const double v1 = eval_barrier(b, group_product(c, dilate_point(w, std::log(R / 2))));
            worst = std::max({worst, std::abs(v0), std::abs(v1 - 1.0)});
            ++count;
        }
        report("A10", worst <= 1e-12, "20 random (p, R): worst normalization error " + fmt("%.1e", worst) + " (<= 1e-12)");
    }

    std::printf("acceptance: %d failed\n", failures);
    return failures == 0 ? 0 : 1;
}
