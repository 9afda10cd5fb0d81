#include <doctest.h>

#include <cmath>
#include <random>

#include "heis/exact.hpp"
#include "support.hpp"

using namespace heis;

TEST_CASE("exponent") {
    const AmbientParams P(1);
    CHECK(PExponent(4.0, P).is_critical());
    CHECK(PExponent(4.0 + 1e-13, P).is_critical());
    CHECK_FALSE(PExponent(3.9, P).is_critical());
    CHECK(PExponent(2.0, P).decay() == doctest::Approx(2.0));
    CHECK(PExponent(3.0, P).decay() == doctest::Approx(0.5));
    CHECK(PExponent(6.0, AmbientParams(2)).is_critical());
    CHECK_THROWS_AS(PExponent(1.0, P), Error);
    CHECK_THROWS_AS(PExponent(0.5, P), Error);
}

TEST_CASE("fundamental solution values") {
    const AmbientParams P(1);
    const Point z(0, 0, 4);  // rho = 2
    CHECK(fundamental_solution(Point(1), PExponent(2, P), P, z) == doctest::Approx(0.25));
    CHECK(fundamental_solution(Point(1), PExponent(4, P), P, Point(1, 0, 0)) == doctest::Approx(0.0));
    CHECK(fundamental_solution(Point(1), PExponent(4, P), P, z) == doctest::Approx(std::log(2.0)));
    const Point w(0.2, -0.1, 0.3);
    CHECK_THROWS_AS(fundamental_solution(w, PExponent(2, P), P, w), SingularityError);
    // pole translated by the group law
    const Point zz(0.9, 0.4, -0.2);
    const double r = test::rho(group_product(group_inverse(w), zz));
    CHECK(fundamental_solution(w, PExponent(3, P), P, zz) == doctest::Approx(std::pow(r, -0.5)).epsilon(1e-13));
}

TEST_CASE("fundamental solution gradient against finite differences") {
    const AmbientParams P(1);
    std::mt19937_64 rng(11);
    const double h = 1e-4;
    int checked = 0;
    for (double p : {1.5, 2.0, 3.0, 4.0, 6.0}) {
        const PExponent pe(p, P);
        for (int i = 0; i < 20; ++i) {
            const Point w = test::random_point(rng, 0.3);
            const Point z = test::random_point(rng, 1.5);
            if (gauge_distance(z, w) < 0.3) continue;
            const FullVector g = fundamental_solution_gradient(w, pe, P, z);
            for (int k = 0; k < 3; ++k) {
                std::vector<double> cp(z.coords().begin(), z.coords().end());
                std::vector<double> cm = cp;
                cp[k] += h;
                cm[k] -= h;
                const double fd = (fundamental_solution(w, pe, P, Point::from_coords(1, cp)) -
                                   fundamental_solution(w, pe, P, Point::from_coords(1, cm))) /
                                  (2 * h);
                CHECK(std::abs(g[k] - fd) <= 1e-6 * std::max(1.0, g.norm()));
            }
            ++checked;
        }
    }
    CHECK(checked >= 60);
}

TEST_CASE("fundamental solution gradient symmetry and scaling") {
    const AmbientParams P(1);
    const PExponent p2(2, P);
    const FullVector g = fundamental_solution_gradient(Point(1), p2, P, Point(0.8, 0, 0));
    CHECK(g.y(0) == doctest::Approx(0.0));
    CHECK(g.t() == doctest::Approx(0.0));
    CHECK(g.x(0) < 0.0);
    const Point z(0.4, -0.3, 0.5);
    for (double l : {-0.7, 0.2, 1.1}) {
        const FullVector a = fundamental_solution_gradient(Point(1), p2, P, dilate_point(z, l));
        const FullVector b = fundamental_solution_gradient(Point(1), p2, P, z);
        CHECK(a.x(0) == doctest::Approx(std::exp(-3 * l) * b.x(0)).epsilon(1e-12));
        CHECK(a.y(0) == doctest::Approx(std::exp(-3 * l) * b.y(0)).epsilon(1e-12));
        CHECK(a.t() == doctest::Approx(std::exp(-4 * l) * b.t()).epsilon(1e-12));
    }
}

TEST_CASE("homogeneity of the fundamental solution") {
    const AmbientParams P(1);
    std::mt19937_64 rng(12);
    for (double p : {1.5, 2.0, 3.0}) {
        const PExponent pe(p, P);
        const double e = (4.0 - p) / (p - 1.0);
        for (int i = 0; i < 100; ++i) {
            const Point z = test::random_point(rng, 1.0);
            const double l = std::uniform_real_distribution<double>(-1, 1)(rng);
            const double a = fundamental_solution(Point(1), pe, P, dilate_point(z, l));
            const double b = std::exp(-l * e) * fundamental_solution(Point(1), pe, P, z);
            CHECK(a == doctest::Approx(b).epsilon(1e-12));
        }
    }
}

TEST_CASE("model potential values") {
    const AmbientParams P(1);
    const ModelPotentialSpec s2(0.5, 1.0, PExponent(2, P), P);
    CHECK(model_potential_radial(s2, 0.5) == doctest::Approx(1.0));
    CHECK(model_potential_radial(s2, 1.0) == doctest::Approx(0.0).scale(1.0));
    CHECK(model_potential_radial(s2, 0.75) == doctest::Approx((std::pow(0.75, -2) - 1) / (std::pow(0.5, -2) - 1)));
    CHECK(model_potential_radial(s2, 0.75) == doctest::Approx(0.259259).epsilon(1e-6));
    const ModelPotentialSpec s4(0.5, 1.0, PExponent(4, P), P);
    CHECK(model_potential_radial(s4, 0.75) == doctest::Approx(0.415037).epsilon(1e-6));
    // on the t-axis rho = sqrt(t)
    CHECK(model_potential(s2, Point(0, 0, 0.5625)) == doctest::Approx(model_potential_radial(s2, 0.75)));
    CHECK_THROWS_AS(model_potential(s2, Point(1)), SingularityError);
    CHECK_THROWS_AS(ModelPotentialSpec(1.0, 0.5, PExponent(2, P), P), Error);
}

TEST_CASE("model potential lies strictly between 0 and 1 and its derivative matches") {
    const AmbientParams P(1);
    for (double p : {1.5, 2.0, 3.0, 4.0, 7.0}) {
        const ModelPotentialSpec s(0.4, 1.0, PExponent(p, P), P);
        double prev = 2.0;
        for (int i = 1; i < 1000; ++i) {
            const double r = 0.4 + 0.6 * i / 1000.0;
            const double u = model_potential_radial(s, r);
            CHECK(u > 0.0);
            CHECK(u < 1.0);
            CHECK(u < prev);
            prev = u;
            const double h = 1e-6;
            const double fd = (model_potential_radial(s, r + h) - model_potential_radial(s, r - h)) / (2 * h);
            CHECK(model_potential_radial_derivative(s, r) == doctest::Approx(fd).epsilon(1e-6));
        }
        // <grad u, Z> = u'(rho) rho
        const Point z(0.3, -0.4, 0.35);
        const double r = test::rho(z);
        CHECK(model_potential_gradient(s, z).dot(z_field(z)) ==
              doctest::Approx(model_potential_radial_derivative(s, r) * r).epsilon(1e-10));
    }
}

TEST_CASE("barrier constants") {
    const AmbientParams P(1);
    const BarrierSpec b = make_barrier(Point(1), 1.0, BallSide::Exterior, PExponent(2, P), P);
    CHECK(b.alpha == doctest::Approx(1.0 / 3.0));
    CHECK(b.beta == doctest::Approx(-1.0 / 3.0));
    CHECK(eval_barrier(b, Point(0, 0, 0.5625)) == doctest::Approx((1.0 / 3.0) * std::pow(0.75, -2) - 1.0 / 3.0));
    CHECK(eval_barrier(b, Point(0.1, 0.0, 0.0)) == 1.0);

    const BarrierSpec q = make_barrier(Point(1), 2.0, BallSide::Interior, PExponent(4, P), P);
    CHECK(q.alpha == doctest::Approx(-1.0 / std::log(2.0)));
    CHECK(q.beta == doctest::Approx(std::log(2.0) / std::log(2.0)));
}

TEST_CASE("barrier normalization and monotonicity") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> up(1.1, 9.0);
    std::uniform_real_distribution<double> uR(0.1, 3.0);
    for (int n : {1, 2}) {
        const AmbientParams P(n);
        for (int i = 0; i < 20; ++i) {
            const double p = up(rng);
            const double R = uR(rng);
            std::vector<double> cx(n, 0.1), cy(n, -0.2);
            const Point c(cx, cy, 0.3);
            const BarrierSpec b = make_barrier(c, R, BallSide::Interior, PExponent(p, P), P);
            std::vector<double> ex(n, 0.0), ey(n, 0.0);
            ex[0] = 1.0;
            auto at = [&](double r) {
                std::vector<double> xs = ex;
                xs[0] = r;
                return group_product(c, Point(xs, ey, 0.0));
            };
            CHECK(std::abs(eval_barrier(b, at(R))) <= 1e-12);
            CHECK(std::abs(eval_barrier(b, at(R / 2)) - 1.0) <= 1e-12);
            double prev = 2.0;
            for (int k = 0; k <= 1000; ++k) {
                const double v = eval_barrier(b, at(R / 2 + (R / 2) * k / 1000.0));
                if (k > 0) CHECK(v < prev);
                prev = v;
            }
        }
    }
}
