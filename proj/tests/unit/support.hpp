#pragma once

#include <cmath>
#include <random>

#include "heis/core.hpp"

namespace test {

inline heis::Point random_point(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    const double x = u(rng);
    const double y = u(rng);
    const double t = u(rng);
    return heis::Point(x, y, t);
}

// Gauge norm written out from its definition.
inline double rho(double x, double y, double t) { return std::pow((x * x + y * y) * (x * x + y * y) + t * t, 0.25); }
inline double rho(const heis::Point& z) { return rho(z.x(0), z.y(0), z.t()); }

}  // namespace test
