#include "heis/exact.hpp"

#include <cmath>

namespace heis {

PExponent::PExponent(double p, const AmbientParams& params) : p_(p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error("exponent p must satisfy 1 < p < inf");
    const double Q = params.Q();
    critical_ = std::abs(p - Q) <= 1e-12;
    decay_ = critical_ ? 0.0 : (Q - p) / (p - 1.0);
}

namespace {

Point relative(const Point& w, const Point& z) { return group_product(group_inverse(w), z); }

double guarded_gauge(const Point& rel) {
    const double rho = gauge_norm(rel);
    if (rho < kSingularityRadius) throw SingularityError("evaluation at the pole of a fundamental solution");
    return rho;
}

// d/d(rho) of rho^{-e} or log rho.
double radial_profile_derivative(const PExponent& p, double rho) {
    if (p.is_critical()) return 1.0 / rho;
    return -p.decay() * std::pow(rho, -p.decay() - 1.0);
}

// Euclidean gradient of rho(w^{-1} z) with respect to z.
FullVector relative_gauge_gradient(const Point& w, const Point& z, double rho) {
    FullVector g = translated_gauge4_gradient(w, z);
    const double scale = 1.0 / (4.0 * rho * rho * rho);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= scale;
    return g;
}

}  // namespace

double fundamental_solution(const Point& w, const PExponent& p, const AmbientParams& params, const Point& z) {
    require_same_dim(w, z);
    if (z.dim() != params.n) throw DimensionMismatch("point dimension differs from ambient n");
    const double rho = guarded_gauge(relative(w, z));
    return p.is_critical() ? std::log(rho) : std::pow(rho, -p.decay());
}

FullVector fundamental_solution_gradient(const Point& w, const PExponent& p, const AmbientParams& params,
                                         const Point& z) {
    require_same_dim(w, z);
    if (z.dim() != params.n) throw DimensionMismatch("point dimension differs from ambient n");
    const Point rel = relative(w, z);
    const double rho = guarded_gauge(rel);
    FullVector g = relative_gauge_gradient(w, z, rho);
    const double d = radial_profile_derivative(p, rho);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= d;
    return g;
}

ModelPotentialSpec::ModelPotentialSpec(double r_, double R_, PExponent p_, AmbientParams params_)
    : r(r_), R(R_), p(p_), params(params_) {
    if (!(r > 0.0) || !(r < R)) throw Error("model potential needs 0 < r < R");
}

double model_potential_radial(const ModelPotentialSpec& s, double rho) {
    if (rho < kSingularityRadius) throw SingularityError("model potential evaluated at the origin");
    if (s.p.is_critical()) return std::log(s.R / rho) / std::log(s.R / s.r);
    const double e = s.p.decay();
    const double outer = std::pow(s.R, -e);
    return (std::pow(rho, -e) - outer) / (std::pow(s.r, -e) - outer);
}

double model_potential_radial_derivative(const ModelPotentialSpec& s, double rho) {
    if (rho < kSingularityRadius) throw SingularityError("model potential evaluated at the origin");
    if (s.p.is_critical()) return -1.0 / (rho * std::log(s.R / s.r));
    const double e = s.p.decay();
    return -e * std::pow(rho, -e - 1.0) / (std::pow(s.r, -e) - std::pow(s.R, -e));
}

double model_potential(const ModelPotentialSpec& spec, const Point& z) {
    if (z.dim() != spec.params.n) throw DimensionMismatch("point dimension differs from ambient n");
    return model_potential_radial(spec, gauge_norm(z));
}

FullVector model_potential_gradient(const ModelPotentialSpec& spec, const Point& z) {
    const Point origin(z.dim());
    const double rho = gauge_norm(z);
    if (rho < kSingularityRadius) throw SingularityError("model potential evaluated at the origin");
    FullVector g = relative_gauge_gradient(origin, z, rho);
    const double d = model_potential_radial_derivative(spec, rho);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= d;
    return g;
}

BarrierSpec make_barrier(const Point& center, double R, BallSide side, const PExponent& p,
                         const AmbientParams& params) {
    if (!(R > 0.0)) throw Error("barrier radius must be positive");
    if (center.dim() != params.n) throw DimensionMismatch("barrier center dimension differs from ambient n");
    double alpha = 0.0;
    double beta = 0.0;
    if (p.is_critical()) {
        alpha = -1.0 / std::log(2.0);
        beta = std::log(R) / std::log(2.0);
    } else {
        const double e = p.decay();
        const double denom = std::pow(2.0, e) - 1.0;
        alpha = std::pow(R, e) / denom;
        beta = -1.0 / denom;
    }
    return BarrierSpec{center, R, side, p, params, alpha, beta};
}

double eval_barrier(const BarrierSpec& s, const Point& z) {
    const double rho = gauge_distance(z, s.center);
    if (rho <= 0.5 * s.R) return 1.0;
    if (s.p.is_critical()) return s.alpha * std::log(rho) + s.beta;
    return s.alpha * std::pow(rho, -s.p.decay()) + s.beta;
}

}  // namespace heis
