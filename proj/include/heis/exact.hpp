#pragma once

// Closed-form horizontally p-harmonic functions on H^n: fundamental solutions,
// the capacitary potential of concentric gauge balls, and the barrier functions
// built on gauge annuli B(c, R) \ B(c, R/2).

#include "heis/core.hpp"

namespace heis {

struct SingularityError : Error {
    using Error::Error;
};

/// Exponent p > 1, with a flag for the critical case p = Q.
class PExponent {
public:
    PExponent(double p, const AmbientParams& params);

    double value() const { return p_; }
    bool is_critical() const { return critical_; }
    /// (Q - p) / (p - 1); zero when critical.
    double decay() const { return decay_; }

private:
    double p_;
    bool critical_;
    double decay_;
};

/// Gauge distance below which evaluations at a pole are rejected.
inline constexpr double kSingularityRadius = 1e-12;

/// rho(w^{-1} z)^{-(Q-p)/(p-1)}, or log rho(w^{-1} z) when p = Q.
double fundamental_solution(const Point& w, const PExponent& p, const AmbientParams& params, const Point& z);

/// Euclidean gradient in z of fundamental_solution.
FullVector fundamental_solution_gradient(const Point& w, const PExponent& p, const AmbientParams& params,
                                         const Point& z);

struct ModelPotentialSpec {
    double r;
    double R;
    PExponent p;
    AmbientParams params;

    ModelPotentialSpec(double r, double R, PExponent p, AmbientParams params);
};

/// Capacitary potential of B(0, R) \ B(0, r): 1 on rho = r, 0 on rho = R.
double model_potential(const ModelPotentialSpec& spec, const Point& z);
/// Same potential as a function of the gauge radius alone.
double model_potential_radial(const ModelPotentialSpec& spec, double rho);
/// d/drho of the radial profile.
double model_potential_radial_derivative(const ModelPotentialSpec& spec, double rho);
FullVector model_potential_gradient(const ModelPotentialSpec& spec, const Point& z);

enum class BallSide { Interior, Exterior };

/// Barrier on the gauge shell R/2 <= rho(center^{-1} z) <= R:
///   alpha * rho^{-(Q-p)/(p-1)} + beta          (p != Q)
///   alpha * log rho + beta                     (p == Q)
/// normalized to 0 on rho = R and 1 on rho = R/2, and equal to 1 inside R/2.
struct BarrierSpec {
    Point center;
    double R;
    BallSide side;
    PExponent p;
    AmbientParams params;
    double alpha;
    double beta;
};

BarrierSpec make_barrier(const Point& center, double R, BallSide side, const PExponent& p,
                         const AmbientParams& params);
double eval_barrier(const BarrierSpec& spec, const Point& z);

}  // namespace heis
