#pragma once

// Implicit domains {phi < 0} in H^n, boundary sampling, and numerical probes for
// starshapedness and the interior/exterior gauge-ball conditions.

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "heis/core.hpp"
#include "heis/exact.hpp"

namespace heis {

/// Axis-aligned box in R^{2n+1}.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    bool contains(const Point& z) const;
};

class ImplicitDomain;

struct GaugeBallKind {
    Point center;
    double R;
};
struct AnisotropicGaugeKind {
    double a;
    double R;
};
struct EuclideanBallKind {
    Point center;
    double R;
};
/// phi(delta_{-lambda} z) of a base domain without a closed-form rescaling.
struct DilatedKind {
    std::shared_ptr<const ImplicitDomain> base;
    double lambda;
};

class ImplicitDomain {
public:
    using Kind = std::variant<GaugeBallKind, AnisotropicGaugeKind, EuclideanBallKind, DilatedKind>;

    ImplicitDomain(int n, Kind kind);

    int dim() const { return n_; }
    const Kind& kind() const { return kind_; }
    std::string kind_name() const;

    double phi(const Point& z) const;
    FullVector grad_phi(const Point& z) const;
    Box bounding_box() const;

private:
    int n_;
    Kind kind_;
};

ImplicitDomain make_gauge_ball(const Point& center, double R);
ImplicitDomain make_anisotropic_gauge(double a, double R, int n = 1);
ImplicitDomain make_euclidean_ball(const Point& center, double R);
ImplicitDomain dilate_domain(const ImplicitDomain& d, double lambda);

/// phi(z) < 0; boundary points are not contained.
bool contains(const ImplicitDomain& d, const Point& z);

struct BoundarySample {
    Point point;
    FullVector outward_normal;
};

struct SamplingError : Error {
    using Error::Error;
};

/// Ray casting from `anchor` in quasi-uniform directions, bisecting phi to |phi| <= 1e-10.
/// A nonzero seed applies a seeded random rotation to the direction set.
std::vector<BoundarySample> boundary_sample(const ImplicitDomain& d, int N, std::uint64_t seed = 0);
std::vector<BoundarySample> boundary_sample(const ImplicitDomain& d, int N, const Point& anchor,
                                            std::uint64_t seed);

struct StarshapednessReport {
    double min_pairing = 0.0;
    Point argmin;
    int sample_count = 0;

    bool strictly_starshaped() const { return min_pairing > 0.0; }
};

/// min over boundary samples of <nu, Z>; requires the origin inside d.
StarshapednessReport starshapedness_report(const ImplicitDomain& d, int N, std::uint64_t seed = 0);

enum class ProbeSide { Interior, Exterior };
std::string to_string(ProbeSide side);

inline constexpr double kProbeTolerance = 1e-6;

struct TangentBall {
    bool found = false;
    Point center;
};

struct GaugeBallProbeReport {
    ProbeSide side = ProbeSide::Interior;
    double R = 0.0;
    double worst_violation = 0.0;
    bool pass = false;
    int failed_searches = 0;
    std::vector<double> margins;  // -inf where the tangent-ball search failed
    std::vector<BoundarySample> samples;
    std::vector<TangentBall> balls;
};

/// Gauge sphere of radius R through sample.point whose outward normal there is
/// +nu (interior side) or -nu (exterior side).
TangentBall find_tangent_ball(const BoundarySample& sample, ProbeSide side, double R);

/// Empirical test of the gauge-ball condition at N boundary samples.
GaugeBallProbeReport gauge_ball_probe(const ImplicitDomain& d, ProbeSide side, double R, int N,
                                      std::uint64_t seed = 0);

struct FlowEntryReport {
    ProbeSide side = ProbeSide::Interior;
    double R = 0.0;
    double min_lambda_bar = 0.0;
    Point argmin;
    std::vector<double> lambda_bar;
};

/// Largest lambda in (0, 1] keeping delta_{-+lambda}(z) inside the tangent ball.
FlowEntryReport flow_entry_check(const ImplicitDomain& d, ProbeSide side, double R, int N,
                                 std::uint64_t seed = 0);

/// Omega_1 compactly inside Omega_2, origin in Omega_1.
class AnnulusProblem {
public:
    AnnulusProblem(ImplicitDomain inner, ImplicitDomain outer, PExponent p, AmbientParams params);

    const ImplicitDomain& inner() const { return inner_; }
    const ImplicitDomain& outer() const { return outer_; }
    const PExponent& p() const { return p_; }
    const AmbientParams& params() const { return params_; }

private:
    ImplicitDomain inner_;
    ImplicitDomain outer_;
    PExponent p_;
    AmbientParams params_;
};

}  // namespace heis
