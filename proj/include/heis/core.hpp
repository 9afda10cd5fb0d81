#pragma once

// Heisenberg group H^n in exponential coordinates (x_1..x_n, y_1..y_n, t).
//
// Group law (left-invariant frame X_i = d/dx_i + 2 y_i d/dt, Y_i = d/dy_i - 2 x_i d/dt):
//   z * w = (x + x', y + y', t + t' + 2 sum_i (x'_i y_i - x_i y'_i))
// Inverse is coordinate negation, identity is the origin.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace heis {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

/// Homogeneous dimension and ambient rank: Q = 2n + 2.
struct AmbientParams {
    int n = 1;

    explicit AmbientParams(int n_ = 1);
    int Q() const { return 2 * n + 2; }
    int full_dim() const { return 2 * n + 1; }
};

/// Euclidean vector of R^{2n+1}, laid out as (x-block, y-block, t).
class FullVector {
public:
    FullVector() = default;
    explicit FullVector(int n);
    FullVector(int n, std::vector<double> components);

    int dim() const { return n_; }
    std::size_t size() const { return c_.size(); }
    double& operator[](std::size_t i) { return c_[i]; }
    double operator[](std::size_t i) const { return c_[i]; }
    double& x(int i) { return c_[i]; }
    double& y(int i) { return c_[n_ + i]; }
    double& t() { return c_[2 * n_]; }
    double x(int i) const { return c_[i]; }
    double y(int i) const { return c_[n_ + i]; }
    double t() const { return c_[2 * n_]; }
    std::span<const double> components() const { return c_; }

    double dot(const FullVector& other) const;
    double norm() const;

private:
    int n_ = 0;
    std::vector<double> c_;
};

/// Coefficients in the horizontal frame (X_1..X_n, Y_1..Y_n).
class HorizontalVector {
public:
    HorizontalVector() = default;
    explicit HorizontalVector(int n);

    int dim() const { return n_; }
    double& X(int i) { return c_[i]; }
    double& Y(int i) { return c_[n_ + i]; }
    double X(int i) const { return c_[i]; }
    double Y(int i) const { return c_[n_ + i]; }
    std::span<const double> components() const { return c_; }
    double norm() const;

private:
    int n_ = 0;
    std::vector<double> c_;
};

/// A point of H^n. Coordinates are always finite.
class Point {
public:
    Point() : Point(1) {}
    explicit Point(int n);  // origin of H^n
    Point(std::vector<double> x, std::vector<double> y, double t);
    Point(double x, double y, double t);  // H^1 shorthand

    int dim() const { return n_; }
    double x(int i) const { return c_[i]; }
    double y(int i) const { return c_[n_ + i]; }
    double t() const { return c_[2 * n_]; }
    void set_x(int i, double v);
    void set_y(int i, double v);
    void set_t(double v);

    /// Flat coordinates (x-block, y-block, t).
    std::span<const double> coords() const { return c_; }
    static Point from_coords(int n, std::span<const double> c);

    /// Sum of x_i^2 + y_i^2.
    double horizontal_sq() const;
    bool is_origin() const;

    friend bool operator==(const Point&, const Point&) = default;

private:
    int n_ = 1;
    std::vector<double> c_;
};

void require_same_dim(const Point& a, const Point& b);

Point group_product(const Point& a, const Point& b);
Point group_inverse(const Point& a);

/// Koranyi gauge rho(z) = [ (sum x^2 + y^2)^2 + t^2 ]^{1/4}.
double gauge_norm(const Point& a);
/// rho^4, smooth everywhere.
double gauge_norm4(const Point& a);
/// Euclidean gradient of rho^4.
FullVector gauge_norm4_gradient(const Point& a);

/// rho(b^{-1} a).
double gauge_distance(const Point& a, const Point& b);

/// Euclidean gradient in z of rho^4(c^{-1} z).
FullVector translated_gauge4_gradient(const Point& c, const Point& z);

/// delta_lambda(x, y, t) = (e^l x, e^l y, e^{2l} t).
Point dilate_point(const Point& a, double lambda);

/// Dilation-generating field Z = (x, y, 2t).
FullVector z_field(const Point& a);

/// Frame X_1..X_n, Y_1..Y_n at a, as Euclidean vectors.
std::vector<FullVector> horizontal_frame(const Point& a);

/// Pairs a Euclidean gradient with the horizontal frame: (g.X_1, ..., g.Y_n).
HorizontalVector project_horizontal(const FullVector& g, const Point& a);

}  // namespace heis
