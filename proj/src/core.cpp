#include "heis/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace heis {

namespace {

void require_finite(std::span<const double> c) {
    for (double v : c)
        if (!std::isfinite(v)) throw Error("point coordinates must be finite");
}

}  // namespace

AmbientParams::AmbientParams(int n_) : n(n_) {
    if (n < 1) throw Error("ambient dimension n must be >= 1");
}

FullVector::FullVector(int n) : n_(n), c_(2 * n + 1, 0.0) {}

FullVector::FullVector(int n, std::vector<double> components) : n_(n), c_(std::move(components)) {
    if (c_.size() != static_cast<std::size_t>(2 * n + 1))
        throw DimensionMismatch("full vector needs 2n+1 components");
}

double FullVector::dot(const FullVector& other) const {
    if (other.n_ != n_) throw DimensionMismatch("dot: dimension mismatch");
    return std::inner_product(c_.begin(), c_.end(), other.c_.begin(), 0.0);
}

double FullVector::norm() const { return std::sqrt(dot(*this)); }

HorizontalVector::HorizontalVector(int n) : n_(n), c_(2 * n, 0.0) {}

double HorizontalVector::norm() const {
    double s = 0.0;
    for (double v : c_) s += v * v;
    return std::sqrt(s);
}

Point::Point(int n) : n_(n), c_(2 * n + 1, 0.0) {
    if (n < 1) throw Error("ambient dimension n must be >= 1");
}

Point::Point(std::vector<double> x, std::vector<double> y, double t)
    : n_(static_cast<int>(x.size())) {
    if (x.empty() || x.size() != y.size()) throw DimensionMismatch("x and y blocks must share n >= 1");
    c_ = std::move(x);
    c_.insert(c_.end(), y.begin(), y.end());
    c_.push_back(t);
    require_finite(c_);
}

Point::Point(double x, double y, double t) : n_(1), c_{x, y, t} { require_finite(c_); }

void Point::set_x(int i, double v) {
    require_finite({&v, 1});
    c_[i] = v;
}
void Point::set_y(int i, double v) {
    require_finite({&v, 1});
    c_[n_ + i] = v;
}
void Point::set_t(double v) {
    require_finite({&v, 1});
    c_[2 * n_] = v;
}

Point Point::from_coords(int n, std::span<const double> c) {
    if (c.size() != static_cast<std::size_t>(2 * n + 1))
        throw DimensionMismatch("coordinate count must be 2n+1");
    Point p(n);
    std::copy(c.begin(), c.end(), p.c_.begin());
    require_finite(p.c_);
    return p;
}

double Point::horizontal_sq() const {
    double s = 0.0;
    for (int i = 0; i < 2 * n_; ++i) s += c_[i] * c_[i];
    return s;
}

bool Point::is_origin() const {
    return std::all_of(c_.begin(), c_.end(), [](double v) { return v == 0.0; });
}

void require_same_dim(const Point& a, const Point& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("points live in different Heisenberg groups");
}

Point group_product(const Point& a, const Point& b) {
    require_same_dim(a, b);
    const int n = a.dim();
    Point out(n);
    double twist = 0.0;
    for (int i = 0; i < n; ++i) {
        out.set_x(i, a.x(i) + b.x(i));
        out.set_y(i, a.y(i) + b.y(i));
        twist += b.x(i) * a.y(i) - a.x(i) * b.y(i);
    }
    out.set_t(a.t() + b.t() + 2.0 * twist);
    return out;
}

Point group_inverse(const Point& a) {
    std::vector<double> c(a.coords().begin(), a.coords().end());
    for (double& v : c) v = -v;
    return Point::from_coords(a.dim(), c);
}

double gauge_norm4(const Point& a) {
    const double s = a.horizontal_sq();
    return s * s + a.t() * a.t();
}

double gauge_norm(const Point& a) { return std::sqrt(std::sqrt(gauge_norm4(a))); }

FullVector gauge_norm4_gradient(const Point& a) {
    const int n = a.dim();
    const double s = a.horizontal_sq();
    FullVector g(n);
    for (int i = 0; i < n; ++i) {
        g.x(i) = 4.0 * s * a.x(i);
        g.y(i) = 4.0 * s * a.y(i);
    }
    g.t() = 2.0 * a.t();
    return g;
}

double gauge_distance(const Point& a, const Point& b) {
    return gauge_norm(group_product(group_inverse(b), a));
}

FullVector translated_gauge4_gradient(const Point& c, const Point& z) {
    require_same_dim(c, z);
    FullVector g = gauge_norm4_gradient(group_product(group_inverse(c), z));
    // t-coordinate of c^{-1} z picks up -2 c_y dx + 2 c_x dy.
    const double gt = g.t();
    for (int i = 0; i < z.dim(); ++i) {
        g.x(i) -= 2.0 * c.y(i) * gt;
        g.y(i) += 2.0 * c.x(i) * gt;
    }
    return g;
}

Point dilate_point(const Point& a, double lambda) {
    const double s = std::exp(lambda);
    std::vector<double> c(a.coords().begin(), a.coords().end());
    for (int i = 0; i < 2 * a.dim(); ++i) c[i] *= s;
    c.back() *= s * s;
    return Point::from_coords(a.dim(), c);
}

FullVector z_field(const Point& a) {
    std::vector<double> c(a.coords().begin(), a.coords().end());
    c.back() *= 2.0;
    return FullVector(a.dim(), std::move(c));
}

std::vector<FullVector> horizontal_frame(const Point& a) {
    const int n = a.dim();
    std::vector<FullVector> frame;
    frame.reserve(2 * n);
    for (int i = 0; i < n; ++i) {
        FullVector X(n);
        X.x(i) = 1.0;
        X.t() = 2.0 * a.y(i);
        frame.push_back(std::move(X));
    }
    for (int j = 0; j < n; ++j) {
        FullVector Y(n);
        Y.y(j) = 1.0;
        Y.t() = -2.0 * a.x(j);
        frame.push_back(std::move(Y));
    }
    return frame;
}

HorizontalVector project_horizontal(const FullVector& g, const Point& a) {
    const int n = a.dim();
    if (g.dim() != n) throw DimensionMismatch("gradient and point dimensions differ");
    HorizontalVector h(n);
    for (int i = 0; i < n; ++i) {
        h.X(i) = g.x(i) + 2.0 * a.y(i) * g.t();
        h.Y(i) = g.y(i) - 2.0 * a.x(i) * g.t();
    }
    return h;
}

}  // namespace heis
