#pragma once

#include <functional>
#include <span>
#include <vector>

namespace emflow {

/// Area of the unit k-sphere, omega_k = 2 pi^{(k+1)/2} / Gamma((k+1)/2).
double unit_sphere_area(int k);

/// Composite Simpson rule on uniformly spaced samples. An odd number of
/// intervals is closed with Simpson's 3/8 rule on the last three.
double simpson(std::span<const double> samples, double spacing);

/// Gauss-Legendre quadrature of a smooth integrand on [a, b]. Endpoints are
/// never evaluated.
double gauss_legendre(const std::function<double(double)>& integrand, double a, double b);

/// Bisection on a sign-changing bracket until the bracket is narrower than
/// `tolerance`.
double bisect_root(const std::function<double(double)>& fn, double lo, double hi,
                   double tolerance = 1e-12);

std::vector<double> linspace(double a, double b, int count);
std::vector<double> geomspace(double a, double b, int count);

/// Polynomial extrapolation of y(x) to x = 0 through all given points
/// (Neville's tableau).
double extrapolate_to_zero(std::span<const double> x, std::span<const double> y);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
};

/// Ordinary least-squares line through (x, y).
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Butland slopes).
/// Exposes the first and second derivative of the interpolant, the latter
/// being piecewise linear.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  double prime(double x) const;
  double second(double x) const;

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  struct Local {
    std::size_t i;
    double h;
    double s;
  };
  Local locate(double x) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> slopes_;
};

/// Fourth-order centred first and second derivatives of an even periodic
/// profile sampled at theta_k = k*pi/(N-1), k = 0..N-1. Ghost values are
/// mirrored across both poles (u(-theta) = u(theta), u(pi+theta) = u(pi-theta)),
/// or negated when `odd` is set.
void polar_derivatives(std::span<const double> u, double spacing, std::span<double> du,
                       std::span<double> d2u, bool odd = false);

}  // namespace emflow
