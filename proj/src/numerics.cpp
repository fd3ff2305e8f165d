#include "emflow/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include "emflow/errors.hpp"

namespace emflow {

double unit_sphere_area(int k) {
  if (k < 1) throw InvalidArgument("unit_sphere_area: k must be >= 1");
  const double half = 0.5 * static_cast<double>(k + 1);
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

double simpson(std::span<const double> y, double h) {
  const std::size_t n = y.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * h * (y[0] + y[1]);
  if (n == 3) return h / 3.0 * (y[0] + 4.0 * y[1] + y[2]);

  std::size_t intervals = n - 1;
  double tail = 0.0;
  if (intervals % 2 == 1) {
    const std::size_t k = n - 4;
    tail = 3.0 * h / 8.0 * (y[k] + 3.0 * y[k + 1] + 3.0 * y[k + 2] + y[k + 3]);
    intervals -= 3;
  }
  double sum = y[0] + y[intervals];
  for (std::size_t i = 1; i < intervals; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * y[i];
  return h / 3.0 * sum + tail;
}

double gauss_legendre(const std::function<double(double)>& integrand, double a, double b) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss<double, 30>::integrate(integrand, a, b);
}

double bisect_root(const std::function<double(double)>& fn, double lo, double hi,
                   double tolerance) {
  const double flo = fn(lo);
  const double fhi = fn(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) throw InvalidArgument("bisect_root: bracket has no sign change");
  auto done = [tolerance](double a, double b) { return std::abs(b - a) <= tolerance; };
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::bisect(fn, lo, hi, done, max_iter);
  return 0.5 * (a + b);
}

std::vector<double> linspace(double a, double b, int count) {
  if (count < 2) return {a};
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = a + (b - a) * i / (count - 1);
  out.back() = b;
  return out;
}

std::vector<double> geomspace(double a, double b, int count) {
  if (a <= 0.0 || b <= 0.0) throw InvalidArgument("geomspace: endpoints must be positive");
  auto out = linspace(std::log(a), std::log(b), count);
  for (double& v : out) v = std::exp(v);
  out.front() = a;
  out.back() = b;
  return out;
}

double extrapolate_to_zero(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw InvalidArgument("extrapolate_to_zero: bad sizes");
  std::vector<double> p(y.begin(), y.end());
  const std::size_t n = p.size();
  for (std::size_t level = 1; level < n; ++level) {
    for (std::size_t i = 0; i + level < n; ++i) {
      const double xi = x[i];
      const double xj = x[i + level];
      p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
    }
  }
  return p[0];
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw InvalidArgument("fit_line: need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < n; ++i)
    fit.max_residual =
        std::max(fit.max_residual, std::abs(y[i] - (fit.intercept + fit.slope * x[i])));
  return fit;
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw InvalidArgument("MonotoneCubic: need >= 2 matching samples");
  for (std::size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1])) throw InvalidArgument("MonotoneCubic: abscissae must increase");

  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);

  slopes_.assign(n, 0.0);
  if (n == 2) {
    slopes_[0] = slopes_[1] = delta[0];
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) continue;
    // weighted harmonic mean (Fritsch-Butland)
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    const double w1 = 2.0 * h1 + h0;
    const double w2 = h1 + 2.0 * h0;
    slopes_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(s) > std::abs(3.0 * d0)) return 3.0 * d0;
    return s;
  };
  slopes_[0] = end_slope(x_[1] - x_[0], x_[2] - x_[1], delta[0], delta[1]);
  slopes_[n - 1] = end_slope(x_[n - 1] - x_[n - 2], x_[n - 2] - x_[n - 3], delta[n - 2],
                             delta[n - 3]);
}

MonotoneCubic::Local MonotoneCubic::locate(double x) const {
  if (x < x_.front() || x > x_.back())
    throw DomainError("MonotoneCubic: abscissa outside the tabulated range");
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(std::distance(x_.begin(), it));
  i = std::clamp<std::size_t>(i, 1, x_.size() - 1) - 1;
  const double h = x_[i + 1] - x_[i];
  return {i, h, (x - x_[i]) / h};
}

double MonotoneCubic::operator()(double x) const {
  const auto [i, h, s] = locate(x);
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y_[i] + (s3 - 2 * s2 + s) * h * slopes_[i] +
         (-2 * s3 + 3 * s2) * y_[i + 1] + (s3 - s2) * h * slopes_[i + 1];
}

double MonotoneCubic::prime(double x) const {
  const auto [i, h, s] = locate(x);
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * y_[i] + (-6 * s2 + 6 * s) * y_[i + 1]) / h +
         (3 * s2 - 4 * s + 1) * slopes_[i] + (3 * s2 - 2 * s) * slopes_[i + 1];
}

double MonotoneCubic::second(double x) const {
  const auto [i, h, s] = locate(x);
  return ((12 * s - 6) * y_[i] + (-12 * s + 6) * y_[i + 1]) / (h * h) +
         ((6 * s - 4) * slopes_[i] + (6 * s - 2) * slopes_[i + 1]) / h;
}

void polar_derivatives(std::span<const double> u, double h, std::span<double> du,
                       std::span<double> d2u, bool odd) {
  const long n = static_cast<long>(u.size());
  if (n < 3) throw InvalidArgument("polar_derivatives: need at least three nodes");
  const double sign = odd ? -1.0 : 1.0;
  auto at = [&](long k) {
    if (k < 0) return sign * u[static_cast<std::size_t>(-k)];
    if (k > n - 1) return sign * u[static_cast<std::size_t>(2 * (n - 1) - k)];
    return u[static_cast<std::size_t>(k)];
  };
  for (long k = 0; k < n; ++k) {
    const double um2 = at(k - 2), um1 = at(k - 1), u0 = at(k), up1 = at(k + 1), up2 = at(k + 2);
    if (!du.empty()) du[k] = (um2 - 8.0 * um1 + 8.0 * up1 - up2) / (12.0 * h);
    if (!d2u.empty()) d2u[k] = (-um2 + 16.0 * um1 - 30.0 * u0 + 16.0 * up1 - up2) / (12.0 * h * h);
  }
}

}  // namespace emflow
