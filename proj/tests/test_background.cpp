#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "emflow/background.hpp"
#include "emflow/errors.hpp"
#include "emflow/numerics.hpp"

using namespace emflow;
using doctest::Approx;
constexpr double pi = std::numbers::pi;

namespace {

// Closed-form RN data, written out independently of the library.
double rn_V(int n, double m, double q, double r) {
  const int k = n - 2;
  return 1 - 2 * m / std::pow(r, k) + q * q / std::pow(r, 2 * k);
}

double rn_horizon(int n, double m, double q) {
  return std::pow(m + std::sqrt(m * m - q * q), 1.0 / (n - 2));
}

// Laplacian of a radial function in V^{-1}dr^2 + r^2 g_S, by centred
// differences of f and V.
double fd_laplacian(const std::function<double(double)>& f, const std::function<double(double)>& V,
                    int n, double r) {
  const double h = 1e-4 * r;
  const double f1 = (f(r + h) - f(r - h)) / (2 * h);
  const double f2 = (f(r + h) - 2 * f(r) + f(r - h)) / (h * h);
  const double V1 = (V(r + h) - V(r - h)) / (2 * h);
  return V(r) * f2 + 0.5 * V1 * f1 + (n - 1) * V(r) * f1 / r;
}

}  // namespace

TEST_CASE("RN evaluators match the closed forms") {
  const auto rn = build_rn({3, 1.0, 0.6});
  CHECK(rn.horizon_radius().value() == Approx(1.8).epsilon(1e-14));
  CHECK(rn.V(3.0) == Approx(1 - 2.0 / 3 + 0.36 / 9).epsilon(1e-15));
  CHECK(rn.f(3.0) == Approx(std::sqrt(rn.V(3.0))).epsilon(1e-15));
  CHECK(rn.psi(3.0) == Approx(0.6 / 3.0).epsilon(1e-15));  // sqrt((n-1)/(2(n-2))) = 1 at n = 3

  const auto rn4 = build_rn({4, 1.0, 0.5});
  CHECK(rn4.horizon_radius().value() == Approx(rn_horizon(4, 1.0, 0.5)).epsilon(1e-14));
  CHECK(rn4.psi(2.0) == Approx(std::sqrt(3.0 / 4.0) * 0.5 / 4.0).epsilon(1e-14));

  CHECK_FALSE(build_rn({3, 1.0, 1.2}).horizon_radius().has_value());
  CHECK(build_rn({3, 1.0, 1.0}).horizon_radius().value() == Approx(1.0));
}

TEST_CASE("RN factory rejects bad parameters") {
  CHECK_THROWS_AS(build_rn({2, 1.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(build_rn({8, 1.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(build_rn({3, 0.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(build_rn({3, -1.0, 0.0}), InvalidArgument);
}

TEST_CASE("curvature is undefined at or inside the horizon") {
  const auto rn = build_rn({3, 1.0, 0.6});
  CHECK_THROWS_AS(curvature_at(rn, 1.8), DomainError);
  CHECK_THROWS_AS(curvature_at(rn, 1.0), DomainError);
  CHECK_NOTHROW(curvature_at(rn, 1.81));
}

TEST_CASE("scalar curvature of RN is (n-1)(n-2) q^2 / r^{2(n-1)}") {
  const auto c = curvature_at(build_rn({3, 1.0, 0.6}), 3.0);
  CHECK(c.scalar == Approx(0.0088888888888889).epsilon(1e-12));
  for (int n = 3; n <= 7; ++n) {
    const auto model = build_rn({n, 1.0, 0.4});
    for (double r : {1.2 * model.domain_floor(), 2.0 * model.domain_floor(), 4.0}) {
      const double expected = (n - 1.0) * (n - 2.0) * 0.16 / std::pow(r, 2 * (n - 1));
      CHECK(std::abs(curvature_at(model, r).scalar - expected) < 1e-12);
    }
  }
}

TEST_CASE("Laplacian of f agrees with a finite-difference oracle") {
  for (int n : {3, 4, 5}) {
    const auto model = build_rn({n, 1.0, 0.6});
    auto V = [&](double r) { return rn_V(n, 1.0, 0.6, r); };
    auto f = [&](double r) { return std::sqrt(V(r)); };
    for (double r : {1.6, 2.5, 6.0}) {
      if (r <= 1.1 * model.domain_floor()) continue;
      const auto c = curvature_at(model, r);
      CHECK(c.lap_f == Approx(fd_laplacian(f, V, n, r)).epsilon(1e-6));
    }
  }
}

TEST_CASE("property: RN backgrounds solve the field equations") {
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> mass(0.2, 3.0), frac(0.0, 1.0);
  std::uniform_int_distribution<int> dim(3, 7);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = dim(rng);
    const double m = mass(rng);
    const double q = m * frac(rng);
    const auto model = build_rn({n, m, q});
    const double rh = model.domain_floor();
    const auto grid = linspace(1.05 * rh, 20 * rh, 60);
    const auto res = field_residuals(model, grid);
    INFO("n=", n, " m=", m, " q=", q);
    CHECK(res.max() < 1e-8);
  }
}

TEST_CASE("perturbed backgrounds are detected") {
  const auto rn = build_rn({3, 1.0, 0.6});
  // one percent at the horizon, decaying outward
  auto V = [](double r) { return rn_V(3, 1.0, 0.6, r) * (1 + 0.01 * std::exp(1.8 - r)); };
  auto f = [](double r) { return std::sqrt(rn_V(3, 1.0, 0.6, r)); };
  auto psi = [](double r) { return 0.6 / r; };
  const auto bad = build_custom(3, V, f, psi, 0.0, 1.8, "perturbed");
  CHECK_FALSE(bad.has_closed_derivatives());
  const auto grid = linspace(1.98, 18.0, 100);
  CHECK(field_residuals(bad, grid).max() > 1e-4);

  // the unperturbed evaluators through the same finite-difference path stay small
  const auto fd = build_custom(
      3, [](double r) { return rn_V(3, 1.0, 0.6, r); }, f, psi, 0.0, 1.8, "fd");
  CHECK(field_residuals(fd, grid).max() < 1e-6);
}

TEST_CASE("flat space is curvature free") {
  const auto flat = build_flat(3);
  CHECK_FALSE(flat.horizon_radius().has_value());
  const auto c = curvature_at(flat, 2.0);
  CHECK(c.scalar == 0.0);
  CHECK(c.lap_f == 0.0);
  const auto grid = linspace(0.1, 10.0, 50);
  CHECK(field_residuals(flat, grid).max() == 0.0);
}

TEST_CASE("photon spheres") {
  const auto schw = photon_sphere_radii(build_rn({3, 1.0, 0.0}));
  REQUIRE(schw.size() == 1);
  CHECK(std::abs(schw[0].radius - 3.0) < 1e-12);
  CHECK(schw[0].admissible);

  const auto rn = build_rn({3, 1.0, 0.6});
  const auto roots = photon_sphere_radii(rn);
  REQUIRE_FALSE(roots.empty());
  const double outer = (3.0 + std::sqrt(9.0 - 8 * 0.36)) / 2.0;
  CHECK(std::abs(roots.back().radius - outer) < 1e-10);
  CHECK(std::abs(roots.back().radius - 2.736932) < 1e-6);
  for (const auto& p : roots) {
    if (!p.admissible) continue;
    const double r = p.radius;
    CHECK(std::abs(r * rn.dV(r) - 2 * rn.V(r)) < 1e-10);
  }

  for (const auto& p : photon_sphere_radii(build_rn({3, 1.0, 1.2}))) CHECK_FALSE(p.admissible);

  // the existence boundary 9 m^2 = 8 q^2
  auto exists = [](double q) {
    for (const auto& p : photon_sphere_radii(build_rn({3, 1.0, q})))
      if (p.admissible) return true;
    return false;
  };
  CHECK(exists(1.055));
  CHECK_FALSE(exists(1.065));

  // uncharged, any n: r^{n-2} = n m
  const auto r5 = photon_sphere_radii(build_rn({5, 1.0, 0.0}));
  REQUIRE_FALSE(r5.empty());
  CHECK(r5.back().radius == Approx(std::cbrt(5.0)).epsilon(1e-10));
  CHECK(photon_sphere_radii(build_flat(3)).empty());
}

TEST_CASE("ADM flux: closed form, quadrature and extrapolated mass") {
  const auto rn = build_rn({3, 1.0, 0.6});
  for (double r : {2.0, 3.0, 10.0, 50.0}) {
    const double closed = 4 * pi * (1.0 - 0.36 / r);
    CHECK(std::abs(adm_flux(rn, r) - closed) < 1e-8);
    CHECK(std::abs(adm_flux_quadrature(rn, r) - closed) < 1e-5);
  }
  CHECK(adm_flux(rn, 3.0) == Approx(11.0584).epsilon(1e-5));
  const auto fit = adm_mass_extrapolate(rn, 5.0);
  CHECK(std::abs(fit.flux_limit - 4 * pi) < 1e-4);
  CHECK(fit.mass == Approx(1.0).epsilon(1e-5));

  const auto rn4 = build_rn({4, 2.0, 1.0});
  CHECK(adm_flux(rn4, 3.0) == Approx(2 * 2 * pi * pi * (2.0 - 1.0 / 9.0)).epsilon(1e-10));
  CHECK(adm_mass_extrapolate(rn4, 4.0).mass == Approx(2.0).epsilon(1e-6));
}

TEST_CASE("hypothesis audit on RN(3,1,0.6)") {
  const auto audit = hypothesis_audit(build_rn({3, 1.0, 0.6}), 1.9, 10.0);
  CHECK(audit.epsilon == Approx(0.72 / 1e4).epsilon(1e-6));
  CHECK(audit.upper == Approx(0.72 / std::pow(1.9, 4)).epsilon(1e-6));
  CHECK(audit.upper == Approx(0.055248).epsilon(1e-4));
  CHECK(audit.epsilon_positive);
  CHECK_FALSE(audit.epsilon_positive_global);
  CHECK(audit.upper_within_bound);
  CHECK(audit.epsilon_prime == Approx(audit.epsilon / 2));
  CHECK(audit.f_decay_ok);
  CHECK(audit.remainder_ok);
  CHECK(audit.metric_decay_ok);
  CHECK(audit.mass_fit == Approx(1.0).epsilon(1e-4));
  const auto v = audit.violations();
  REQUIRE(v.size() == 1);
  CHECK(v[0] == "scalar_curvature_positive_global");
}

TEST_CASE("hypothesis audit flags flat space") {
  const auto audit = hypothesis_audit(build_flat(3), 0.5, 10.0);
  CHECK_FALSE(audit.epsilon_positive);
  const auto v = audit.violations();
  CHECK(std::find(v.begin(), v.end(), "scalar_curvature_positive_on_interval") != v.end());
}

TEST_CASE("tabulated background reproduces RN") {
  const auto rn = build_rn({3, 1.0, 0.6});
  const auto path = std::filesystem::temp_directory_path() / "emflow_table_test.csv";
  {
    std::ofstream out(path);
    out << "r,V,f,psi\n";
    out.precision(17);
    for (double r : linspace(1.8, 20.0, 2001))
      out << r << ',' << rn.V(r) << ',' << rn.f(r) << ',' << rn.psi(r) << '\n';
  }
  const auto table = load_table_csv(3, path);
  CHECK(table.horizon_radius().value() == Approx(1.8));
  CHECK(table.r_max() == Approx(20.0));
  for (double r : {2.3, 3.0, 7.77}) {
    CHECK(table.V(r) == Approx(rn.V(r)).epsilon(1e-7));
    CHECK(table.dV(r) == Approx(rn.dV(r)).epsilon(1e-4));
  }
  CHECK_THROWS_AS(curvature_at(table, 25.0), DomainError);
  std::filesystem::remove(path);

  const auto bad = std::filesystem::temp_directory_path() / "emflow_table_bad.csv";
  {
    std::ofstream out(bad);
    out << "r,V\n1,2\n";
  }
  CHECK_THROWS_AS(load_table_csv(3, bad), InvalidArgument);
  std::filesystem::remove(bad);
}
