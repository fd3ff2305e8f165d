#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "emflow/background.hpp"

namespace emflow {

/// How the enclosed region Omega sits relative to the horizon.
enum class Homology {
  Null,     // Omega bounded by Sigma alone, inner edge at r_min
  Horizon,  // boundary of Omega is Sigma together with the horizon
};

/// Coordinate sphere Sigma_t of radius r at flow time t.
struct SphereState {
  double t = 0.0;
  double r = 0.0;
};

/// Axisymmetric surface r = rho(theta), theta_k = k*pi/(N-1) uniformly,
/// in an n = 3 background. Poles are nodes 0 and N-1.
struct AxiSurface {
  double t = 0.0;
  std::vector<double> theta;
  std::vector<double> rho;
  std::string center_note;
};

using Hypersurface = std::variant<SphereState, AxiSurface>;

AxiSurface make_axi_surface(const std::function<double(double)>& profile, int nodes,
                            std::string center_note = "centred on r = 0");
/// Resamples an arbitrary (theta, rho) profile onto the uniform grid with a
/// monotone cubic interpolant. theta must start at 0 and end at pi.
AxiSurface resample_profile(std::span<const double> theta, std::span<const double> rho,
                            int nodes, std::string center_note = "centred on r = 0");

/// Mean curvature (n-1) sqrt(V)/r of the coordinate sphere with normal sqrt(V) d_r.
double mean_curvature_sphere(const BackgroundModel& model, double r);

struct NodeGeometry {
  double H = 0.0;
  double h_norm_sq = 0.0;        // |h|^2
  double kappa_meridian = 0.0;
  double kappa_parallel = 0.0;
  double normal_r = 0.0;         // coordinate components of the unit normal
  double normal_theta = 0.0;
  double frame_normal_r = 0.0;   // orthonormal-frame components
  double frame_normal_theta = 0.0;
  double area_density = 0.0;     // d(area)/d(theta), rotation factor 2 pi included
  double speed_factor = 0.0;     // W = |dr - rho' dtheta|_g; graph speed = W * normal speed
  double drho = 0.0;
  double d2rho = 0.0;
};

struct AxiGeometry {
  std::vector<NodeGeometry> nodes;
  double area = 0.0;
  double int_fH = 0.0;
  double int_f_over_H = 0.0;
  double H_min = 0.0;
  double H_max = 0.0;
};

/// First and second fundamental forms of the surface of revolution in
/// V^{-1} dr^2 + r^2 (dtheta^2 + sin^2 theta dphi^2); fourth-order differences
/// in theta, Simpson quadrature for the totals.
AxiGeometry geometry_of(const AxiSurface& surface, const BackgroundModel& model);

/// Laplace-Beltrami operator of the surface applied to an axisymmetric
/// nodal function u(theta).
std::vector<double> surface_laplacian(const AxiSurface& surface, const AxiGeometry& geometry,
                                      const BackgroundModel& model, std::span<const double> u);

struct FlowSettings {
  double h_floor = 1e-8;
  double cfl = 0.25;
};

/// One RK4 step of dr/dt = sqrt(V)/H.
SphereState step_radial_imcf(const BackgroundModel& model, const SphereState& state, double dt,
                             const FlowSettings& settings = {});

/// Advances the profile by dt under IMCF using CFL-limited RK4 substeps on
/// the graph form d(rho)/dt = W/H (normal motion at speed 1/H followed by
/// tangential reparametrisation back onto the fixed theta grid).
AxiSurface step_axisym_imcf(const BackgroundModel& model, const AxiSurface& surface, double dt,
                            const FlowSettings& settings = {});

/// Largest stable substep c_cfl (dtheta min rho)^2 (min H)^2.
double axisym_cfl_step(const AxiSurface& surface, const AxiGeometry& geometry,
                       const FlowSettings& settings);

/// d/dt(f/H) along the inward conformal flow (speed f) and its lemma bound.
struct ConformalRate {
  double f_over_H = 0.0;
  double rate = 0.0;
  double bound = 0.0;  // -f^2/(n-1)
};

template <typename State>
struct ConformalStep {
  State state;
  std::vector<ConformalRate> rates;
};

std::vector<ConformalRate> conformal_rates(const BackgroundModel& model, const SphereState& s);
std::vector<ConformalRate> conformal_rates(const BackgroundModel& model, const AxiSurface& s);

ConformalStep<SphereState> conformal_flow_step(const BackgroundModel& model,
                                               const SphereState& state, double dt);
ConformalStep<AxiSurface> conformal_flow_step(const BackgroundModel& model,
                                              const AxiSurface& surface, double dt,
                                              const FlowSettings& settings = {});

/// Inner radius of Omega for the homology class.
double region_inner_radius(const BackgroundModel& model, Homology homology);

/// Integral of f over Omega.
double weighted_volume(const BackgroundModel& model, const SphereState& state, Homology homology);
double weighted_volume(const BackgroundModel& model, const AxiSurface& surface, Homology homology);
double weighted_volume(const BackgroundModel& model, const Hypersurface& surface,
                       Homology homology);

/// Totals shared by the functionals.
struct SurfaceTotals {
  double area = 0.0;
  double int_fH = 0.0;
  double int_f_over_H = 0.0;
  double H_min = 0.0;
  double H_max = 0.0;
  double representative_radius = 0.0;  // (area / omega_{n-1})^{1/(n-1)}
};

SurfaceTotals surface_totals(const BackgroundModel& model, const Hypersurface& surface);

/// Per-node data for the IMCF evolution equation of H.
struct EvolutionSample {
  std::vector<double> H;
  std::vector<double> rhs;        // -lap(1/H) - (|h|^2 + Ric(nu,nu))/H
  std::vector<double> advection;  // theta_dot * dH/dtheta along normal trajectories
};

struct TraceRecord {
  double t = 0.0;
  double r_rep = 0.0;
  double area = 0.0;
  double int_fH = 0.0;
  double int_f_dv = 0.0;
  double int_f_over_H = 0.0;
  double H_min = 0.0;
  double H_max = 0.0;
  double res_smooth = 0.0;  // max over nodes of d/dt(f/H) + f^2/(n-1)
};

struct FlowTrace {
  int n = 3;
  Homology homology = Homology::Horizon;
  std::vector<TraceRecord> records;
  std::vector<EvolutionSample> evolution;
};

struct FlowRun {
  double t_end = 1.0;
  double dt = 1e-3;
  Homology homology = Homology::Horizon;
  FlowSettings settings;
};

/// Runs IMCF from `initial` to t_end, recording every dt (last step clipped).
FlowTrace run_imcf(const BackgroundModel& model, const Hypersurface& initial, const FlowRun& run);

EvolutionSample evolution_sample(const BackgroundModel& model, const Hypersurface& surface);

}  // namespace emflow
