#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ufno/grid.hpp"
#include "ufno/scene.hpp"

namespace ufno {

/// Wind directions name the side the wind comes FROM; the inflow face and the
/// sign of the normal velocity follow. 0/90/180/270 degrees = west/north/
/// east/south.
enum class InflowDirection { west = 0, north = 90, east = 180, south = 270 };

InflowDirection direction_from_degrees(int degrees);

enum class InterpOrder { linear, cubic };

/// open_channel: inflow/outflow plus free-slip laterals and top, no-slip
/// ground. closed_box: no-slip on all six faces (used by conservation tests).
enum class BoundaryMode { open_channel, closed_box };

enum class PoissonMethod { jacobi, sor };

struct SolverConfig {
  double reynolds = 1.0e4;
  double prandtl = 0.71;
  double grashof = 0.0;
  double smagorinsky_cs = 0.14; // within [0.1, 0.24]
  double courant = 0.4;
  double u_ref = 4.0; // m/s
  double z_ref = 8.0; // m, reference height of the inflow profile
  double alpha = 0.25; // power-law exponent
  InflowDirection direction = InflowDirection::west;
  bool thermal = false;
  double prandtl_turbulent = 0.9;
  InterpOrder interpolation = InterpOrder::cubic;
  BoundaryMode boundary = BoundaryMode::open_channel;
  bool slip_ground = false; // free-slip floor (uniform-flow verification runs)
  PoissonMethod poisson = PoissonMethod::jacobi;
  double projection_tol = 1.0e-4; // max-norm divergence, lattice units
  std::uint32_t max_projection_iters = 40000;

  void validate() const;
  /// courant * min(dx,dy,dz) / u_ref
  double dt(const Grid3& grid) const;
  /// Molecular kinematic viscosity implied by Re with scales (u_ref, z_ref).
  double molecular_viscosity() const { return u_ref * z_ref / reynolds; }
};

/// Collocated cell-centered state. Per-component boundary pinning follows the
/// configuration: pinned components hold boundary values and are never moved
/// by the projection.
///
/// Discrete operators (the consistent D/G pair of the projection):
///   divergence  (forward):  div_i = (u[i+1]-u[i])/dx + ...; boundary faces
///                           carry the cell's own pinned/copied value, so
///                           their terms vanish.
///   gradient   (backward):  u[i] -= dt*(p[i]-p[i-1])/dx.
/// Their composition is the compact 7-point Laplacian, so the projection can
/// drive the discrete divergence to the requested tolerance.
struct SolverState {
  Grid3 grid;
  BuildingMask mask;
  std::vector<double> u, v, w, p, theta, nu_t;
  double time = 0.0;

  // Diagnostics of the most recent projection.
  std::uint32_t last_projection_iters = 0;
  double last_divergence = 0.0; // lattice units, post-correction
  bool last_projection_converged = true;

  static SolverState initial(const BuildingMask& mask, const SolverConfig& cfg);
};

/// Power-law inflow speed at height z above the domain floor, clamped below
/// the first cell-center height.
double inflow_profile(double z, double z_first_center, const SolverConfig& cfg);

/// Samples a cell-centered scalar array at an arbitrary position. Positions
/// clamp to the cell-center hull. Cubic uses a shifted 4-point Lagrange
/// stencil per axis (reproduces cubics exactly, including at boundaries).
double interpolate(const Grid3& grid, const std::vector<double>& field,
                   const std::array<double, 3>& pos, InterpOrder order);

/// Departure point of the semi-Lagrangian trace: one Euler step against the
/// frozen velocity, clamped to the domain, then pulled back along the segment
/// to the fluid side if it lands inside a solid cell.
std::array<double, 3> backtrace(const SolverState& state, const std::array<double, 3>& pos,
                                double dt);

/// nu_t = (c_s * delta)^2 * |S|, delta = (dx dy dz)^(1/3), |S| the
/// central-difference strain-rate magnitude sqrt(2 S_ij S_ij).
std::vector<double> smagorinsky(const Grid3& grid, const std::vector<double>& u,
                                const std::vector<double>& v, const std::vector<double>& w,
                                double cs);

void apply_boundary_conditions(SolverState& state, const SolverConfig& cfg);

/// Pressure projection. Solves the compact Poisson system with Neumann
/// walls/solids and p=0 on the outflow layer, then subtracts the gradient.
/// Reports iterations and the achieved lattice divergence in the state; a
/// miss of the tolerance sets last_projection_converged = false.
void project(SolverState& state, const SolverConfig& cfg);

/// One full time step: advect, diffuse, buoyancy (thermal runs), boundary
/// conditions, projection. Throws on NaN with the offending stage named.
void step(SolverState& state, const SolverConfig& cfg);

double kinetic_energy(const SolverState& state);

/// Velocity magnitude of the current state, zeroed inside buildings.
ScalarField magnitude_field(const SolverState& state);

struct StepStats {
  std::uint32_t projection_iters = 0;
  double divergence = 0.0;
  double wall_ms = 0.0;
};

struct RunResult {
  FieldSequence sequence;
  BuildingMask mask;
  SolverState final_state;
  double dt = 0.0;
  std::vector<StepStats> steps;
};

/// Runs n_steps from the standard initial condition (inflow profile filling
/// the fluid region) and returns every output_stride-th magnitude field.
RunResult run_simulation(const SceneSpec& scene, const SolverConfig& cfg, std::uint32_t n_steps,
                         std::uint32_t output_stride = 1);

} // namespace ufno
