#include "ufno/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <string>

namespace ufno {

InflowDirection direction_from_degrees(int degrees) {
  switch (((degrees % 360) + 360) % 360) {
    case 0: return InflowDirection::west;
    case 90: return InflowDirection::north;
    case 180: return InflowDirection::east;
    case 270: return InflowDirection::south;
  }
  fail(ErrorCode::invalid_argument,
       "direction must be one of 0, 90, 180, 270 degrees, got " + std::to_string(degrees));
}

void SolverConfig::validate() const {
  if (!(reynolds > 0.0)) fail(ErrorCode::invalid_argument, "config: Re must be positive");
  if (!(prandtl > 0.0)) fail(ErrorCode::invalid_argument, "config: Pr must be positive");
  if (smagorinsky_cs < 0.1 || smagorinsky_cs > 0.24)
    fail(ErrorCode::invalid_argument, "config: c_s must lie in [0.1, 0.24]");
  if (!(courant > 0.0) || courant >= 1.0)
    fail(ErrorCode::invalid_argument, "config: courant must lie in (0, 1)");
  if (!(u_ref > 0.0) || !(z_ref > 0.0))
    fail(ErrorCode::invalid_argument, "config: u_ref and z_ref must be positive");
  if (alpha < 0.0) fail(ErrorCode::invalid_argument, "config: power-law exponent must be >= 0");
  if (thermal && !(prandtl_turbulent > 0.0))
    fail(ErrorCode::invalid_argument, "config: Pr_t must be positive");
  if (!(projection_tol > 0.0)) fail(ErrorCode::invalid_argument, "config: projection_tol must be positive");
  if (max_projection_iters == 0)
    fail(ErrorCode::invalid_argument, "config: max_projection_iters must be >= 1");
}

double SolverConfig::dt(const Grid3& grid) const {
  return courant * std::min({grid.dx, grid.dy, grid.dz}) / u_ref;
}

double inflow_profile(double z, double z_first_center, const SolverConfig& cfg) {
  const double zeff = std::max(z, z_first_center);
  return cfg.u_ref * std::pow(zeff / cfg.z_ref, cfg.alpha);
}

namespace {

struct Faces {
  // Axis (0=x, 1=y) and side (0=min, 1=max) of the inflow/outflow pair, and
  // the sign of the inflow's normal velocity.
  int axis = 0;
  int inflow_side = 0;
  double sign = 1.0;
};

Faces faces_for(InflowDirection d) {
  switch (d) {
    case InflowDirection::west: return {0, 0, +1.0};
    case InflowDirection::east: return {0, 1, -1.0};
    case InflowDirection::north: return {1, 1, -1.0};
    case InflowDirection::south: return {1, 0, +1.0};
  }
  fail(ErrorCode::invalid_argument, "bad direction");
}

/// Per-component boundary pins: 1 where the projection must not move the
/// component because a boundary or solid condition owns it.
struct Pins {
  std::vector<std::uint8_t> u, v, w;
};

Pins compute_pins(const SolverState& s, const SolverConfig& cfg) {
  const Grid3& g = s.grid;
  const std::size_t n = g.cell_count();
  Pins pins{std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0),
            std::vector<std::uint8_t>(n, 0)};
  auto pin_all = [&](std::size_t c) { pins.u[c] = pins.v[c] = pins.w[c] = 1; };

  for (std::uint32_t k = 0; k < g.nz; ++k)
    for (std::uint32_t j = 0; j < g.ny; ++j)
      for (std::uint32_t i = 0; i < g.nx; ++i) {
        const std::size_t c = g.index(i, j, k);
        if (s.mask.solid[c]) {
          pin_all(c);
          continue;
        }
        if (cfg.boundary == BoundaryMode::closed_box) {
          if (i == 0 || i == g.nx - 1 || j == 0 || j == g.ny - 1 || k == 0 || k == g.nz - 1)
            pin_all(c);
          continue;
        }
        const Faces f = faces_for(cfg.direction);
        if (k == 0) {
          if (cfg.slip_ground)
            pins.w[c] = 1; // free-slip floor
          else
            pin_all(c); // no-slip ground
        }
        if (k == g.nz - 1) pins.w[c] = 1;             // free-slip top
        if (f.axis == 0) {
          if ((f.inflow_side == 0 && i == 0) || (f.inflow_side == 1 && i == g.nx - 1))
            pin_all(c);                               // inflow layer
          if (j == 0 || j == g.ny - 1) pins.v[c] = 1; // free-slip laterals
        } else {
          if ((f.inflow_side == 0 && j == 0) || (f.inflow_side == 1 && j == g.ny - 1)) pin_all(c);
          if (i == 0 || i == g.nx - 1) pins.u[c] = 1;
        }
      }
  return pins;
}

bool in_outflow_layer(const Grid3& g, const SolverConfig& cfg, std::uint32_t i, std::uint32_t j) {
  if (cfg.boundary == BoundaryMode::closed_box) return false;
  const Faces f = faces_for(cfg.direction);
  if (f.axis == 0) return f.inflow_side == 0 ? (i == g.nx - 1) : (i == 0);
  return f.inflow_side == 0 ? (j == g.ny - 1) : (j == 0);
}

std::array<double, 3> cell_center(const Grid3& g, std::uint32_t i, std::uint32_t j,
                                  std::uint32_t k) {
  return {g.xc(i), g.yc(j), g.zc(k)};
}

bool solid_at(const Grid3& g, const BuildingMask& mask, const std::array<double, 3>& pos) {
  auto cell = [&](double p, double o, double h, std::uint32_t n) {
    return std::uint32_t(std::clamp(std::floor((p - o) / h), 0.0, double(n - 1)));
  };
  return mask.solid[g.index(cell(pos[0], g.origin[0], g.dx, g.nx),
                            cell(pos[1], g.origin[1], g.dy, g.ny),
                            cell(pos[2], g.origin[2], g.dz, g.nz))] != 0;
}

double lagrange_cubic_axis(const double* vals, double xi) {
  const double a = xi - 1.0, b = xi - 2.0, c = xi - 3.0;
  const double w0 = -a * b * c / 6.0;
  const double w1 = xi * b * c / 2.0;
  const double w2 = -xi * a * c / 2.0;
  const double w3 = xi * a * b / 6.0;
  return w0 * vals[0] + w1 * vals[1] + w2 * vals[2] + w3 * vals[3];
}

void check_finite_stage(const SolverState& s, const char* stage) {
  for (const double* arr : {s.u.data(), s.v.data(), s.w.data()})
    for (std::size_t c = 0; c < s.grid.cell_count(); ++c)
      if (!std::isfinite(arr[c]))
        fail(ErrorCode::numeric,
             std::string("solver stage '") + stage + "' produced a non-finite velocity at cell " +
                 std::to_string(c));
}

} // namespace

SolverState SolverState::initial(const BuildingMask& mask, const SolverConfig& cfg) {
  cfg.validate();
  mask.validate();
  SolverState s;
  s.grid = mask.grid;
  s.mask = mask;
  const std::size_t n = s.grid.cell_count();
  s.u.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.w.assign(n, 0.0);
  s.p.assign(n, 0.0);
  s.theta.assign(n, 0.0);
  s.nu_t.assign(n, 0.0);

  if (cfg.boundary == BoundaryMode::open_channel) {
    const Faces f = faces_for(cfg.direction);
    for (std::uint32_t k = 0; k < s.grid.nz; ++k) {
      const double speed = inflow_profile(s.grid.zc(k) - s.grid.origin[2],
                                          0.5 * s.grid.dz, cfg) * f.sign;
      for (std::uint32_t j = 0; j < s.grid.ny; ++j)
        for (std::uint32_t i = 0; i < s.grid.nx; ++i) {
          const std::size_t c = s.grid.index(i, j, k);
          if (s.mask.solid[c]) continue;
          (f.axis == 0 ? s.u[c] : s.v[c]) = speed;
        }
    }
  }
  apply_boundary_conditions(s, cfg);
  return s;
}

double interpolate(const Grid3& grid, const std::vector<double>& field,
                   const std::array<double, 3>& pos, InterpOrder order) {
  if (field.size() != grid.cell_count())
    fail(ErrorCode::invalid_argument, "interpolate: field size does not match grid");
  const std::size_t n[3] = {grid.nx, grid.ny, grid.nz};
  const double h[3] = {grid.dx, grid.dy, grid.dz};
  double sc[3];
  for (int a = 0; a < 3; ++a) {
    // Cell-center coordinates; queries clamp to the center hull.
    sc[a] = std::clamp((pos[a] - grid.origin[a]) / h[a] - 0.5, 0.0, double(n[a] - 1));
  }

  if (order == InterpOrder::linear) {
    std::size_t i0[3];
    double t[3];
    for (int a = 0; a < 3; ++a) {
      i0[a] = std::min(std::size_t(sc[a]), std::size_t(n[a] - 2));
      t[a] = sc[a] - double(i0[a]);
    }
    double acc = 0.0;
    for (int dk = 0; dk < 2; ++dk)
      for (int dj = 0; dj < 2; ++dj) {
        const double wjk = (dj ? t[1] : 1.0 - t[1]) * (dk ? t[2] : 1.0 - t[2]);
        const std::size_t base = grid.index(std::uint32_t(i0[0]), std::uint32_t(i0[1] + dj),
                                            std::uint32_t(i0[2] + dk));
        acc += wjk * ((1.0 - t[0]) * field[base] + t[0] * field[base + 1]);
      }
    return acc;
  }

  // Shifted 4-point Lagrange stencil per axis; falls back to linear along
  // axes with fewer than 4 cells.
  std::size_t s0[3];
  double xi[3];
  bool cubic_axis[3];
  for (int a = 0; a < 3; ++a) {
    cubic_axis[a] = n[a] >= 4;
    if (cubic_axis[a]) {
      const double base = std::floor(sc[a]) - 1.0;
      s0[a] = std::size_t(std::clamp(base, 0.0, double(n[a] - 4)));
      xi[a] = sc[a] - double(s0[a]);
    } else {
      s0[a] = std::min(std::size_t(sc[a]), std::size_t(n[a] - 2));
      xi[a] = sc[a] - double(s0[a]);
    }
  }

  double zvals[4];
  const int kz_n = cubic_axis[2] ? 4 : 2;
  const int ky_n = cubic_axis[1] ? 4 : 2;
  for (int dk = 0; dk < kz_n; ++dk) {
    double yvals[4];
    for (int dj = 0; dj < ky_n; ++dj) {
      const std::size_t row =
          grid.index(std::uint32_t(s0[0]), std::uint32_t(s0[1] + dj), std::uint32_t(s0[2] + dk));
      if (cubic_axis[0]) {
        yvals[dj] = lagrange_cubic_axis(&field[row], xi[0]);
      } else {
        yvals[dj] = (1.0 - xi[0]) * field[row] + xi[0] * field[row + 1];
      }
    }
    zvals[dk] = cubic_axis[1] ? lagrange_cubic_axis(yvals, xi[1])
                              : (1.0 - xi[1]) * yvals[0] + xi[1] * yvals[1];
  }
  return cubic_axis[2] ? lagrange_cubic_axis(zvals, xi[2])
                       : (1.0 - xi[2]) * zvals[0] + xi[2] * zvals[1];
}

std::array<double, 3> backtrace(const SolverState& s, const std::array<double, 3>& pos,
                                double dt) {
  const Grid3& g = s.grid;
  auto cell = [&](double p, double o, double h, std::uint32_t n) {
    return std::uint32_t(std::clamp(std::floor((p - o) / h), 0.0, double(n - 1)));
  };
  const std::size_t c = g.index(cell(pos[0], g.origin[0], g.dx, g.nx),
                                cell(pos[1], g.origin[1], g.dy, g.ny),
                                cell(pos[2], g.origin[2], g.dz, g.nz));
  std::array<double, 3> dep = {pos[0] - dt * s.u[c], pos[1] - dt * s.v[c],
                               pos[2] - dt * s.w[c]};
  const auto ext = g.extent();
  for (int a = 0; a < 3; ++a)
    dep[a] = std::clamp(dep[a], g.origin[a], g.origin[a] + ext[a]);

  if (!solid_at(g, s.mask, dep)) return dep;
  // Pull back toward the (fluid) arrival point: bisect for the interface and
  // land on its fluid side.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    const std::array<double, 3> probe = {pos[0] + mid * (dep[0] - pos[0]),
                                         pos[1] + mid * (dep[1] - pos[1]),
                                         pos[2] + mid * (dep[2] - pos[2])};
    (solid_at(g, s.mask, probe) ? hi : lo) = mid;
  }
  return {pos[0] + lo * (dep[0] - pos[0]), pos[1] + lo * (dep[1] - pos[1]),
          pos[2] + lo * (dep[2] - pos[2])};
}

std::vector<double> smagorinsky(const Grid3& g, const std::vector<double>& u,
                                const std::vector<double>& v, const std::vector<double>& w,
                                double cs) {
  const double delta = std::cbrt(g.dx * g.dy * g.dz);
  const double coeff = (cs * delta) * (cs * delta);
  std::vector<double> nu_t(g.cell_count(), 0.0);

  auto deriv = [&](const std::vector<double>& f, std::uint32_t i, std::uint32_t j, std::uint32_t k,
                   int axis) {
    const std::uint32_t na[3] = {g.nx, g.ny, g.nz};
    const double ha[3] = {g.dx, g.dy, g.dz};
    std::uint32_t ip[3] = {i, j, k}, im[3] = {i, j, k};
    const std::uint32_t idx = (axis == 0) ? i : (axis == 1) ? j : k;
    double span = 2.0 * ha[axis];
    if (idx == 0) {
      ip[axis] = 1;
      span = ha[axis];
    } else if (idx == na[axis] - 1) {
      im[axis] = na[axis] - 2;
      span = ha[axis];
    } else {
      ip[axis] = idx + 1;
      im[axis] = idx - 1;
    }
    return (f[g.index(ip[0], ip[1], ip[2])] - f[g.index(im[0], im[1], im[2])]) / span;
  };

  for (std::uint32_t k = 0; k < g.nz; ++k)
    for (std::uint32_t j = 0; j < g.ny; ++j)
      for (std::uint32_t i = 0; i < g.nx; ++i) {
        const double ux = deriv(u, i, j, k, 0), uy = deriv(u, i, j, k, 1), uz = deriv(u, i, j, k, 2);
        const double vx = deriv(v, i, j, k, 0), vy = deriv(v, i, j, k, 1), vz = deriv(v, i, j, k, 2);
        const double wx = deriv(w, i, j, k, 0), wy = deriv(w, i, j, k, 1), wz = deriv(w, i, j, k, 2);
        const double sxy = 0.5 * (uy + vx), sxz = 0.5 * (uz + wx), syz = 0.5 * (vz + wy);
        const double ss =
            ux * ux + vy * vy + wz * wz + 2.0 * (sxy * sxy + sxz * sxz + syz * syz);
        nu_t[g.index(i, j, k)] = coeff * std::sqrt(2.0 * ss);
      }
  return nu_t;
}

void apply_boundary_conditions(SolverState& s, const SolverConfig& cfg) {
  const Grid3& g = s.grid;
  auto copy_cell = [&](std::size_t dst, std::size_t src) {
    s.u[dst] = s.u[src];
    s.v[dst] = s.v[src];
    s.w[dst] = s.w[src];
    s.theta[dst] = s.theta[src];
  };

  if (cfg.boundary == BoundaryMode::closed_box) {
    for (std::uint32_t k = 0; k < g.nz; ++k)
      for (std::uint32_t j = 0; j < g.ny; ++j)
        for (std::uint32_t i = 0; i < g.nx; ++i)
          if (i == 0 || i == g.nx - 1 || j == 0 || j == g.ny - 1 || k == 0 || k == g.nz - 1) {
            const std::size_t c = g.index(i, j, k);
            s.u[c] = s.v[c] = s.w[c] = 0.0;
          }
  } else {
    const Faces f = faces_for(cfg.direction);

    // Outflow: zero-gradient copy from the neighbor toward the interior.
    if (f.axis == 0) {
      const std::uint32_t io = f.inflow_side == 0 ? g.nx - 1 : 0;
      const std::uint32_t in = f.inflow_side == 0 ? g.nx - 2 : 1;
      for (std::uint32_t k = 0; k < g.nz; ++k)
        for (std::uint32_t j = 0; j < g.ny; ++j) copy_cell(g.index(io, j, k), g.index(in, j, k));
    } else {
      const std::uint32_t jo = f.inflow_side == 0 ? g.ny - 1 : 0;
      const std::uint32_t jn = f.inflow_side == 0 ? g.ny - 2 : 1;
      for (std::uint32_t k = 0; k < g.nz; ++k)
        for (std::uint32_t i = 0; i < g.nx; ++i) copy_cell(g.index(i, jo, k), g.index(i, jn, k));
    }

    // Free-slip laterals: zero normal component, zero-gradient tangentials.
    if (f.axis == 0) {
      for (std::uint32_t k = 0; k < g.nz; ++k)
        for (std::uint32_t i = 0; i < g.nx; ++i) {
          copy_cell(g.index(i, 0, k), g.index(i, 1, k));
          s.v[g.index(i, 0, k)] = 0.0;
          copy_cell(g.index(i, g.ny - 1, k), g.index(i, g.ny - 2, k));
          s.v[g.index(i, g.ny - 1, k)] = 0.0;
        }
    } else {
      for (std::uint32_t k = 0; k < g.nz; ++k)
        for (std::uint32_t j = 0; j < g.ny; ++j) {
          copy_cell(g.index(0, j, k), g.index(1, j, k));
          s.u[g.index(0, j, k)] = 0.0;
          copy_cell(g.index(g.nx - 1, j, k), g.index(g.nx - 2, j, k));
          s.u[g.index(g.nx - 1, j, k)] = 0.0;
        }
    }

    // Free-slip top.
    for (std::uint32_t j = 0; j < g.ny; ++j)
      for (std::uint32_t i = 0; i < g.nx; ++i) {
        copy_cell(g.index(i, j, g.nz - 1), g.index(i, j, g.nz - 2));
        s.w[g.index(i, j, g.nz - 1)] = 0.0;
      }

    // Inflow: power-law profile along the wind axis, zero cross components.
    if (f.axis == 0) {
      const std::uint32_t ii = f.inflow_side == 0 ? 0 : g.nx - 1;
      for (std::uint32_t k = 0; k < g.nz; ++k) {
        const double speed = inflow_profile(g.zc(k) - g.origin[2], 0.5 * g.dz, cfg) * f.sign;
        for (std::uint32_t j = 0; j < g.ny; ++j) {
          const std::size_t c = g.index(ii, j, k);
          s.u[c] = speed;
          s.v[c] = s.w[c] = 0.0;
          s.theta[c] = 0.0;
        }
      }
    } else {
      const std::uint32_t jj = f.inflow_side == 0 ? 0 : g.ny - 1;
      for (std::uint32_t k = 0; k < g.nz; ++k) {
        const double speed = inflow_profile(g.zc(k) - g.origin[2], 0.5 * g.dz, cfg) * f.sign;
        for (std::uint32_t i = 0; i < g.nx; ++i) {
          const std::size_t c = g.index(i, jj, k);
          s.v[c] = speed;
          s.u[c] = s.w[c] = 0.0;
          s.theta[c] = 0.0;
        }
      }
    }

    // Ground: no-slip by default, free-slip when configured.
    for (std::uint32_t j = 0; j < g.ny; ++j)
      for (std::uint32_t i = 0; i < g.nx; ++i) {
        const std::size_t c = g.index(i, j, 0);
        if (cfg.slip_ground) {
          copy_cell(c, g.index(i, j, 1));
          s.w[c] = 0.0;
        } else {
          s.u[c] = s.v[c] = s.w[c] = 0.0;
        }
      }
  }

  // Solids win over everything.
  for (std::size_t c = 0; c < g.cell_count(); ++c)
    if (s.mask.solid[c]) {
      s.u[c] = s.v[c] = s.w[c] = 0.0;
      s.theta[c] = 0.0;
    }
}

namespace {

struct PoissonOps {
  const Grid3& g;
  const SolverState& s;
  const Pins& pins;
  const SolverConfig& cfg;

  // Face correctability: the face whose plus-side cell holds the component.
  // A correction of u[c] reads p across the minus face; if that neighbor is
  // solid the correction degenerates to Neumann (no flux), so the stencil
  // must drop the connection too.
  bool ax_r(std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
    return i + 1 < g.nx && !pins.u[g.index(i + 1, j, k)];
  }
  bool ax_l(std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
    return i > 0 && !pins.u[g.index(i, j, k)] && !s.mask.solid[g.index(i - 1, j, k)];
  }
  bool ay_r(std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
    return j + 1 < g.ny && !pins.v[g.index(i, j + 1, k)];
  }
  bool ay_l(std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
    return j > 0 && !pins.v[g.index(i, j, k)] && !s.mask.solid[g.index(i, j - 1, k)];
  }
  bool az_r(std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
    return k + 1 < g.nz && !pins.w[g.index(i, j, k + 1)];
  }
  bool az_l(std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
    return k > 0 && !pins.w[g.index(i, j, k)] && !s.mask.solid[g.index(i, j, k - 1)];
  }
};

} // namespace

void project(SolverState& s, const SolverConfig& cfg) {
  const Grid3& g = s.grid;
  const std::size_t n = g.cell_count();
  const double dt = cfg.dt(g);
  const double ix2 = 1.0 / (g.dx * g.dx), iy2 = 1.0 / (g.dy * g.dy), iz2 = 1.0 / (g.dz * g.dz);
  const double hmin = std::min({g.dx, g.dy, g.dz});

  const Pins pins = compute_pins(s, cfg);
  const PoissonOps ops{g, s, pins, cfg};

  // Cell classification: 0 excluded (solid / empty row), 1 unknown,
  // 2 Dirichlet p=0 (outflow layer).
  std::vector<std::uint8_t> kind(n, 0);
  std::vector<double> rhs(n, 0.0), diag(n, 0.0);
  auto div_of = [&](std::uint32_t i, std::uint32_t j, std::uint32_t k) {
    const std::size_t c = g.index(i, j, k);
    double d = 0.0;
    if (i + 1 < g.nx) d += (s.u[g.index(i + 1, j, k)] - s.u[c]) / g.dx;
    if (j + 1 < g.ny) d += (s.v[g.index(i, j + 1, k)] - s.v[c]) / g.dy;
    if (k + 1 < g.nz) d += (s.w[g.index(i, j, k + 1)] - s.w[c]) / g.dz;
    return d;
  };

  for (std::uint32_t k = 0; k < g.nz; ++k)
    for (std::uint32_t j = 0; j < g.ny; ++j)
      for (std::uint32_t i = 0; i < g.nx; ++i) {
        const std::size_t c = g.index(i, j, k);
        if (s.mask.solid[c]) {
          s.p[c] = 0.0;
          continue;
        }
        if (in_outflow_layer(g, cfg, i, j)) {
          kind[c] = 2;
          s.p[c] = 0.0;
          continue;
        }
        double d = 0.0;
        if (ops.ax_r(i, j, k)) d += ix2;
        if (ops.ax_l(i, j, k)) d += ix2;
        if (ops.ay_r(i, j, k)) d += iy2;
        if (ops.ay_l(i, j, k)) d += iy2;
        if (ops.az_r(i, j, k)) d += iz2;
        if (ops.az_l(i, j, k)) d += iz2;
        if (d == 0.0) {
          s.p[c] = 0.0;
          continue; // fully enclosed; velocity is pinned anyway
        }
        kind[c] = 1;
        diag[c] = d;
        rhs[c] = div_of(i, j, k) / dt;
      }

  // Stop when the predicted post-correction divergence (dt * residual) meets
  // the lattice tolerance.
  const double res_target = cfg.projection_tol * cfg.u_ref / (hmin * dt);
  const double omega = cfg.poisson == PoissonMethod::sor ? 1.85 : 0.8;

  std::vector<double> p_old;
  auto neighbor_sum = [&](std::uint32_t i, std::uint32_t j, std::uint32_t k,
                          const std::vector<double>& p) {
    const std::size_t c = g.index(i, j, k);
    double acc = 0.0;
    if (ops.ax_r(i, j, k)) acc += ix2 * p[c + 1];
    if (ops.ax_l(i, j, k)) acc += ix2 * p[c - 1];
    if (ops.ay_r(i, j, k)) acc += iy2 * p[c + g.nx];
    if (ops.ay_l(i, j, k)) acc += iy2 * p[c - g.nx];
    if (ops.az_r(i, j, k)) acc += iz2 * p[c + std::size_t(g.nx) * g.ny];
    if (ops.az_l(i, j, k)) acc += iz2 * p[c - std::size_t(g.nx) * g.ny];
    return acc;
  };

  std::uint32_t iters = 0;
  double max_res = 0.0;
  for (; iters < cfg.max_projection_iters;) {
    if (cfg.poisson == PoissonMethod::jacobi) {
      p_old = s.p;
      for (std::uint32_t k = 0; k < g.nz; ++k)
        for (std::uint32_t j = 0; j < g.ny; ++j)
          for (std::uint32_t i = 0; i < g.nx; ++i) {
            const std::size_t c = g.index(i, j, k);
            if (kind[c] != 1) continue;
            const double gs = (neighbor_sum(i, j, k, p_old) - rhs[c]) / diag[c];
            s.p[c] = p_old[c] + omega * (gs - p_old[c]);
          }
    } else {
      for (int color = 0; color < 2; ++color)
        for (std::uint32_t k = 0; k < g.nz; ++k)
          for (std::uint32_t j = 0; j < g.ny; ++j)
            for (std::uint32_t i = 0; i < g.nx; ++i) {
              if (int((i + j + k) & 1u) != color) continue;
              const std::size_t c = g.index(i, j, k);
              if (kind[c] != 1) continue;
              const double gs = (neighbor_sum(i, j, k, s.p) - rhs[c]) / diag[c];
              s.p[c] += omega * (gs - s.p[c]);
            }
    }
    ++iters;

    if ((iters & 3u) == 0 || iters == cfg.max_projection_iters) {
      max_res = 0.0;
      for (std::uint32_t k = 0; k < g.nz; ++k)
        for (std::uint32_t j = 0; j < g.ny; ++j)
          for (std::uint32_t i = 0; i < g.nx; ++i) {
            const std::size_t c = g.index(i, j, k);
            if (kind[c] != 1) continue;
            const double res = rhs[c] - (neighbor_sum(i, j, k, s.p) - diag[c] * s.p[c]);
            max_res = std::max(max_res, std::abs(res));
          }
      if (max_res <= res_target) break;
    }
  }

  // Gradient correction on unpinned components.
  const std::size_t sx = 1, sy = g.nx;
  const std::size_t sz = std::size_t(g.nx) * g.ny;
  for (std::uint32_t k = 0; k < g.nz; ++k)
    for (std::uint32_t j = 0; j < g.ny; ++j)
      for (std::uint32_t i = 0; i < g.nx; ++i) {
        const std::size_t c = g.index(i, j, k);
        if (s.mask.solid[c]) continue;
        if (i > 0 && !pins.u[c]) {
          const double pm = s.mask.solid[c - sx] ? s.p[c] : s.p[c - sx];
          s.u[c] -= dt * (s.p[c] - pm) / g.dx;
        }
        if (j > 0 && !pins.v[c]) {
          const double pm = s.mask.solid[c - sy] ? s.p[c] : s.p[c - sy];
          s.v[c] -= dt * (s.p[c] - pm) / g.dy;
        }
        if (k > 0 && !pins.w[c]) {
          const double pm = s.mask.solid[c - sz] ? s.p[c] : s.p[c - sz];
          s.w[c] -= dt * (s.p[c] - pm) / g.dz;
        }
      }

  // Measured divergence over the enforced cells, lattice units.
  double max_div = 0.0;
  for (std::uint32_t k = 0; k < g.nz; ++k)
    for (std::uint32_t j = 0; j < g.ny; ++j)
      for (std::uint32_t i = 0; i < g.nx; ++i) {
        const std::size_t c = g.index(i, j, k);
        if (kind[c] != 1) continue;
        max_div = std::max(max_div, std::abs(div_of(i, j, k)));
      }
  s.last_divergence = max_div * hmin / cfg.u_ref;
  s.last_projection_iters = iters;
  s.last_projection_converged = s.last_divergence <= cfg.projection_tol;
  if (!s.last_projection_converged && iters >= cfg.max_projection_iters)
    fail(ErrorCode::numeric,
         "projection did not converge: divergence " + std::to_string(s.last_divergence) +
             " after " + std::to_string(iters) + " sweeps (tolerance " +
             std::to_string(cfg.projection_tol) + ")");
}

void step(SolverState& s, const SolverConfig& cfg) {
  cfg.validate();
  const Grid3& g = s.grid;
  const std::size_t n = g.cell_count();
  const double dt = cfg.dt(g);

  s.nu_t = smagorinsky(g, s.u, s.v, s.w, cfg.smagorinsky_cs);

  // Advection against the frozen begin-of-step field.
  const std::vector<double> u0 = s.u, v0 = s.v, w0 = s.w;
  const std::vector<double> th0 = s.theta;
  SolverState frozen_view = s; // mask + frozen velocity for backtrace
  frozen_view.u = u0;
  frozen_view.v = v0;
  frozen_view.w = w0;

  for (std::uint32_t k = 0; k < g.nz; ++k)
    for (std::uint32_t j = 0; j < g.ny; ++j)
      for (std::uint32_t i = 0; i < g.nx; ++i) {
        const std::size_t c = g.index(i, j, k);
        if (s.mask.solid[c]) continue;
        const auto dep = backtrace(frozen_view, cell_center(g, i, j, k), dt);
        s.u[c] = interpolate(g, u0, dep, cfg.interpolation);
        s.v[c] = interpolate(g, v0, dep, cfg.interpolation);
        s.w[c] = interpolate(g, w0, dep, cfg.interpolation);
        if (cfg.thermal) s.theta[c] = interpolate(g, th0, dep, cfg.interpolation);
      }
  check_finite_stage(s, "advection");

  // Explicit diffusion with effective viscosity 1/Re + nu_t on interior cells.
  {
    const double nu_mol = cfg.molecular_viscosity();
    const std::vector<double> ua = s.u, va = s.v, wa = s.w, tha = s.theta;
    const std::size_t sx = 1, sy = g.nx, sz = std::size_t(g.nx) * g.ny;
    for (std::uint32_t k = 1; k + 1 < g.nz; ++k)
      for (std::uint32_t j = 1; j + 1 < g.ny; ++j)
        for (std::uint32_t i = 1; i + 1 < g.nx; ++i) {
          const std::size_t c = g.index(i, j, k);
          if (s.mask.solid[c]) continue;
          const double nu = nu_mol + s.nu_t[c];
          auto lap = [&](const std::vector<double>& f) {
            return (f[c + sx] - 2.0 * f[c] + f[c - sx]) / (g.dx * g.dx) +
                   (f[c + sy] - 2.0 * f[c] + f[c - sy]) / (g.dy * g.dy) +
                   (f[c + sz] - 2.0 * f[c] + f[c - sz]) / (g.dz * g.dz);
          };
          s.u[c] += dt * nu * lap(ua);
          s.v[c] += dt * nu * lap(va);
          s.w[c] += dt * nu * lap(wa);
          if (cfg.thermal) {
            const double alpha_eff = cfg.u_ref * cfg.z_ref / (cfg.reynolds * cfg.prandtl) +
                                     s.nu_t[c] / cfg.prandtl_turbulent;
            s.theta[c] += dt * alpha_eff * lap(tha);
          }
        }
  }
  check_finite_stage(s, "diffusion");

  // Buoyancy forcing on the vertical component (dimensional scale u_ref^2/z_ref).
  if (cfg.thermal) {
    const double scale = cfg.grashof / (cfg.reynolds * cfg.reynolds) * cfg.u_ref * cfg.u_ref /
                         cfg.z_ref;
    for (std::size_t c = 0; c < n; ++c)
      if (!s.mask.solid[c]) s.w[c] -= dt * scale * s.theta[c];
  }

  apply_boundary_conditions(s, cfg);
  project(s, cfg);
  check_finite_stage(s, "projection");

  s.time += dt;
}

double kinetic_energy(const SolverState& s) {
  double e = 0.0;
  for (std::size_t c = 0; c < s.grid.cell_count(); ++c)
    e += 0.5 * (s.u[c] * s.u[c] + s.v[c] * s.v[c] + s.w[c] * s.w[c]);
  return e;
}

ScalarField magnitude_field(const SolverState& s) {
  ScalarField f(s.grid);
  for (std::size_t c = 0; c < s.grid.cell_count(); ++c)
    f.values[c] = s.mask.solid[c]
                      ? 0.0
                      : std::sqrt(s.u[c] * s.u[c] + s.v[c] * s.v[c] + s.w[c] * s.w[c]);
  return f;
}

RunResult run_simulation(const SceneSpec& scene, const SolverConfig& cfg, std::uint32_t n_steps,
                         std::uint32_t output_stride) {
  cfg.validate();
  if (n_steps < 1) fail(ErrorCode::invalid_argument, "run_simulation: n_steps must be >= 1");
  if (output_stride < 1)
    fail(ErrorCode::invalid_argument, "run_simulation: output_stride must be >= 1");

  RunResult out;
  out.mask = rasterize_scene(scene);
  SolverState state = SolverState::initial(out.mask, cfg);
  out.dt = cfg.dt(scene.grid);
  out.sequence.dt = out.dt * output_stride;

  for (std::uint32_t it = 1; it <= n_steps; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      step(state, cfg);
    } catch (const Error& e) {
      fail(e.code(), "step " + std::to_string(it) + ": " + e.what());
    }
    const auto t1 = std::chrono::steady_clock::now();
    out.steps.push_back({state.last_projection_iters, state.last_divergence,
                         std::chrono::duration<double, std::milli>(t1 - t0).count()});
    if (it % output_stride == 0) out.sequence.fields.push_back(magnitude_field(state));
  }
  out.final_state = std::move(state);
  return out;
}

} // namespace ufno
