#include "ufno/spline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ufno {

SplineCoeffs fit_spline(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  if (n < 2) fail(ErrorCode::invalid_argument, "fit_spline: need at least 2 knots");
  if (ys.size() != n) fail(ErrorCode::invalid_argument, "fit_spline: xs/ys length mismatch");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(xs[i] < xs[i + 1]))
      fail(ErrorCode::invalid_argument, "fit_spline: knots must be strictly increasing");

  SplineCoeffs s;
  s.knots_x = xs;
  const std::size_t segs = n - 1;
  s.a.resize(segs);
  s.b.resize(segs);
  s.c.resize(segs);
  s.d.resize(segs);

  if (n == 2) {
    s.degraded_to_linear = true;
    s.a[0] = ys[0];
    s.b[0] = (ys[1] - ys[0]) / (xs[1] - xs[0]);
    s.c[0] = 0.0;
    s.d[0] = 0.0;
    return s;
  }

  // Second derivatives m[i] at the knots; natural ends m[0] = m[n-1] = 0.
  // Interior rows: h[i-1]/6 m[i-1] + (h[i-1]+h[i])/3 m[i] + h[i]/6 m[i+1]
  //                = (y[i+1]-y[i])/h[i] - (y[i]-y[i-1])/h[i-1].
  std::vector<double> h(segs);
  for (std::size_t i = 0; i < segs; ++i) h[i] = xs[i + 1] - xs[i];

  const std::size_t m_count = n - 2;
  std::vector<double> diag(m_count), upper(m_count), rhs(m_count);
  for (std::size_t r = 0; r < m_count; ++r) {
    const std::size_t i = r + 1;
    diag[r] = (h[i - 1] + h[i]) / 3.0;
    upper[r] = h[i] / 6.0;
    rhs[r] = (ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1];
  }
  // Thomas forward sweep (lower diagonal equals the previous row's upper).
  for (std::size_t r = 1; r < m_count; ++r) {
    const double w = (h[r] / 6.0) / diag[r - 1];
    diag[r] -= w * upper[r - 1];
    rhs[r] -= w * rhs[r - 1];
  }
  std::vector<double> m(n, 0.0);
  if (m_count > 0) {
    m[m_count] = rhs[m_count - 1] / diag[m_count - 1];
    for (std::size_t r = m_count - 1; r > 0; --r)
      m[r] = (rhs[r - 1] - upper[r - 1] * m[r + 1]) / diag[r - 1];
  }

  for (std::size_t i = 0; i < segs; ++i) {
    s.a[i] = ys[i];
    s.b[i] = (ys[i + 1] - ys[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
    s.c[i] = m[i] / 2.0;
    s.d[i] = (m[i + 1] - m[i]) / (6.0 * h[i]);
  }
  return s;
}

double eval_spline(const SplineCoeffs& s, double x) {
  const auto& xs = s.knots_x;
  const double span = xs.back() - xs.front();
  const double slack = 1e-9 * span;
  if (x < xs.front() - slack || x > xs.back() + slack)
    fail(ErrorCode::invalid_argument, "eval_spline: x=" + std::to_string(x) +
                                          " outside knot range [" + std::to_string(xs.front()) +
                                          ", " + std::to_string(xs.back()) + "]");
  x = std::clamp(x, xs.front(), xs.back());
  // Owning segment: last knot <= x (the final knot belongs to the last segment).
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t i = std::size_t(it - xs.begin());
  i = (i == 0) ? 0 : i - 1;
  if (i >= s.segment_count()) i = s.segment_count() - 1;
  const double t = x - xs[i];
  return s.a[i] + t * (s.b[i] + t * (s.c[i] + t * s.d[i]));
}

namespace {

// Resamples all lines along one axis. `src_n`/`dst_n` are the axis extents,
// the other two extents are given by `outer` and `inner` (inner is the
// faster-varying one in storage).
void resample_axis(const std::vector<double>& src, std::vector<double>& dst,
                   std::size_t src_n, std::size_t dst_n,
                   std::size_t stride, std::size_t outer, std::size_t outer_stride,
                   std::size_t inner, std::size_t inner_stride,
                   const std::vector<double>& src_x, const std::vector<double>& dst_x,
                   std::size_t dst_stride, std::size_t dst_outer_stride,
                   std::size_t dst_inner_stride) {
  std::vector<double> line(src_n), out_line(dst_n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      for (std::size_t p = 0; p < src_n; ++p)
        line[p] = src[o * outer_stride + in * inner_stride + p * stride];
      SplineCoeffs s = fit_spline(src_x, line);
      for (std::size_t p = 0; p < dst_n; ++p) out_line[p] = eval_spline(s, dst_x[p]);
      for (std::size_t p = 0; p < dst_n; ++p)
        dst[o * dst_outer_stride + in * dst_inner_stride + p * dst_stride] = out_line[p];
    }
  }
}

std::vector<double> centers(std::size_t n, double h, double o) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = o + (double(i) + 0.5) * h;
  return x;
}

} // namespace

ScalarField downsample(const ScalarField& field, const Grid3& target) {
  const Grid3& src = field.grid;
  src.validate();
  target.validate();
  if (target.nx > src.nx || target.ny > src.ny || target.nz > src.nz)
    fail(ErrorCode::invalid_argument, "downsample: target dims exceed source (upsampling unsupported)");
  const auto se = src.extent();
  const auto te = target.extent();
  for (int ax = 0; ax < 3; ++ax) {
    if (std::abs(se[ax] - te[ax]) > 1e-9 * se[ax] || std::abs(src.origin[ax] - target.origin[ax]) > 1e-9 * se[ax])
      fail(ErrorCode::invalid_argument, "downsample: grids must cover the same physical domain");
  }

  // Pass through axes whose extent count is unchanged.
  std::vector<double> cur = field.values;
  std::size_t cx = src.nx, cy = src.ny, cz = src.nz;

  if (target.nx != src.nx) {
    std::vector<double> next(target.nx * cy * cz);
    resample_axis(cur, next, cx, target.nx,
                  /*stride=*/1, /*outer=*/cz, /*outer_stride=*/cx * cy,
                  /*inner=*/cy, /*inner_stride=*/cx,
                  centers(cx, src.dx, src.origin[0]), centers(target.nx, target.dx, target.origin[0]),
                  /*dst_stride=*/1, /*dst_outer_stride=*/target.nx * cy, /*dst_inner_stride=*/target.nx);
    cur = std::move(next);
    cx = target.nx;
  }
  if (target.ny != src.ny) {
    std::vector<double> next(cx * target.ny * cz);
    resample_axis(cur, next, cy, target.ny,
                  /*stride=*/cx, /*outer=*/cz, /*outer_stride=*/cx * cy,
                  /*inner=*/cx, /*inner_stride=*/1,
                  centers(cy, src.dy, src.origin[1]), centers(target.ny, target.dy, target.origin[1]),
                  /*dst_stride=*/cx, /*dst_outer_stride=*/cx * target.ny, /*dst_inner_stride=*/1);
    cur = std::move(next);
    cy = target.ny;
  }
  if (target.nz != src.nz) {
    std::vector<double> next(cx * cy * target.nz);
    resample_axis(cur, next, cz, target.nz,
                  /*stride=*/cx * cy, /*outer=*/cy, /*outer_stride=*/cx,
                  /*inner=*/cx, /*inner_stride=*/1,
                  centers(cz, src.dz, src.origin[2]), centers(target.nz, target.dz, target.origin[2]),
                  /*dst_stride=*/cx * cy, /*dst_outer_stride=*/cx, /*dst_inner_stride=*/1);
    cur = std::move(next);
    cz = target.nz;
  }

  ScalarField out(target);
  out.values = std::move(cur);
  return out;
}

ScalarField downsample(const ScalarField& field, const Grid3& target,
                       const BuildingMask& target_mask) {
  if (!(target_mask.grid == target))
    fail(ErrorCode::invalid_argument, "downsample: mask grid does not match target grid");
  return apply_mask(downsample(field, target), target_mask);
}

BuildingMask resample_mask(const BuildingMask& mask, const Grid3& target) {
  const Grid3& src = mask.grid;
  BuildingMask out(target);
  for (std::uint32_t k = 0; k < target.nz; ++k)
    for (std::uint32_t j = 0; j < target.ny; ++j)
      for (std::uint32_t i = 0; i < target.nx; ++i) {
        auto cell_of = [](double pos, double o, double h, std::uint32_t n) {
          double r = std::floor((pos - o) / h);
          return std::uint32_t(std::clamp(r, 0.0, double(n - 1)));
        };
        const std::uint32_t si = cell_of(target.xc(i), src.origin[0], src.dx, src.nx);
        const std::uint32_t sj = cell_of(target.yc(j), src.origin[1], src.dy, src.ny);
        const std::uint32_t sk = cell_of(target.zc(k), src.origin[2], src.dz, src.nz);
        out.solid[target.index(i, j, k)] = mask.solid[src.index(si, sj, sk)];
      }
  return out;
}

} // namespace ufno
