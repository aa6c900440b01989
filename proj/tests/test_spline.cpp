#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ufno/rng.hpp"
#include "ufno/spline.hpp"

using namespace ufno;

namespace {

// Dense-matrix solve of the full natural-spline condition set, in the same
// shifted per-segment basis as the implementation. Unknowns per segment i:
// [a_i, b_i, c_i, d_i]. Independent oracle for fit_spline.
struct DenseSpline {
  std::vector<double> a, b, c, d;
};

DenseSpline dense_natural_spline(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t segs = xs.size() - 1;
  const std::size_t n = 4 * segs;
  std::vector<double> A(n * n, 0.0), rhs(n, 0.0);
  std::size_t row = 0;
  auto at = [&](std::size_t r, std::size_t col) -> double& { return A[r * n + col]; };
  auto col_of = [&](std::size_t seg, int coeff) { return 4 * seg + std::size_t(coeff); };

  for (std::size_t i = 0; i < segs; ++i) {
    const double h = xs[i + 1] - xs[i];
    // Interpolation at both ends of the segment.
    at(row, col_of(i, 0)) = 1.0;
    rhs[row++] = ys[i];
    at(row, col_of(i, 0)) = 1.0;
    at(row, col_of(i, 1)) = h;
    at(row, col_of(i, 2)) = h * h;
    at(row, col_of(i, 3)) = h * h * h;
    rhs[row++] = ys[i + 1];
  }
  for (std::size_t i = 0; i + 1 < segs; ++i) {
    const double h = xs[i + 1] - xs[i];
    // C1 and C2 continuity at the interior knot.
    at(row, col_of(i, 1)) = 1.0;
    at(row, col_of(i, 2)) = 2.0 * h;
    at(row, col_of(i, 3)) = 3.0 * h * h;
    at(row, col_of(i + 1, 1)) = -1.0;
    ++row;
    at(row, col_of(i, 2)) = 2.0;
    at(row, col_of(i, 3)) = 6.0 * h;
    at(row, col_of(i + 1, 2)) = -2.0;
    ++row;
  }
  // Natural ends.
  at(row, col_of(0, 2)) = 2.0;
  ++row;
  {
    const double h = xs[segs] - xs[segs - 1];
    at(row, col_of(segs - 1, 2)) = 2.0;
    at(row, col_of(segs - 1, 3)) = 6.0 * h;
    ++row;
  }
  REQUIRE(row == n);

  // Gaussian elimination with partial pivoting.
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(at(r, col)) > std::abs(at(piv, col))) piv = r;
    if (piv != col) {
      for (std::size_t cc = 0; cc < n; ++cc) std::swap(at(col, cc), at(piv, cc));
      std::swap(rhs[col], rhs[piv]);
    }
    REQUIRE(std::abs(at(col, col)) > 1e-14);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = at(r, col) / at(col, col);
      if (f == 0.0) continue;
      for (std::size_t cc = col; cc < n; ++cc) at(r, cc) -= f * at(col, cc);
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> sol(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = rhs[r];
    for (std::size_t cc = r + 1; cc < n; ++cc) s -= at(r, cc) * sol[cc];
    sol[r] = s / at(r, r);
  }
  DenseSpline out;
  for (std::size_t i = 0; i < segs; ++i) {
    out.a.push_back(sol[4 * i]);
    out.b.push_back(sol[4 * i + 1]);
    out.c.push_back(sol[4 * i + 2]);
    out.d.push_back(sol[4 * i + 3]);
  }
  return out;
}

double second_derivative(const SplineCoeffs& s, std::size_t seg, double t) {
  return 2.0 * s.c[seg] + 6.0 * s.d[seg] * t;
}

Grid3 grid_of(std::uint32_t nx, std::uint32_t ny, std::uint32_t nz, double lx, double ly, double lz) {
  Grid3 g;
  g.nx = nx;
  g.ny = ny;
  g.nz = nz;
  g.dx = lx / nx;
  g.dy = ly / ny;
  g.dz = lz / nz;
  return g;
}

} // namespace

TEST_CASE("constant data gives constant segments") {
  std::vector<double> xs{0, 1, 2, 3, 4}, ys(5, 3.25);
  auto s = fit_spline(xs, ys);
  for (std::size_t i = 0; i < s.segment_count(); ++i) {
    CHECK(s.a[i] == 3.25);
    CHECK(std::abs(s.b[i]) < 1e-14);
    CHECK(std::abs(s.c[i]) < 1e-14);
    CHECK(std::abs(s.d[i]) < 1e-14);
  }
  CHECK(eval_spline(s, 1.5) == doctest::Approx(3.25).epsilon(1e-15));
}

TEST_CASE("linear data reproduced with vanishing curvature") {
  std::vector<double> xs{0.0, 0.7, 1.3, 2.9, 4.0}, ys;
  for (double x : xs) ys.push_back(2.0 * x - 1.0);
  auto s = fit_spline(xs, ys);
  for (std::size_t i = 0; i < s.segment_count(); ++i) {
    CHECK(std::abs(s.c[i]) < 1e-12);
    CHECK(std::abs(s.d[i]) < 1e-12);
  }
  for (double x : {0.11, 0.95, 2.0, 3.77})
    CHECK(eval_spline(s, x) == doctest::Approx(2.0 * x - 1.0).epsilon(1e-13));
}

TEST_CASE("coefficients match a dense solve of the full condition system") {
  std::vector<double> xs{0, 1, 2, 3}, ys{0, 1, 0, 1};
  auto s = fit_spline(xs, ys);
  auto o = dense_natural_spline(xs, ys);
  for (std::size_t i = 0; i < s.segment_count(); ++i) {
    CHECK(std::abs(s.a[i] - o.a[i]) < 1e-9);
    CHECK(std::abs(s.b[i] - o.b[i]) < 1e-9);
    CHECK(std::abs(s.c[i] - o.c[i]) < 1e-9);
    CHECK(std::abs(s.d[i] - o.d[i]) < 1e-9);
  }
  // Midpoint of segment 1 against the oracle cubic.
  const double t = 0.5;
  const double oracle = o.a[1] + o.b[1] * t + o.c[1] * t * t + o.d[1] * t * t * t;
  CHECK(eval_spline(s, 1.5) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("random data: knot interpolation, C2 continuity, natural ends") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4 + rng.next_below(12);
    std::vector<double> xs(n), ys(n);
    double x = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x += 0.2 + rng.next_unit();
      xs[i] = x;
      ys[i] = rng.next_uniform(-5.0, 5.0);
    }
    auto s = fit_spline(xs, ys);
    // Knots evaluate at t=0 of their owning segment and are exact; the final
    // knot goes through the last cubic at t=h and lands within rounding.
    for (std::size_t i = 0; i + 1 < n; ++i) CHECK(eval_spline(s, xs[i]) == ys[i]);
    CHECK(eval_spline(s, xs[n - 1]) == doctest::Approx(ys[n - 1]).epsilon(1e-12));
    for (std::size_t i = 0; i + 1 < s.segment_count(); ++i) {
      const double h = xs[i + 1] - xs[i];
      const double left_v = s.a[i] + s.b[i] * h + s.c[i] * h * h + s.d[i] * h * h * h;
      CHECK(left_v == doctest::Approx(s.a[i + 1]).epsilon(1e-9));
      const double left_d = s.b[i] + 2 * s.c[i] * h + 3 * s.d[i] * h * h;
      CHECK(left_d == doctest::Approx(s.b[i + 1]).epsilon(1e-9));
      CHECK(second_derivative(s, i, h) == doctest::Approx(2.0 * s.c[i + 1]).epsilon(1e-9));
    }
    CHECK(std::abs(second_derivative(s, 0, 0.0)) < 1e-9);
    const std::size_t last = s.segment_count() - 1;
    CHECK(std::abs(second_derivative(s, last, xs[n - 1] - xs[n - 2])) < 1e-9);
  }
}

TEST_CASE("two points degrade to a flagged linear fit") {
  auto s = fit_spline({0.0, 2.0}, {1.0, 5.0});
  CHECK(s.degraded_to_linear);
  CHECK(eval_spline(s, 1.0) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("fit_spline input validation") {
  CHECK_THROWS_AS(fit_spline({0.0}, {1.0}), Error);
  CHECK_THROWS_AS(fit_spline({0.0, 0.0, 1.0}, {1.0, 2.0, 3.0}), Error);
  auto s = fit_spline({0.0, 1.0, 2.0}, {0.0, 1.0, 4.0});
  CHECK_THROWS_AS(eval_spline(s, -0.5), Error);
  CHECK_THROWS_AS(eval_spline(s, 2.5), Error);
}

TEST_CASE("downsample with equal dims is the identity") {
  auto g = grid_of(6, 5, 4, 6.0, 5.0, 4.0);
  ScalarField f(g);
  Rng rng(3);
  for (double& v : f.values) v = rng.next_uniform(0.0, 2.0);
  auto out = downsample(f, g);
  for (std::size_t c = 0; c < f.values.size(); ++c)
    CHECK(out.values[c] == doctest::Approx(f.values[c]).epsilon(1e-12));
}

TEST_CASE("downsample reproduces trilinear fields") {
  auto src = grid_of(12, 10, 8, 2.0, 2.0, 2.0);
  ScalarField f(src);
  for (std::uint32_t k = 0; k < src.nz; ++k)
    for (std::uint32_t j = 0; j < src.ny; ++j)
      for (std::uint32_t i = 0; i < src.nx; ++i)
        f.at(i, j, k) = 1.0 + src.xc(i) + 2.0 * src.yc(j) + 3.0 * src.zc(k);
  auto dst = grid_of(6, 5, 8, 2.0, 2.0, 2.0);
  auto out = downsample(f, dst);
  for (std::uint32_t k = 0; k < dst.nz; ++k)
    for (std::uint32_t j = 0; j < dst.ny; ++j)
      for (std::uint32_t i = 0; i < dst.nx; ++i)
        CHECK(out.at(i, j, k) ==
              doctest::Approx(1.0 + dst.xc(i) + 2.0 * dst.yc(j) + 3.0 * dst.zc(k)).epsilon(1e-10));
}

TEST_CASE("downsample error decays at higher source resolution") {
  // sin over a full period has zero curvature at the domain ends, so the
  // natural-boundary fit converges at the interior rate.
  const double L = 1.0;
  auto target = grid_of(8, 4, 4, L, 1.0, 1.0);
  auto run = [&](std::uint32_t n) {
    auto src = grid_of(n, 4, 4, L, 1.0, 1.0);
    ScalarField f(src);
    for (std::uint32_t k = 0; k < src.nz; ++k)
      for (std::uint32_t j = 0; j < src.ny; ++j)
        for (std::uint32_t i = 0; i < src.nx; ++i)
          f.at(i, j, k) = std::sin(2.0 * std::numbers::pi * src.xc(i) / L);
    auto out = downsample(f, target);
    double err = 0.0;
    for (std::uint32_t i = 0; i < target.nx; ++i)
      err = std::max(err, std::abs(out.at(i, 0, 0) -
                                   std::sin(2.0 * std::numbers::pi * target.xc(i) / L)));
    return err;
  };
  const double coarse = run(32);
  const double fine = run(64);
  CHECK(fine > 0.0);
  CHECK(coarse / fine >= 8.0);
}

TEST_CASE("downsample guards range against blowup") {
  Rng rng(8);
  auto src = grid_of(16, 12, 10, 4.0, 3.0, 2.0);
  ScalarField f(src);
  double lo = 1e300, hi = -1e300;
  for (double& v : f.values) {
    v = rng.next_uniform(0.0, 6.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi - lo;
  auto out = downsample(f, grid_of(7, 5, 4, 4.0, 3.0, 2.0));
  for (double v : out.values) {
    CHECK(v >= lo - 0.5 * range);
    CHECK(v <= hi + 0.5 * range);
  }
}

TEST_CASE("downsample rejects upsampling and mismatched domains") {
  auto src = grid_of(8, 8, 8, 1.0, 1.0, 1.0);
  ScalarField f(src);
  CHECK_THROWS_AS(downsample(f, grid_of(16, 8, 8, 1.0, 1.0, 1.0)), Error);
  CHECK_THROWS_AS(downsample(f, grid_of(4, 4, 4, 2.0, 1.0, 1.0)), Error);
}

TEST_CASE("downsample re-zeroes masked cells") {
  auto src = grid_of(8, 8, 8, 1.0, 1.0, 1.0);
  ScalarField f(src, 2.0);
  auto dst = grid_of(4, 4, 4, 1.0, 1.0, 1.0);
  BuildingMask m(dst);
  m.solid[5] = 1;
  auto out = downsample(f, dst, m);
  CHECK(out.values[5] == 0.0);
  CHECK(out.values[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("resample_mask maps by containing cell") {
  auto src = grid_of(4, 4, 4, 4.0, 4.0, 4.0);
  BuildingMask m(src);
  m.solid[src.index(1, 0, 0)] = 1;
  auto dst = grid_of(2, 2, 2, 4.0, 4.0, 4.0);
  auto r = resample_mask(m, dst);
  // Target cell 0 center (1,1,1) lies in source cell (1,1,1): fluid.
  CHECK(r.solid[dst.index(0, 0, 0)] == 0);
  auto fine = resample_mask(m, src);
  CHECK(fine.solid == m.solid);
}
