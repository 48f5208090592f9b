#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace hbs;

namespace {
CircleMapSamples sampled_map(const std::function<double(double)>& g, int M) {
  CircleMapSamples s;
  for (int m = 0; m < M; ++m) s.values.push_back(g(kTwoPi * m / M));
  return s;
}

// e^{i(t + eps sin t)} = sum_n J_n(eps) e^{i(n+1)t}; harmonic extension term by term.
Complex bessel_extension(double eps, Complex z) {
  Complex s{};
  for (int n = -40; n <= 40; ++n) {
    const double j = n >= 0 ? std::cyl_bessel_j(n, eps) : ((-n) % 2 ? -1.0 : 1.0) * std::cyl_bessel_j(-n, eps);
    const int k = n + 1;
    s += j * (k >= 0 ? std::pow(z, k) : std::pow(std::conj(z), -k));
  }
  return s;
}

// (h_z, h_zbar) of the same series.
std::pair<Complex, Complex> bessel_derivatives(double eps, Complex z) {
  Complex hz{}, hzb{};
  for (int n = -40; n <= 40; ++n) {
    const double j = n >= 0 ? std::cyl_bessel_j(n, eps) : ((-n) % 2 ? -1.0 : 1.0) * std::cyl_bessel_j(-n, eps);
    const int k = n + 1;
    if (k > 0) hz += j * double(k) * std::pow(z, k - 1);
    if (k < 0) hzb += j * double(-k) * std::pow(std::conj(z), -k - 1);
  }
  return {hz, hzb};
}
}  // namespace

TEST(CircleMap, ValidationAndIdentity) {
  EXPECT_NO_THROW(CircleMapSamples::identity(16).validate());
  CircleMapSamples bad{{0.0, 1.0, 0.5, 2.0}};
  EXPECT_THROW(bad.validate(), InvalidArgument);
  CircleMapSamples wrap{{0.0, 2.0, 4.0, 6.4}};  // exceeds one turn
  EXPECT_THROW(wrap.validate(), InvalidArgument);
}

TEST(Interpolant, MonotoneAndExactAtKnots) {
  std::vector<double> x{0.0, 0.5, 2.0, 4.0, 5.0}, y{0.3, 0.4, 3.0, 3.1, 5.5};
  MonotoneCircleInterpolant f(x, y);
  for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(f(x[k]), y[k], 1e-12);
  EXPECT_NEAR(f(x[1] + kTwoPi), y[1] + kTwoPi, 1e-12);
  double prev = f(-1.0);
  for (int s = 1; s <= 2000; ++s) {
    const double v = f(-1.0 + s * 0.005);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Uniformize, IdentityWeldingGivesShiftedIdentity) {
  WeldingMap w;
  for (int k = 0; k < 50; ++k) {
    const double t = 0.2 + kTwoPi * k / 50;
    w.exterior_angles.push_back(t);
    w.interior_angles.push_back(t + 0.7);
  }
  const auto g = uniformize_welding(w, 64);
  for (std::size_t m = 0; m < g.size(); ++m) EXPECT_NEAR(std::remainder(g.values[m] - g.angle(m) - 0.7, kTwoPi), 0.0, 1e-12);
}

TEST(Poisson, ReproducesIdentityExtension) {
  const auto g = CircleMapSamples::identity(256);
  for (Complex z : {Complex(0, 0), Complex(0.3, -0.4), Complex(-0.85, 0.1)})
    EXPECT_NEAR(std::abs(poisson_extend(g, z) - z), 0.0, 1e-12);
  EXPECT_THROW(poisson_extend(g, Complex(1.0, 0.0)), InvalidArgument);
}

TEST(Poisson, MatchesBesselSeries) {
  const double eps = 0.6;
  const auto g = sampled_map([&](double t) { return t + eps * std::sin(t); }, 1024);
  const HarmonicExtension h(g);
  for (Complex z : {Complex(0, 0), Complex(0.5, 0.2), Complex(-0.3, -0.8), Complex(0.0, 0.95)}) {
    const Complex expected = bessel_extension(eps, z);
    EXPECT_NEAR(std::abs(poisson_extend(g, z) - expected), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(h(z) - expected), 0.0, 1e-12);
  }
}

TEST(Poisson, AccurateNearTheRim) {
  const double eps = 0.3;
  const auto g = sampled_map([&](double t) { return t + eps * std::sin(t); }, 1024);
  const Complex z = std::polar(0.999, 1.1);
  EXPECT_NEAR(std::abs(poisson_extend(g, z) - bessel_extension(eps, z)), 0.0, 1e-10);
  // the plain trapezoid sum aliases at this radius
  EXPECT_GT(std::abs(detail::poisson_trapezoid(g, z) - bessel_extension(eps, z)), 1e-6);
  EXPECT_NEAR(std::abs(poisson_extend(g, std::polar(0.6, 1.1)) - bessel_extension(eps, std::polar(0.6, 1.1))), 0.0, 1e-12);
}

TEST(Extension, RotatedIsPrecomposition) {
  const auto g = sampled_map([](double t) { return t + 0.3 * std::sin(2 * t + 1.0); }, 512);
  const HarmonicExtension h(g);
  const double th = 0.83;
  const auto hr = h.rotated(th);
  for (Complex z : {Complex(0.2, 0.1), Complex(-0.6, 0.5)}) EXPECT_NEAR(std::abs(hr(z) - h(std::polar(1.0, th) * z)), 0.0, 1e-12);
}

TEST(Beltrami, ExactForAffineAndQuadraticMaps) {
  const auto g = GridGeometry::hbs();
  const Complex k(0.2, -0.3);
  const auto mu = beltrami_from_function(g, [&](Complex z) { return z + k * std::conj(z); });
  for (std::size_t i = 0; i < mu.values().size(); ++i)
    if (mu.mask().inside[i]) EXPECT_NEAR(std::abs(mu.values()[i] - k), 0.0, 1e-9);
  // h = z + a zbar^2 has mu = 2 a zbar; central and one-sided second-order stencils are exact
  const Complex a(0.1, 0.15);
  const auto mu2 = beltrami_from_function(g, [&](Complex z) { return z + a * std::conj(z) * std::conj(z); });
  double worst = 0.0;
  for (int i = 0; i < g.height; ++i)
    for (int j = 0; j < g.width; ++j)
      if (mu2.inside(i, j)) worst = std::max(worst, std::abs(mu2(i, j) - 2.0 * a * std::conj(pixel_to_complex(g, i, j))));
  EXPECT_LT(worst, 1e-9);
}

TEST(Beltrami, ClampsAndCounts) {
  std::size_t clamped = 0;
  const auto mu = beltrami_from_function(GridGeometry::hbs(), [](Complex z) { return z + 1.5 * std::conj(z); }, &clamped);
  EXPECT_EQ(clamped, mu.mask().inside_count);
  EXPECT_NEAR(mu.sup_norm(), kMuClamp, 1e-12);
  EXPECT_THROW(beltrami_from_function(GridGeometry::hbs(), [](Complex z) { return std::conj(z); }), ConformalError);
}

TEST(Beltrami, GridFieldMatchesAnalyticSeries) {
  const double eps = 0.5;
  const auto g = sampled_map([&](double t) { return t + eps * std::sin(t); }, 1024);
  const auto mu = beltrami_on_grid(g, GridGeometry::hbs());
  const auto geo = GridGeometry::hbs();
  double worst_inner = 0.0;
  for (int i = 0; i < geo.height; ++i)
    for (int j = 0; j < geo.width; ++j) {
      const Complex z = pixel_to_complex(geo, i, j);
      if (!mu.inside(i, j) || std::abs(z) > 0.9) continue;
      const auto [hz, hzb] = bessel_derivatives(eps, z);
      worst_inner = std::max(worst_inner, std::abs(mu(i, j) - hzb / hz));
    }
  EXPECT_LT(worst_inner, 1e-3);  // O(h^2) differences, h = 0.02
}

TEST(Beltrami, IdentityMapGivesZeroField) {
  const auto mu = beltrami_on_grid(CircleMapSamples::identity(1024), GridGeometry::hbs());
  EXPECT_LT(mu.sup_norm(), 1e-12);
}

TEST(Dilation, ClosedForm) {
  EXPECT_DOUBLE_EQ(dilation(0.0), 1.0);
  EXPECT_DOUBLE_EQ(dilation(Complex(0.0, 0.5)), 3.0);
  EXPECT_THROW(dilation(1.0), InvalidArgument);
}

TEST(Rotation, FieldRotationLaw) {
  auto B = [](Complex z) { return 0.3 * z + 0.2 * std::conj(z) * std::conj(z) + Complex(0.05, 0.1); };
  const double th = 0.6;
  const auto rotated = rotate_field(test::field_of(B), th);
  const auto expected = test::field_of([&](Complex z) { return B(std::polar(1.0, th) * z) * std::polar(1.0, -2 * th); });
  const auto geo = GridGeometry::hbs();
  double worst = 0.0;
  for (int i = 0; i < geo.height; ++i)
    for (int j = 0; j < geo.width; ++j)
      if (std::abs(pixel_to_complex(geo, i, j)) < 0.95) worst = std::max(worst, std::abs(rotated(i, j) - expected(i, j)));
  EXPECT_LT(worst, 2e-3);  // bilinear interpolation of a quadratic
  EXPECT_EQ(rotate_field(rotated, 0.0), rotated);
}

TEST(Rotation, NormalizationConditionsAndIdempotence) {
  const auto f = test::field_of([](Complex z) { return 0.2 * z * z + Complex(0.1, 0.3) + 0.1 * std::conj(z); });
  const auto n = normalize_rotation(f);
  EXPECT_FALSE(n.degenerate);
  EXPECT_LT(std::abs(std::arg(n.field.integral())), 1e-9);
  const double a3 = std::arg(n.field.integral_over_z());
  EXPECT_GE(a3, 0.0);
  EXPECT_LT(a3, kPi);
  const auto twice = normalize_rotation(n.field);
  EXPECT_LT(hbs_distance(twice.field, n.field), 1e-12);
  EXPECT_TRUE(normalize_rotation(ComplexField()).degenerate);
}

TEST(Distance, MeanSquaredOverMask) {
  const auto a = test::field_of([](Complex) { return Complex(0.3, 0.0); });
  const auto b = test::field_of([](Complex) { return Complex(0.0, 0.4); });
  EXPECT_NEAR(hbs_distance(a, b), 0.25, 1e-15);
  EXPECT_EQ(hbs_distance(a, a), 0.0);
  EXPECT_EQ(hbs_distance(a, b), hbs_distance(b, a));
  EXPECT_THROW(hbs_distance(a, ComplexField(GridGeometry(64, 64, 25.0))), InvalidArgument);
}

TEST(Align, RecoversKnownRotation) {
  const auto f = test::field_of([](Complex z) { return 0.25 * z * z + 0.2 * std::conj(z) + Complex(0.05, 0.02); });
  const double th = -1.1;
  const auto g = rotate_field(f, th);
  const auto al = align_rotation(g, f);
  EXPECT_NEAR(detail::wrap_angle(al.theta + th), 0.0, 5e-3);
  EXPECT_LE(al.distance, hbs_distance(g, f));
  EXPECT_LT(al.distance, 1e-3);  // zero padding outside the disk dominates the rim pixels
}

TEST(ComputeHbs, CenteredDiskIsNearlyZero) {
  const auto r = compute_hbs(test::disk_image(50));
  EXPECT_LT(r.hbs.mean_abs(), 1e-2);
  EXPECT_LT(r.hbs.sup_norm(), 5e-2);
  EXPECT_LT(r.residuals.interior_integral, 1e-6);
  std::vector<std::string> stages;
  for (const auto& t : r.timing) stages.push_back(t.stage);
  EXPECT_EQ(stages, (std::vector<std::string>{"trace", "resample", "zipper_interior", "zipper_exterior", "welding", "beltrami"}));
}

TEST(ComputeHbs, EllipseSatisfiesNormalization) {
  const auto r = compute_hbs(test::ellipse_image(1.2, 0.6, 0.3));
  EXPECT_LT(r.hbs.sup_norm(), 1.0);
  EXPECT_FALSE(r.degenerate_rotation);
  EXPECT_LT(std::abs(r.residuals.arg_integral), 1e-3);
  EXPECT_GE(r.residuals.arg_integral_over_z, 0.0);
  EXPECT_LT(r.residuals.arg_integral_over_z, kPi);
  EXPECT_EQ(r.welding.sample_count(), 400u);
  EXPECT_GT(r.hbs.mean_abs(), 0.05);
}

TEST(ComputeHbs, RejectsInvalidShapes) {
  auto ring = test::paint([](Complex z) { return std::abs(z) < 1.0 && std::abs(z) > 0.5; });
  EXPECT_THROW(compute_hbs(ring), ShapeError);
  EXPECT_THROW(compute_hbs(GrayImage()), ShapeError);
  HbsConfig c;
  c.boundary_points = 4;
  EXPECT_THROW(compute_hbs(test::disk_image(40), c), InvalidArgument);
}

TEST(ComputeHbs, PureFunctionOfInput) {
  const auto img = test::ellipse_image(1.0, 0.5, 1.0, {0.1, 0.2});
  EXPECT_EQ(compute_hbs(img).hbs, compute_hbs(img).hbs);
}
