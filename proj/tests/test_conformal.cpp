#include <gtest/gtest.h>

#include "support.hpp"

using namespace hbs;

namespace {
// Boundary of a domain parametrized by t -> curve(t), sampled clockwise.
template <class Curve>
BoundaryPolygon sampled(Curve&& curve, int n) {
  BoundaryPolygon p;
  for (int k = 0; k < n; ++k) p.vertices.push_back(curve(-kTwoPi * k / n));
  return p;
}

double pseudo_hyperbolic(Complex a, Complex b) { return std::abs((a - b) / (1.0 - std::conj(a) * b)); }
}  // namespace

TEST(SlitMap, MapsSlitEndpointToZeroAndRealsToReals) {
  const zipper::SlitMap s(Complex(0.3, 0.8));
  EXPECT_NEAR(std::abs(s.apply(Complex(0.3, 0.8))), 0.0, 1e-7);  // sqrt of a cancelling sum
  for (double x : {-2.0, -0.5, 0.1, 0.7, 3.0}) EXPECT_NEAR(s.apply(Complex(x, 0.0)).imag(), 0.0, 1e-12);
  for (Complex z : {Complex(0.2, 1.5), Complex(-1.0, 0.3), Complex(2.0, 2.0)}) {
    EXPECT_GT(s.apply(z).imag(), 0.0);
    const double h = 1e-6;
    const Complex fd = (s.apply(z + h) - s.apply(z - h)) / (2 * h);
    EXPECT_NEAR(std::abs(s.apply_d(z).second - fd), 0.0, 1e-6);
  }
}

TEST(Zipper, CircleGivesSimilarity) {
  const Complex c(0.4, -0.3);
  const double R = 0.8;
  const auto poly = sampled([&](double t) { return c + R * std::polar(1.0, t); }, 256);
  const auto m = zipper_interior(poly);
  EXPECT_NEAR(std::abs(m(c)), 0.0, 1e-6);
  for (Complex z : {Complex(0.1, 0.0), Complex(-0.5, 0.2), Complex(0.3, 0.65)})
    EXPECT_NEAR(std::abs(m(c + R * z)), std::abs(z), 1e-4);
  for (const auto& w : m.boundary_images()) EXPECT_NEAR(std::abs(w), 1.0, 1e-9);
}

TEST(Zipper, MatchesInverseOfKnownUnivalentMap) {
  // f(w) = w + a w^2 is univalent on the disk for |a| < 1/2; Phi o f is a disk automorphism
  const Complex a(0.25, 0.1);
  auto f = [&](Complex w) { return w + a * w * w; };
  const auto poly = sampled([&](double t) { return f(std::polar(1.0, t)); }, 600);
  const auto m = zipper_interior(poly);
  const std::vector<Complex> pts{{0.0, 0.0}, {0.5, 0.1}, {-0.3, 0.6}, {0.2, -0.7}, {-0.8, -0.1}};
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      EXPECT_NEAR(pseudo_hyperbolic(m(f(pts[i])), m(f(pts[j]))), pseudo_hyperbolic(pts[i], pts[j]), 2e-4);
}

TEST(Zipper, DerivativeMatchesFiniteDifference) {
  const auto poly = sampled([](double t) { return Complex(1.1 * std::cos(t), 0.6 * std::sin(t)); }, 200);
  const auto m = zipper_interior(poly);
  for (Complex z : {Complex(0.0, 0.0), Complex(0.5, 0.2), Complex(-0.7, -0.1)}) {
    const double h = 1e-6;
    const Complex fd = (m(z + h) - m(z - h)) / (2 * h);
    const Complex fdi = (m(z + Complex(0, h)) - m(z - Complex(0, h))) / Complex(0, 2 * h);
    EXPECT_NEAR(std::abs(m.evaluate_d(z).second - fd), 0.0, 1e-5);
    EXPECT_NEAR(std::abs(fd - fdi), 0.0, 1e-5);  // Cauchy-Riemann
  }
}

TEST(Zipper, SquareCornersAreEquispacedBySymmetry) {
  BoundaryPolygon sq{{{-1, -1}, {-1, 1}, {1, 1}, {1, -1}}};
  const auto p = resample_boundary(sq, 400);
  const auto m = zipper_interior(p);
  ASSERT_NEAR(std::abs(m(Complex{})), 0.0, 1e-9);
  // corners sit at indices 0, 100, 200, 300
  for (int k = 0; k < 4; ++k) {
    const Complex a = m.boundary_images()[k * 100], b = m.boundary_images()[((k + 1) % 4) * 100];
    EXPECT_NEAR(std::abs(std::arg(a / b)), kPi / 2, 1e-4);
  }
}

TEST(Zipper, CyclicOrderPreserved) {
  const auto p = resample_boundary(trace_boundary(test::ellipse_image(1.3, 0.5, 0.3)), 300);
  const auto m = zipper_interior(p);
  double total = 0.0;
  const auto& w = m.boundary_images();
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double d = std::arg(w[(k + 1) % w.size()] / w[k]);
    EXPECT_LT(d, 0.0);  // clockwise input, clockwise images
    total += d;
  }
  EXPECT_NEAR(total, -kTwoPi, 1e-9);
}

TEST(Exterior, InvertsJoukowskiExactly) {
  // z = w + b / w maps |w| > 1 onto the exterior of an ellipse with derivative 1 at infinity
  const double b = 0.3;
  auto J = [&](Complex w) { return w + b / w; };
  const auto poly = sampled([&](double t) { return J(std::polar(1.0, t)); }, 600);
  const auto m = zipper_exterior(poly);
  EXPECT_TRUE(m.is_exterior());
  for (Complex w : {Complex(1.5, 0.0), Complex(-0.2, 1.3), Complex(2.5, -2.0), Complex(-1.1, -0.4)})
    EXPECT_NEAR(std::abs(m(J(w)) - w), 0.0, 5e-4);
  for (const auto& z : m.boundary_images()) EXPECT_NEAR(std::abs(z), 1.0, 1e-9);
}

TEST(Normalize, BoundaryIntegralVanishes) {
  const auto p = resample_boundary(trace_boundary(test::ellipse_image(1.3, 0.5, 0.3, {0.2, 0.1})), 300);
  const auto raw = zipper_interior(p);
  const auto m = normalize_interior(raw, p);
  EXPECT_LT(std::abs(interior_condition_integral(m, p)), 1e-6);
  // normalization is a disk automorphism: pseudo-hyperbolic distances unchanged
  const Complex u(0.1, 0.2), v(-0.3, 0.0);
  EXPECT_NEAR(pseudo_hyperbolic(m(u), m(v)), pseudo_hyperbolic(raw(u), raw(v)), 1e-9);
}

TEST(Welding, CircleHasRotationWelding) {
  // second-order convergence to a pure rotation as the sampling is refined
  auto defect = [](int n) {
    const auto poly = sampled([](double t) { return 0.9 * std::polar(1.0, t); }, n);
    const auto in = normalize_interior(zipper_interior(poly), poly);
    const auto w = extract_welding(in, zipper_exterior(poly), poly);
    EXPECT_EQ(w.sample_count(), static_cast<std::size_t>(n));
    const double shift = w.interior_angles[0] - w.exterior_angles[0];
    double worst = 0.0;
    for (std::size_t k = 0; k < w.sample_count(); ++k) worst = std::max(worst, std::abs(w.interior_angles[k] - w.exterior_angles[k] - shift));
    return worst;
  };
  const double coarse = defect(200), fine = defect(800);
  EXPECT_LT(coarse, 1e-3);
  EXPECT_GT(coarse / fine, 8.0);
}

TEST(Welding, AnglesStrictlyIncreaseOverOneTurn) {
  const auto p = resample_boundary(trace_boundary(test::ellipse_image(1.4, 0.4, 0.7)), 400);
  const auto w = extract_welding(normalize_interior(zipper_interior(p), p), zipper_exterior(p), p);
  for (const auto* a : {&w.interior_angles, &w.exterior_angles}) {
    for (std::size_t k = 1; k < a->size(); ++k) EXPECT_GT((*a)[k], (*a)[k - 1]);
    EXPECT_LT(a->back() - a->front(), kTwoPi);
  }
  EXPECT_THROW(extract_welding(zipper_interior(p), zipper_exterior(p), reversed(p)), InvalidArgument);
}

TEST(Welding, UnwrapRejectsBacktracking) {
  std::vector<Complex> pts{std::polar(1.0, 0.0), std::polar(1.0, 1.0), std::polar(1.0, 0.5), std::polar(1.0, 3.0)};
  EXPECT_THROW(detail::unwrap_increasing(pts, "test"), ConformalError);
}
