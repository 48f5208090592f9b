#include <gtest/gtest.h>

#include "support.hpp"

using namespace hbs;

TEST(Mesh, LinesAreSymmetricAndGraded) {
  MeshOptions o;
  const auto l = mesh_lines(o);
  ASSERT_GT(l.size(), static_cast<std::size_t>(o.resolution));
  for (std::size_t k = 0; k < l.size(); ++k) EXPECT_NEAR(l[k], -l[l.size() - 1 - k], 1e-12);
  for (std::size_t k = 1; k < l.size(); ++k) EXPECT_GT(l[k], l[k - 1]);
  EXPECT_GE(l.back(), o.outer_half_width - 1e-12);
  EXPECT_NE(std::find(l.begin(), l.end(), o.half_width), l.end());
}

TEST(Mesh, RejectsNonContractiveField) {
  const auto f = test::field_of([](Complex) { return Complex(1.0, 0.0); });
  EXPECT_THROW(build_mesh(f), InvalidArgument);
}

TEST(AffineBeltrami, KnownAffineMaps) {
  const std::array<Complex, 3> p{Complex(0, 0), Complex(1, 0), Complex(0.2, 0.9)};
  auto apply = [&](auto f) { return std::array<Complex, 3>{f(p[0]), f(p[1]), f(p[2])}; };
  const Complex k(0.3, -0.2);
  EXPECT_NEAR(std::abs(affine_beltrami(p, apply([&](Complex z) { return 2.0 * z + 2.0 * k * std::conj(z) + 1.0; })) - k), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(affine_beltrami(p, apply([](Complex z) { return Complex(0.5, 2.0) * z; }))), 0.0, 1e-14);
  EXPECT_NEAR(signed_triangle_area(p[0], p[1], p[2]), 0.45, 1e-15);
}

TEST(Lbs, ZeroMuGivesIdentity) {
  const auto mesh = build_mesh(ComplexField(), MeshOptions{33});
  const auto sol = solve_lbs(mesh);
  double worst = 0.0;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) worst = std::max(worst, std::abs(sol.mapped_vertices[v] - mesh.vertices[v]));
  EXPECT_LT(worst, 1e-9);
  EXPECT_EQ(sol.flipped_triangle_count, 0);
  EXPECT_LT(sol.residual, 1e-8);
}

TEST(Lbs, RecoversPrescribedMuOnInteriorTriangles) {
  const auto f = test::field_of([](Complex z) { return 0.3 * std::conj(z) + Complex(0.1, 0.05); });
  const auto mesh = build_mesh(f);
  const auto sol = solve_lbs(mesh);
  ASSERT_EQ(sol.flipped_triangle_count, 0);
  const auto rec = recovered_mu(mesh, sol);
  double worst = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Complex c = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
    if (std::abs(c) < 0.95) worst = std::max(worst, std::abs(rec[t] - mesh.per_triangle_mu[t]));
  }
  EXPECT_LT(worst, 0.05);
}

TEST(Lbs, MapInterpolatesVertexImages) {
  const auto f = test::field_of([](Complex z) { return 0.2 * z; });
  const auto mesh = build_mesh(f, MeshOptions{33});
  const auto sol = solve_lbs(mesh);
  for (int v : {mesh.vertex(5, 7), mesh.vertex(20, 20), mesh.vertex(30, 12)})
    EXPECT_NEAR(std::abs(evaluate_map(mesh, sol, mesh.vertices[v]) - sol.mapped_vertices[v]), 0.0, 1e-12);
}

TEST(Reconstruct, ZeroFieldGivesDisk) {
  const auto r = reconstruct_shape(ComplexField());
  EXPECT_EQ(r.flipped_triangle_count, 0);
  EXPECT_TRUE(is_clockwise(r.boundary));
  BoundaryPolygon circle;
  for (int k = 0; k < 512; ++k) circle.vertices.push_back(std::polar(kNormalizedRmsRadius, -kTwoPi * k / 512));
  EXPECT_LT(polygon_hausdorff(r.boundary, circle), 1e-4);
  EXPECT_LT(hausdorff_distance(r.image, test::disk_image(25)), 1.5 / 50);
}

TEST(Reconstruct, EllipseRoundTrip) {
  const auto img = test::ellipse_image(1.3, 0.65, 0.4, {0.2, -0.1});
  const auto r = reconstruct_shape(compute_hbs(img).hbs);
  EXPECT_EQ(r.flipped_triangle_count, 0);
  EXPECT_LT(aligned_hausdorff(img, r.image), 0.04);
}

TEST(Compare, PolygonHausdorffOfConcentricSquares) {
  BoundaryPolygon a{{{-1, -1}, {-1, 1}, {1, 1}, {1, -1}}};
  const auto b = transform_polygon(a, [](Complex z) { return 1.2 * z; });
  EXPECT_NEAR(polygon_hausdorff(a, b), 0.2 * std::sqrt(2.0), 1e-3);
  EXPECT_NEAR(polygon_hausdorff(a, rotate_polygon(a, kPi / 2)), 0.0, 1e-12);
}

TEST(Compare, AlignedHausdorffIgnoresSimilarity) {
  const auto a = test::ellipse_image(1.2, 0.5, 0.0);
  const auto b = test::ellipse_image(0.9, 0.375, 1.1, {0.3, 0.2});
  EXPECT_LT(aligned_hausdorff(a, b), 0.03);
  EXPECT_GT(aligned_hausdorff(a, test::disk_image(40)), 0.1);
}
