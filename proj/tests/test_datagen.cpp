#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace hbs;

namespace {
std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}
}  // namespace

TEST(Seeds, StableAndDistinct) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
  EXPECT_NE(derive_seed(1, 2, 0), derive_seed(1, 2, 1));
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFull);  // reference value of the splitmix64 generator
}

TEST(GenPolygon, TriangleAndDeterminism) {
  const auto t = gen_polygon(5, 3);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_TRUE(is_clockwise(t));
  EXPECT_TRUE(validate_shape(rasterize(t, GridGeometry::image())).ok());
  EXPECT_EQ(gen_polygon(99, 12).vertices, gen_polygon(99, 12).vertices);
  EXPECT_NE(gen_polygon(99, 12).vertices, gen_polygon(100, 12).vertices);
  EXPECT_THROW(gen_polygon(1, 2), InvalidArgument);
}

TEST(GenPolygon, BatchAlwaysValid) {
  int ok = 0;
  for (int s = 0; s < 1000; ++s) {
    const auto p = gen_polygon(derive_seed(11, s), 3 + s % 14);
    ok += is_simple(p) && is_clockwise(p) && validate_shape(rasterize(p, GridGeometry::image())).ok();
  }
  EXPECT_EQ(ok, 1000);
}

TEST(CircleMapGen, ZeroModesGiveIdentity) {
  const auto g = circle_map_from_modes({0.0, 0.0}, {0.3, 1.0});
  for (std::size_t m = 0; m < g.size(); ++m) EXPECT_NEAR(g.values[m], g.angle(m), 1e-15);
}

TEST(CircleMapGen, SlopeBoundedBelow) {
  for (int s = 0; s < 50; ++s) {
    const auto g = gen_monotone_circle_map(s, 1 + s % 6);
    double min_slope = 1e9;
    const double dt = kTwoPi / g.size();
    for (std::size_t m = 0; m < g.size(); ++m) {
      const double next = m + 1 < g.size() ? g.values[m + 1] : g.values[0] + kTwoPi;
      min_slope = std::min(min_slope, (next - g.values[m]) / dt);
    }
    EXPECT_GT(min_slope, 0.0);
  }
  // large coefficients are scaled back to monotone
  EXPECT_NO_THROW(circle_map_from_modes({3.0}, {0.0}).validate());
}

TEST(ShapeFromWelding, IdentityGivesDisk) {
  const auto w = shape_from_welding(CircleMapSamples::identity(1024));
  EXPECT_LT(hausdorff_distance(w.image, test::disk_image(25)), 1.5 / 50);
  EXPECT_LT(w.consistency, 1e-6);
}

TEST(ShapeFromWelding, SineWeldingIsConsistent) {
  const auto g = circle_map_from_modes({0.3}, {0.0});
  const auto w = shape_from_welding(g);
  EXPECT_TRUE(validate_shape(w.image).ok());
  EXPECT_LT(w.consistency, 0.02);
  // relative to the signal size as well
  EXPECT_LT(w.consistency, 0.5 * hbs_distance(w.prescribed, ComplexField()));
}

TEST(GridPerturb, ZeroIsIdentityAndBoundHolds) {
  BoundaryPolygon tri{{{-1.0, -0.7}, {0.0, 1.0}, {1.0, -0.7}}};
  EXPECT_EQ(grid_perturb(tri, 0.0, 1).vertices, tri.vertices);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = grid_perturb(tri, 2.0, s);
    EXPECT_TRUE(is_simple(p));
    EXPECT_LE(polygon_hausdorff(p, tri), 4.0 / 50.0);
  }
  EXPECT_EQ(grid_perturb(tri, 2.0, 3).vertices, grid_perturb(tri, 2.0, 3).vertices);
  EXPECT_THROW(grid_perturb(tri, -1.0, 0), InvalidArgument);
}

TEST(Augment, IdentityRangesAndDeterminism) {
  const auto img = rasterize(gen_polygon(3, 8), GridGeometry::image());
  EXPECT_EQ(augment(img, AugmentRanges::identity(), 9), img);
  EXPECT_EQ(augment(img, AugmentRanges{}, 9), augment(img, AugmentRanges{}, 9));
  AugmentRanges bad;
  bad.k = {0.0, 1.0};
  EXPECT_THROW(augment(img, bad, 0), InvalidArgument);
}

TEST(Augment, KeepsBorderMarginAndHbs) {
  const auto img = rasterize(gen_polygon(21, 9), GridGeometry::image());
  const auto base = compute_hbs(img).hbs;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto out = augment(img, AugmentRanges{}, s);
    EXPECT_TRUE(validate_shape(out).ok());
    for (int i = 0; i < 256; ++i)
      for (int j = 0; j < 256; ++j)
        if (out.foreground(i, j)) ASSERT_TRUE(i >= 4 && j >= 4 && i < 252 && j < 252);
    EXPECT_LT(hbs_distance(compute_hbs(out).hbs, base), 5e-3);
  }
}

TEST(Dataset, DeterministicAcrossRunsAndThreads) {
  GenConfig c;
  c.count = 6;
  c.seed = 17;
  c.method = GenMethod::Mixed;
  const auto d1 = test::temp_dir("ds1"), d2 = test::temp_dir("ds2");
  build_dataset(c, d1);
  c.threads = 3;
  const auto m = build_dataset(c, d2);
  EXPECT_EQ(slurp(d1 / "manifest.jsonl"), slurp(d2 / "manifest.jsonl"));
  for (const auto& e : m.entries) {
    EXPECT_EQ(slurp(d1 / e.hbs_path), slurp(d2 / e.hbs_path));
    EXPECT_EQ(slurp(d1 / e.image_path), slurp(d2 / e.image_path));
  }
}

TEST(Dataset, ManifestEntriesVerify) {
  GenConfig c;
  c.count = 4;
  c.seed = 3;
  c.method = GenMethod::Mixed;
  const auto dir = test::temp_dir("dsv");
  build_dataset(c, dir);
  const auto lines = read_manifest(dir / "manifest.jsonl");
  ASSERT_EQ(lines.size(), 4u);
  int welding = 0;
  for (const auto& j : lines) {
    EXPECT_EQ(j["schema"], "dsv1");
    EXPECT_EQ(j["validation"]["status"], "SimplyConnected");
    welding += j["provenance"]["method"] == "welding";
    const auto img = read_image(dir / j["image_path"].get<std::string>());
    const auto label = read_field(dir / j["hbs_path"].get<std::string>());
    EXPECT_LT(hbs_distance(compute_hbs(img).hbs, label), 1e-6);
  }
  EXPECT_EQ(welding, 2);
}

TEST(Dataset, SofteningLeavesLabelsUnchanged) {
  GenConfig c;
  c.count = 3;
  c.seed = 8;
  const auto a = test::temp_dir("hard"), b = test::temp_dir("soft");
  build_dataset(c, a);
  c.soften = true;
  const auto m = build_dataset(c, b);
  for (const auto& e : m.entries) {
    EXPECT_EQ(slurp(a / e.hbs_path), slurp(b / e.hbs_path));
    const auto soft = read_image(b / e.image_path);
    EXPECT_EQ(soft.thresholded(), read_image(a / e.image_path));
    EXPECT_EQ(compute_hbs(soft).hbs, read_field(b / e.hbs_path));
  }
}

TEST(Dataset, RejectsBadConfig) {
  GenConfig c;
  c.count = 0;
  EXPECT_THROW(build_dataset(c, test::temp_dir("bad")), InvalidArgument);
  EXPECT_THROW(parse_method("spline"), InvalidArgument);
}

TEST(ParallelFor, RethrowsLowestFailure) {
  try {
    parallel_for(10, 4, [](int i) {
      if (i == 3 || i == 7) throw InvalidArgument("item " + std::to_string(i));
    });
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_STREQ(e.what(), "item 3");
  }
}
