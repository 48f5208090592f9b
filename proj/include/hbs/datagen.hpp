#ifndef HBS_DATAGEN_HPP
#define HBS_DATAGEN_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "hbs/field.hpp"
#include "hbs/harmonic.hpp"
#include "hbs/io.hpp"
#include "hbs/reconstruct.hpp"
#include "hbs/shape.hpp"
#include "hbs/transform.hpp"

namespace hbs {

struct GenerationError : Error {
  using Error::Error;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Stable per-item seed; independent of scheduling and thread count.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream = 0) {
  return splitmix64(master ^ splitmix64(index ^ splitmix64(stream)));
}

// ---------------------------------------------------------------------------
// Polygons

struct PolygonShapeOptions {
  double inner_radius = 0.7;  // annulus about the image center, complex units
  double outer_radius = 1.5;
  int max_redraws = 64;
  GridGeometry geometry = GridGeometry::image();
};

namespace detail {
inline BoundaryPolygon draw_star_polygon(NormalSource& rng, int n, const PolygonShapeOptions& o) {
  // Angular gaps below a third of the mean spacing give needle-like spikes.
  const double min_gap = kTwoPi / (3.0 * n);
  std::vector<double> angles(n);
  for (int attempt = 0;; ++attempt) {
    for (auto& a : angles) a = kTwoPi * rng.uniform();
    std::sort(angles.begin(), angles.end());
    bool ok = true;
    for (int k = 0; k < n && ok; ++k) {
      const double next = k + 1 < n ? angles[k + 1] : angles[0] + kTwoPi;
      ok = next - angles[k] >= min_gap;
    }
    if (ok || attempt > 1000) break;
  }
  const double r0 = o.inner_radius * o.inner_radius, r1 = o.outer_radius * o.outer_radius;
  std::vector<Complex> pts;
  pts.reserve(n);
  for (double a : angles) pts.push_back(std::polar(std::sqrt(r0 + (r1 - r0) * rng.uniform()), a));
  Complex c{};
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(n);
  std::sort(pts.begin(), pts.end(), [&](Complex a, Complex b) { return std::arg(a - c) > std::arg(b - c); });
  return BoundaryPolygon{pts};
}
}  // namespace detail

/// Clockwise star-shaped polygon through n random annulus points. Draws whose raster
/// is not simply connected (needle tips) are redrawn from the same seed stream.
inline BoundaryPolygon gen_polygon(std::uint64_t seed, int n, const PolygonShapeOptions& o = {}) {
  if (n < 3) throw InvalidArgument("gen_polygon needs n >= 3");
  NormalSource rng(seed);
  for (int attempt = 0; attempt < o.max_redraws; ++attempt) {
    auto p = detail::draw_star_polygon(rng, n, o);
    if (!is_simple(p)) continue;
    if (validate_shape(rasterize(p, o.geometry)).ok()) return p;
  }
  throw GenerationError("gen_polygon: no valid draw for seed " + std::to_string(seed));
}

// ---------------------------------------------------------------------------
// Weldings

struct CircleMapOptions {
  int samples = 1024;
  double amplitude = 0.35;  // mode m draws |c_m| <= amplitude / m^1.5
  double min_slope = 0.05;
};

/// g(t) = t + sum_m c_m sin(m t + phi_m), scaled down until min g' > min_slope.
inline CircleMapSamples circle_map_from_modes(const std::vector<double>& c, const std::vector<double>& phi,
                                              const CircleMapOptions& o = {}) {
  if (c.size() != phi.size()) throw InvalidArgument("mode coefficient/phase count mismatch");
  const int M = o.samples;
  auto slope_min = [&](double scale) {
    double mn = std::numeric_limits<double>::infinity();
    const int dense = 8 * M;
    for (int q = 0; q < dense; ++q) {
      const double t = kTwoPi * q / dense;
      double d = 1.0;
      for (std::size_t m = 0; m < c.size(); ++m) d += scale * (m + 1.0) * c[m] * std::cos((m + 1.0) * t + phi[m]);
      mn = std::min(mn, d);
    }
    return mn;
  };
  double scale = 1.0;
  while (slope_min(scale) <= o.min_slope) scale *= 0.9;
  CircleMapSamples g;
  g.values.resize(M);
  for (int q = 0; q < M; ++q) {
    const double t = kTwoPi * q / M;
    double v = t;
    for (std::size_t m = 0; m < c.size(); ++m) v += scale * c[m] * std::sin((m + 1.0) * t + phi[m]);
    g.values[q] = v;
  }
  g.validate();
  return g;
}

struct CircleMapModes {
  std::vector<double> c;
  std::vector<double> phi;
};

inline CircleMapModes draw_circle_map_modes(std::uint64_t seed, int modes, const CircleMapOptions& o = {}) {
  if (modes < 1) throw InvalidArgument("gen_monotone_circle_map needs modes >= 1");
  NormalSource rng(seed);
  CircleMapModes out{std::vector<double>(modes), std::vector<double>(modes)};
  for (int m = 0; m < modes; ++m) {
    out.c[m] = o.amplitude * (2.0 * rng.uniform() - 1.0) / std::pow(m + 1.0, 1.5);
    out.phi[m] = kTwoPi * rng.uniform();
  }
  return out;
}

inline CircleMapSamples gen_monotone_circle_map(std::uint64_t seed, int modes, const CircleMapOptions& o = {}) {
  const auto m = draw_circle_map_modes(seed, modes, o);
  return circle_map_from_modes(m.c, m.phi, o);
}

struct WeldingShape {
  GrayImage image;            // pose-normalized reconstruction
  BoundaryPolygon boundary;   // pose-normalized, clockwise
  ComplexField prescribed;    // rotation-normalized Beltrami coefficient of the extension of g
  ComplexField reextracted;   // forward pipeline on `image`
  double consistency = 0.0;   // rotation-aligned distance between the two
  int flipped_triangle_count = 0;
};

/// Shape whose welding is (up to the normalization freedom) g, via reconstruction.
inline WeldingShape shape_from_welding(const CircleMapSamples& g, const HbsConfig& config = {},
                                       const ReconstructOptions& ro = {}) {
  const auto b = normalize_rotation(beltrami_on_grid(g, config.geometry)).field;
  auto rec = reconstruct_shape(b, ro);
  if (rec.flipped_triangle_count > 0) throw SolverError("shape_from_welding: reconstruction has flipped triangles");
  auto h = compute_hbs(rec.image, config);
  const double d = align_rotation(h.hbs, b).distance;
  return {std::move(rec.image), std::move(rec.boundary), b, std::move(h.hbs), d, rec.flipped_triangle_count};
}

// ---------------------------------------------------------------------------
// Perturbation and augmentation

struct PerturbOptions {
  int control_points = 8;
  int densify = 400;
  int max_tries = 20;
  GridGeometry geometry = GridGeometry::image();
};

/// Smooth random displacement: Gaussian offsets (std = magnitude px, truncated at 2
/// std) on a control grid spanning the image, blended by uniform cubic B-splines.
/// Redrawn while the result self-intersects or rasterizes to an invalid shape.
inline BoundaryPolygon grid_perturb(const BoundaryPolygon& poly, double magnitude_px, std::uint64_t seed,
                                    const PerturbOptions& o = {}) {
  if (!(magnitude_px >= 0.0) || !std::isfinite(magnitude_px)) throw InvalidArgument("perturbation magnitude must be >= 0");
  if (o.control_points < 4) throw InvalidArgument("perturbation grid needs at least 4 control points per side");
  if (magnitude_px == 0.0) return poly;
  const auto& g = o.geometry;
  const double sigma = magnitude_px / g.pixels_per_unit;
  const auto dense = resample_boundary(poly, std::max<int>(o.densify, static_cast<int>(poly.size())));
  const double x0 = -g.center_x / g.pixels_per_unit, x1 = (g.width - g.center_x) / g.pixels_per_unit;
  const double y0 = (g.center_y - g.height) / g.pixels_per_unit, y1 = g.center_y / g.pixels_per_unit;
  const int nc = o.control_points;
  auto basis = [](double t, double w[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = (1 - t) * (1 - t) * (1 - t) / 6.0;
    w[1] = (3 * t3 - 6 * t2 + 4) / 6.0;
    w[2] = (-3 * t3 + 3 * t2 + 3 * t + 1) / 6.0;
    w[3] = t3 / 6.0;
  };
  NormalSource rng(seed);
  for (int attempt = 0; attempt < o.max_tries; ++attempt) {
    std::vector<Complex> offsets(static_cast<std::size_t>(nc) * nc);
    for (auto& d : offsets) {
      d = Complex(rng.normal(), rng.normal()) * sigma;
      if (std::abs(d) > 2.0 * sigma) d *= 2.0 * sigma / std::abs(d);
    }
    auto at = [&](int i, int j) { return offsets[static_cast<std::size_t>(std::clamp(i, 0, nc - 1)) * nc + std::clamp(j, 0, nc - 1)]; };
    BoundaryPolygon out;
    out.vertices.reserve(dense.size());
    for (const auto& z : dense.vertices) {
      const double u = std::clamp((z.real() - x0) / (x1 - x0), 0.0, 1.0) * (nc - 1);
      const double v = std::clamp((z.imag() - y0) / (y1 - y0), 0.0, 1.0) * (nc - 1);
      const int iu = std::min(static_cast<int>(u), nc - 2), iv = std::min(static_cast<int>(v), nc - 2);
      double wu[4], wv[4];
      basis(u - iu, wu);
      basis(v - iv, wv);
      Complex d{};
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) d += wv[a] * wu[b] * at(iv - 1 + a, iu - 1 + b);
      out.vertices.push_back(z + d);
    }
    if (is_simple(out) && validate_shape(rasterize(out, g)).ok()) return out;
  }
  throw GenerationError("grid_perturb: self-intersection persists after retries");
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double draw(NormalSource& rng) const { return lo + (hi - lo) * rng.uniform(); }
};

struct AugmentRanges {
  Range dx{-0.4, 0.4};  // complex units
  Range dy{-0.4, 0.4};
  Range k{0.8, 1.25};
  Range theta{-kPi, kPi};
  int max_tries = 50;
  int border_px = 4;

  static AugmentRanges identity() { return {{0, 0}, {0, 0}, {1, 1}, {0, 0}}; }
  void validate() const {
    for (const Range* r : {&dx, &dy, &k, &theta})
      if (!(r->lo <= r->hi) || !std::isfinite(r->lo) || !std::isfinite(r->hi)) throw InvalidArgument("invalid augmentation range");
    if (!(k.lo > 0.0)) throw InvalidArgument("augmentation scale range must be positive");
  }
};

namespace detail {
inline bool clear_of_border(const GrayImage& img, int margin) {
  for (int i = 0; i < img.height(); ++i)
    for (int j = 0; j < img.width(); ++j)
      if (img.foreground(i, j) && (i < margin || j < margin || i >= img.height() - margin || j >= img.width() - margin))
        return false;
  return true;
}
}  // namespace detail

struct Augmented {
  GrayImage image;
  SimilarityParams params;
};

/// Random similarity resampling, binarized; redrawn until the shape stays clear of
/// the border and simply connected.
inline Augmented augment_with_params(const GrayImage& image, const AugmentRanges& ranges, std::uint64_t seed) {
  ranges.validate();
  NormalSource rng(seed);
  for (int attempt = 0; attempt < ranges.max_tries; ++attempt) {
    SimilarityParams p{ranges.dx.draw(rng), ranges.dy.draw(rng), ranges.k.draw(rng), ranges.theta.draw(rng)};
    auto out = pre_stn_transform(image, p).thresholded();
    if (out.foreground_count() == 0 || !detail::clear_of_border(out, ranges.border_px)) continue;
    if (!validate_shape(out).ok()) continue;
    return {std::move(out), p};
  }
  throw GenerationError("augment: no valid draw within the retry budget");
}

inline GrayImage augment(const GrayImage& image, const AugmentRanges& ranges, std::uint64_t seed) {
  return augment_with_params(image, ranges, seed).image;
}

// ---------------------------------------------------------------------------
// Dataset

enum class GenMethod { Polygon, Welding, Mixed };

inline const char* to_string(GenMethod m) {
  switch (m) {
    case GenMethod::Polygon: return "polygon";
    case GenMethod::Welding: return "welding";
    case GenMethod::Mixed: return "mixed";
  }
  return "unknown";
}

inline GenMethod parse_method(const std::string& s) {
  if (s == "polygon") return GenMethod::Polygon;
  if (s == "welding") return GenMethod::Welding;
  if (s == "mixed") return GenMethod::Mixed;
  throw InvalidArgument("unknown generation method '" + s + "'");
}

struct GenConfig {
  GenMethod method = GenMethod::Polygon;
  int count = 10;
  std::uint64_t seed = 0;
  int polygon_points_min = 5;
  int polygon_points_max = 16;
  int welding_modes_min = 1;
  int welding_modes_max = 4;
  double perturb_magnitude = 0.0;  // px; 0 disables
  bool augment = false;
  AugmentRanges augment_ranges;
  bool soften = false;
  int threads = 1;
  int max_entry_attempts = 8;
  HbsConfig hbs;

  void validate() const {
    if (count <= 0) throw InvalidArgument("count must be positive");
    if (polygon_points_min < 3 || polygon_points_max < polygon_points_min) throw InvalidArgument("invalid polygon point range");
    if (welding_modes_min < 1 || welding_modes_max < welding_modes_min) throw InvalidArgument("invalid welding mode range");
    if (!(perturb_magnitude >= 0.0)) throw InvalidArgument("perturb magnitude must be >= 0");
    if (threads < 1) throw InvalidArgument("threads must be >= 1");
    augment_ranges.validate();
  }
};

inline constexpr const char* kManifestSchema = "dsv1";

struct ManifestEntry {
  int index = 0;
  std::string image_path;  // relative to the manifest directory
  std::string hbs_path;
  nlohmann::ordered_json provenance;
  ShapeValidation validation;
  ConditionResiduals residuals;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = kManifestSchema;
    j["index"] = index;
    j["image_path"] = image_path;
    j["hbs_path"] = hbs_path;
    j["provenance"] = provenance;
    j["validation"] = {{"status", to_string(validation.status)},
                       {"components", validation.component_count},
                       {"holes", validation.hole_count}};
    j["hbs_residuals"] = {{"interior_integral", residuals.interior_integral},
                          {"arg_integral", residuals.arg_integral},
                          {"arg_integral_over_z", residuals.arg_integral_over_z}};
    return j;
  }
};

struct DatasetManifest {
  std::filesystem::path path;
  std::vector<ManifestEntry> entries;
};

/// Runs fn(i) for i in [0, n) on `threads` workers; the lowest-index failure is
/// rethrown after all workers finish.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int t = std::max(1, std::min(threads, n));
  if (t == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {
inline std::string numbered(const char* prefix, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06d%s", prefix, index, ext);
  return buf;
}

inline void check_hbs_invariants(const HbsResult& r) {
  if (!(r.hbs.sup_norm() < 1.0)) throw GenerationError("HBS sup norm not below 1");
  if (!r.degenerate_rotation) {
    if (std::abs(r.residuals.arg_integral) > 1e-3) throw GenerationError("arg of the HBS integral exceeds 1e-3");
    if (!(r.residuals.arg_integral_over_z >= 0.0 && r.residuals.arg_integral_over_z < kPi))
      throw GenerationError("arg of the HBS integral over z outside [0, pi)");
  }
}

struct EntryResult {
  ManifestEntry entry;
  GrayImage image;
  ComplexField hbs;
};

inline EntryResult generate_entry(const GenConfig& c, int index) {
  const GenMethod method = c.method == GenMethod::Mixed ? (index % 2 == 0 ? GenMethod::Polygon : GenMethod::Welding) : c.method;
  const std::uint64_t entry_seed = derive_seed(c.seed, static_cast<std::uint64_t>(index));
  std::string last_error;
  for (int attempt = 0; attempt < c.max_entry_attempts; ++attempt) {
    const std::uint64_t s = derive_seed(entry_seed, static_cast<std::uint64_t>(attempt), 1);
    NormalSource rng(s);
    nlohmann::ordered_json prov;
    prov["method"] = to_string(method);
    prov["master_seed"] = c.seed;
    prov["entry_seed"] = s;
    prov["attempt"] = attempt;
    try {
      BoundaryPolygon poly;
      if (method == GenMethod::Polygon) {
        const int n = c.polygon_points_min + static_cast<int>(rng.uniform() * (c.polygon_points_max - c.polygon_points_min + 1));
        poly = gen_polygon(derive_seed(s, 2), std::min(n, c.polygon_points_max));
        prov["points"] = std::min(n, c.polygon_points_max);
      } else {
        const int m = c.welding_modes_min + static_cast<int>(rng.uniform() * (c.welding_modes_max - c.welding_modes_min + 1));
        const auto g = gen_monotone_circle_map(derive_seed(s, 3), std::min(m, c.welding_modes_max));
        const auto ws = shape_from_welding(g, c.hbs);
        // reconstruction is pose-normalized to RMS radius 0.5; generate at radius 1
        poly = transform_polygon(ws.boundary, [](Complex z) { return 2.0 * z; });
        prov["modes"] = std::min(m, c.welding_modes_max);
        prov["welding_consistency"] = ws.consistency;
      }
      if (c.perturb_magnitude > 0.0) {
        poly = grid_perturb(poly, c.perturb_magnitude, derive_seed(s, 4));
        prov["perturb_px"] = c.perturb_magnitude;
      }
      GrayImage image = rasterize(poly, GridGeometry::image());
      if (c.augment) {
        const auto a = augment_with_params(image, c.augment_ranges, derive_seed(s, 5));
        image = a.image;
        prov["augment"] = {{"dx", a.params.dx}, {"dy", a.params.dy}, {"k", a.params.k}, {"theta", a.params.theta}};
      }
      const auto validation = validate_shape(image);
      if (!validation.ok()) throw ShapeError(validation, "generated shape is not simply connected");
      auto h = compute_hbs(image, c.hbs);
      check_hbs_invariants(h);
      if (c.soften) {
        NormalSource srng(derive_seed(s, 6));
        SoftenParams sp;
        sp.a = 0.2 * srng.uniform();
        sp.b = 0.2 * srng.uniform();
        sp.seed = derive_seed(s, 7);
        image = hbs::soften(image, sp);
        prov["soften"] = {{"a", sp.a}, {"b", sp.b}, {"epsilon", sp.epsilon}, {"sigma", sp.noise_sigma}, {"seed", sp.seed}};
      }
      EntryResult r{ManifestEntry{index, "images/" + numbered("img", index, ".pgm"), "labels/" + numbered("hbs", index, ".hbs"),
                                  prov, validation, h.residuals},
                    std::move(image), std::move(h.hbs)};
      return r;
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  throw GenerationError("entry " + std::to_string(index) + " (method " + to_string(method) + ", seed " +
                        std::to_string(entry_seed) + ") failed after retries: " + last_error);
}
}  // namespace detail

/// Generates the corpus into `out_dir`: images/, labels/ and manifest.jsonl.
inline DatasetManifest build_dataset(const GenConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  std::filesystem::create_directories(out_dir / "labels", ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
  std::vector<std::optional<ManifestEntry>> entries(static_cast<std::size_t>(config.count));
  parallel_for(config.count, config.threads, [&](int i) {
    auto r = detail::generate_entry(config, i);
    write_image(r.image, out_dir / r.entry.image_path);
    write_field(r.hbs, out_dir / r.entry.hbs_path);
    entries[i] = std::move(r.entry);
  });
  DatasetManifest m{out_dir / "manifest.jsonl", {}};
  std::ostringstream text;
  for (auto& e : entries) {
    text << e->to_json().dump() << '\n';
    m.entries.push_back(std::move(*e));
  }
  std::ofstream f(m.path, std::ios::binary);
  if (!f) throw IoError("cannot write manifest " + m.path.string());
  f << text.str();
  if (!f) throw IoError("failed writing manifest " + m.path.string());
  return m;
}

/// Parsed manifest lines (validation and residuals are kept in the raw JSON).
inline std::vector<nlohmann::json> read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open manifest " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (j.value("schema", "") != kManifestSchema) throw FormatError("manifest entry has unknown schema");
      out.push_back(std::move(j));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed manifest line: ") + e.what());
    }
  }
  return out;
}

}  // namespace hbs

#endif  // HBS_DATAGEN_HPP
