#ifndef HBS_SHAPE_HPP
#define HBS_SHAPE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hbs/field.hpp"

namespace hbs {

/// Closed polygon in complex-plane coordinates; the closing edge is implicit.
struct BoundaryPolygon {
  std::vector<Complex> vertices;

  std::size_t size() const { return vertices.size(); }
  const Complex& operator[](std::size_t k) const { return vertices[k]; }
};

inline double signed_area(const BoundaryPolygon& p) {
  double a = 0.0;
  const auto n = p.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& u = p[k];
    const auto& v = p[(k + 1) % n];
    a += u.real() * v.imag() - v.real() * u.imag();
  }
  return 0.5 * a;
}

/// Clockwise means negative signed area in the y-up complex plane.
inline bool is_clockwise(const BoundaryPolygon& p) { return signed_area(p) < 0.0; }

inline BoundaryPolygon reversed(BoundaryPolygon p) {
  std::reverse(p.vertices.begin(), p.vertices.end());
  return p;
}

inline double perimeter(const BoundaryPolygon& p) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p[(k + 1) % p.size()] - p[k]);
  return s;
}

/// Area centroid.
inline Complex centroid(const BoundaryPolygon& p) {
  double a = 0.0, cx = 0.0, cy = 0.0;
  const auto n = p.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& u = p[k];
    const auto& v = p[(k + 1) % n];
    const double cr = u.real() * v.imag() - v.real() * u.imag();
    a += cr;
    cx += (u.real() + v.real()) * cr;
    cy += (u.imag() + v.imag()) * cr;
  }
  if (a == 0.0) throw InvalidArgument("centroid of a zero-area polygon");
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

/// Arc-length weighted RMS distance of the boundary from `center`.
inline double rms_radius(const BoundaryPolygon& p, Complex center) {
  double num = 0.0, den = 0.0;
  const auto n = p.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto a = p[k] - center, b = p[(k + 1) % n] - center;
    const double len = std::abs(b - a);
    // exact integral of |a + s(b-a)|^2 over s in [0,1]
    num += len * (std::norm(a) + std::real(a * std::conj(b)) + std::norm(b)) / 3.0;
    den += len;
  }
  if (den == 0.0) throw InvalidArgument("RMS radius of a degenerate polygon");
  return std::sqrt(num / den);
}

/// Even-odd point-in-polygon test.
inline bool contains(const BoundaryPolygon& p, Complex z) {
  bool in = false;
  const auto n = p.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = p[i];
    const auto& b = p[j];
    if ((a.imag() > z.imag()) != (b.imag() > z.imag())) {
      const double x = a.real() + (z.imag() - a.imag()) * (b.real() - a.real()) / (b.imag() - a.imag());
      if (z.real() < x) in = !in;
    }
  }
  return in;
}

namespace detail {
inline double cross(Complex a, Complex b) { return a.real() * b.imag() - a.imag() * b.real(); }

inline bool segments_intersect(Complex p1, Complex p2, Complex q1, Complex q2) {
  const double d1 = cross(q2 - q1, p1 - q1), d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1), d4 = cross(p2 - p1, q2 - p1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  auto on_segment = [](Complex a, Complex b, Complex c) {
    return std::min(a.real(), b.real()) <= c.real() && c.real() <= std::max(a.real(), b.real()) &&
           std::min(a.imag(), b.imag()) <= c.imag() && c.imag() <= std::max(a.imag(), b.imag());
  };
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}
}  // namespace detail

/// True if no two non-adjacent edges intersect and no vertex repeats.
inline bool is_simple(const BoundaryPolygon& p) {
  const auto n = p.size();
  if (n < 3) return false;
  struct Box {
    double x0, x1, y0, y1;
  };
  std::vector<Box> boxes(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = p[i], b = p[(i + 1) % n];
    if (a == b) return false;
    boxes[i] = {std::min(a.real(), b.real()), std::max(a.real(), b.real()), std::min(a.imag(), b.imag()),
                std::max(a.imag(), b.imag())};
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return boxes[a].x0 < boxes[b].x0; });
  for (std::size_t s = 0; s < n; ++s) {
    const auto i = order[s];
    for (std::size_t t = s + 1; t < n && boxes[order[t]].x0 <= boxes[i].x1; ++t) {
      const auto j = order[t];
      if (boxes[j].y0 > boxes[i].y1 || boxes[j].y1 < boxes[i].y0) continue;
      const bool adjacent = j == (i + 1) % n || i == (j + 1) % n;
      if (adjacent) {
        // adjacent edges may only share their common vertex: reject folding back
        const auto shared = j == (i + 1) % n ? p[j] : p[i];
        const auto a = j == (i + 1) % n ? p[i] : p[j];
        const auto c = j == (i + 1) % n ? p[(j + 1) % n] : p[(i + 1) % n];
        if (detail::cross(a - shared, c - shared) == 0.0 && std::real((a - shared) * std::conj(c - shared)) > 0.0)
          return false;
        continue;
      }
      if (detail::segments_intersect(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n])) return false;
    }
  }
  return true;
}

/// Builds a polygon from (col, row) pixel coordinates of `g`.
inline BoundaryPolygon polygon_from_pixels(const GridGeometry& g, const std::vector<std::pair<double, double>>& pts) {
  BoundaryPolygon p;
  for (auto [col, row] : pts)
    p.vertices.emplace_back((col + 0.5 - g.center_x) / g.pixels_per_unit, (g.center_y - (row + 0.5)) / g.pixels_per_unit);
  return p;
}

// ---------------------------------------------------------------------------
// Validation

enum class ShapeStatus { SimplyConnected, Disconnected, MultiplyConnected, Empty, TouchesBorder };

inline const char* to_string(ShapeStatus s) {
  switch (s) {
    case ShapeStatus::SimplyConnected: return "SimplyConnected";
    case ShapeStatus::Disconnected: return "Disconnected";
    case ShapeStatus::MultiplyConnected: return "MultiplyConnected";
    case ShapeStatus::Empty: return "Empty";
    case ShapeStatus::TouchesBorder: return "TouchesBorder";
  }
  return "Unknown";
}

struct ShapeValidation {
  ShapeStatus status = ShapeStatus::Empty;
  int component_count = 0;
  int hole_count = 0;

  bool ok() const { return status == ShapeStatus::SimplyConnected; }
};

struct ShapeError : Error {
  ShapeValidation validation;
  ShapeError(const ShapeValidation& v, const std::string& what)
      : Error(std::string(to_string(v.status)) + ": " + what), validation(v) {}
};

namespace detail {
// Labels connected regions of pixels where `member` holds; returns region count and,
// per region, whether it touches the image border.
template <class Member>
std::pair<int, std::vector<bool>> label_regions(int w, int h, bool eight, Member&& member) {
  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  std::vector<bool> touches;
  std::vector<std::pair<int, int>> stack;
  int count = 0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      if (!member(i, j) || label[static_cast<std::size_t>(i) * w + j] >= 0) continue;
      bool border = false;
      stack.assign(1, {i, j});
      label[static_cast<std::size_t>(i) * w + j] = count;
      while (!stack.empty()) {
        auto [r, c] = stack.back();
        stack.pop_back();
        if (r == 0 || c == 0 || r == h - 1 || c == w - 1) border = true;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            if ((dr == 0 && dc == 0) || (!eight && dr != 0 && dc != 0)) continue;
            const int rr = r + dr, cc = c + dc;
            if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
            auto& l = label[static_cast<std::size_t>(rr) * w + cc];
            if (l >= 0 || !member(rr, cc)) continue;
            l = count;
            stack.emplace_back(rr, cc);
          }
      }
      touches.push_back(border);
      ++count;
    }
  return {count, touches};
}
}  // namespace detail

/// Foreground components use 4-connectivity; holes are 8-connected background
/// regions that do not reach the image border.
inline ShapeValidation validate_shape(const GrayImage& img) {
  const int w = img.width(), h = img.height();
  ShapeValidation v;
  auto [components, fg_touch] = detail::label_regions(w, h, false, [&](int i, int j) { return img.foreground(i, j); });
  auto [bg_regions, bg_touch] = detail::label_regions(w, h, true, [&](int i, int j) { return !img.foreground(i, j); });
  v.component_count = components;
  v.hole_count = static_cast<int>(std::count(bg_touch.begin(), bg_touch.end(), false));
  const bool on_border = std::any_of(fg_touch.begin(), fg_touch.end(), [](bool b) { return b; });
  if (components == 0)
    v.status = ShapeStatus::Empty;
  else if (components > 1)
    v.status = ShapeStatus::Disconnected;
  else if (v.hole_count > 0)
    v.status = ShapeStatus::MultiplyConnected;
  else if (on_border)
    v.status = ShapeStatus::TouchesBorder;
  else
    v.status = ShapeStatus::SimplyConnected;
  return v;
}

// ---------------------------------------------------------------------------
// Boundary tracing (marching squares at the 0.5 level)

/// Closed clockwise contour through the midpoints of pixel-center edges that cross
/// the foreground boundary. Diagonal foreground contacts are separated, matching the
/// 4-connected foreground convention of validate_shape.
inline BoundaryPolygon trace_boundary(const GrayImage& img) {
  const auto validation = validate_shape(img);
  if (!validation.ok()) throw ShapeError(validation, "boundary tracing requires a simply connected shape");
  const auto& g = img.geometry();
  const int w = img.width(), h = img.height();
  auto fg = [&](int i, int j) { return i >= 0 && i < h && j >= 0 && j < w && img.foreground(i, j); };
  // Vertex keys: doubled pixel coordinates (2*row, 2*col) of edge midpoints, shifted to be nonnegative.
  const std::int64_t stride = 2 * static_cast<std::int64_t>(w) + 4;
  auto key = [&](int r2, int c2) { return (static_cast<std::int64_t>(r2) + 2) * stride + (c2 + 2); };
  std::unordered_map<std::int64_t, std::array<std::int64_t, 2>> adj;
  adj.reserve(4096);
  auto link = [&](std::int64_t a, std::int64_t b) {
    for (auto [u, v] : {std::pair{a, b}, std::pair{b, a}}) {
      auto [it, fresh] = adj.try_emplace(u, std::array<std::int64_t, 2>{-1, -1});
      auto& slot = it->second;
      if (slot[0] < 0) slot[0] = v;
      else if (slot[1] < 0) slot[1] = v;
      else throw ShapeError(validation, "contour vertex with more than two edges");
    }
  };
  for (int i = -1; i < h; ++i)
    for (int j = -1; j < w; ++j) {
      const bool tl = fg(i, j), tr = fg(i, j + 1), br = fg(i + 1, j + 1), bl = fg(i + 1, j);
      const auto top = key(2 * i, 2 * j + 1), bottom = key(2 * i + 2, 2 * j + 1);
      const auto left = key(2 * i + 1, 2 * j), right = key(2 * i + 1, 2 * j + 2);
      std::vector<std::int64_t> cut;
      if (tl != tr) cut.push_back(top);
      if (tr != br) cut.push_back(right);
      if (bl != br) cut.push_back(bottom);
      if (tl != bl) cut.push_back(left);
      if (cut.size() == 2) {
        link(cut[0], cut[1]);
      } else if (cut.size() == 4) {
        if (tl && br) {
          link(top, left);
          link(right, bottom);
        } else {
          link(top, right);
          link(left, bottom);
        }
      }
    }
  if (adj.empty()) throw ShapeError(validation, "no contour found");

  BoundaryPolygon poly;
  const auto start = adj.begin()->first;
  std::int64_t prev = -1, cur = start;
  std::size_t visited = 0;
  do {
    const auto r2 = cur / stride - 2, c2 = cur % stride - 2;
    const double row = r2 / 2.0, col = c2 / 2.0;
    poly.vertices.emplace_back((col + 0.5 - g.center_x) / g.pixels_per_unit, (g.center_y - (row + 0.5)) / g.pixels_per_unit);
    const auto& nb = adj.at(cur);
    const auto next = nb[0] != prev ? nb[0] : nb[1];
    prev = cur;
    cur = next;
    if (++visited > adj.size()) throw ShapeError(validation, "contour did not close");
  } while (cur != start);
  if (visited != adj.size()) {
    ShapeValidation v = validation;
    v.status = ShapeStatus::MultiplyConnected;
    throw ShapeError(v, "more than one contour loop");
  }
  if (poly.size() < 8) throw ShapeError(validation, "contour has fewer than 8 vertices");
  if (!is_clockwise(poly)) poly = reversed(std::move(poly));
  return poly;
}

/// `count` vertices equally spaced in arc length, starting at vertex 0; orientation kept.
inline BoundaryPolygon resample_boundary(const BoundaryPolygon& p, int count) {
  if (count < 8) throw InvalidArgument("resample count must be at least 8");
  const auto n = p.size();
  if (n < 2) throw InvalidArgument("cannot resample a polygon with fewer than 2 vertices");
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) cum[k + 1] = cum[k] + std::abs(p[(k + 1) % n] - p[k]);
  const double total = cum[n];
  if (!(total > 0.0)) throw InvalidArgument("cannot resample a zero-length polygon");
  BoundaryPolygon out;
  out.vertices.reserve(count);
  std::size_t seg = 0;
  for (int m = 0; m < count; ++m) {
    const double s = total * m / count;
    while (seg + 1 < n && cum[seg + 1] <= s) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double f = len > 0.0 ? (s - cum[seg]) / len : 0.0;
    out.vertices.push_back(p[seg] + f * (p[(seg + 1) % n] - p[seg]));
  }
  return out;
}

/// Pixel value 1 iff the pixel center is inside the polygon (even-odd rule).
inline GrayImage rasterize(const BoundaryPolygon& p, const GridGeometry& g) {
  if (p.size() < 3) throw InvalidArgument("rasterize needs at least 3 vertices");
  const double xmin = -g.center_x / g.pixels_per_unit, xmax = (g.width - g.center_x) / g.pixels_per_unit;
  const double ymin = (g.center_y - g.height) / g.pixels_per_unit, ymax = g.center_y / g.pixels_per_unit;
  for (const auto& z : p.vertices)
    if (!(z.real() >= xmin && z.real() <= xmax && z.imag() >= ymin && z.imag() <= ymax))
      throw InvalidArgument("polygon extends outside the grid");
  GrayImage img(g);
  std::vector<double> xs;
  const auto n = p.size();
  for (int i = 0; i < g.height; ++i) {
    const double y = (g.center_y - (i + 0.5)) / g.pixels_per_unit;
    xs.clear();
    for (std::size_t a = 0, b = n - 1; a < n; b = a++) {
      const auto& u = p[a];
      const auto& v = p[b];
      if ((u.imag() > y) != (v.imag() > y))
        xs.push_back(u.real() + (y - u.imag()) * (v.real() - u.real()) / (v.imag() - u.imag()));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // inside iff x0 <= center < x1, matching contains()
      const double c0 = xs[k] * g.pixels_per_unit + g.center_x - 0.5;
      const double c1 = xs[k + 1] * g.pixels_per_unit + g.center_x - 0.5;
      const int j0 = std::max(0, static_cast<int>(std::ceil(c0)));
      const int j1 = std::min(g.width - 1, static_cast<int>(std::ceil(c1)) - 1);
      for (int j = j0; j <= j1; ++j) img.set(i, j, 1.0);
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Hausdorff distance

namespace detail {
// Squared 1-D distance transform (Felzenszwalb-Huttenlocher lower envelope).
inline void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      v[k] = q;
      z[k + 1] = inf;
    } else {
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = inf;
    }
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) d[q] = inf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}
}  // namespace detail

/// Squared Euclidean distance (in pixels^2) from every pixel to the nearest foreground pixel.
inline std::vector<double> squared_distance_to_foreground(const GrayImage& img) {
  const int w = img.width(), h = img.height();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> grid(static_cast<std::size_t>(w) * h);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) grid[static_cast<std::size_t>(i) * w + j] = img.foreground(i, j) ? 0.0 : inf;
  std::vector<int> v;
  std::vector<double> z, col(h), out(std::max(w, h));
  for (int j = 0; j < w; ++j) {
    for (int i = 0; i < h; ++i) col[i] = grid[static_cast<std::size_t>(i) * w + j];
    detail::edt_1d(col.data(), out.data(), h, v, z);
    for (int i = 0; i < h; ++i) grid[static_cast<std::size_t>(i) * w + j] = out[i];
  }
  for (int i = 0; i < h; ++i) {
    double* row = grid.data() + static_cast<std::size_t>(i) * w;
    std::copy(row, row + w, out.begin());
    detail::edt_1d(out.data(), row, w, v, z);
  }
  return grid;
}

/// Max of the directed Hausdorff distances between the foreground pixel sets, in
/// complex-plane units of `a`'s geometry.
inline double hausdorff_distance(const GrayImage& a, const GrayImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw InvalidArgument("hausdorff: image sizes differ");
  if (a.foreground_count() == 0 || b.foreground_count() == 0) throw InvalidArgument("hausdorff: empty foreground");
  const auto da = squared_distance_to_foreground(a);
  const auto db = squared_distance_to_foreground(b);
  double worst = 0.0;
  for (std::size_t k = 0; k < da.size(); ++k) {
    if (a.values()[k] >= 0.5) worst = std::max(worst, db[k]);
    if (b.values()[k] >= 0.5) worst = std::max(worst, da[k]);
  }
  return std::sqrt(worst) / a.geometry().pixels_per_unit;
}

// ---------------------------------------------------------------------------
// Pose normalization

/// Similarity pose (dx, dy, k, theta) in the sampling convention of the pre-STN
/// resampler: a target point t maps to source s = k R(theta) t + (dx, dy) in
/// (u, v) = (x, -y) coordinates, i.e. s = k e^{i theta} t + (dx - i dy) in the
/// complex plane.
struct SimilarityParams {
  double dx = 0.0;
  double dy = 0.0;
  double k = 1.0;
  double theta = 0.0;

  Complex source_of(Complex target) const {
    return k * std::polar(1.0, theta) * target + Complex(dx, -dy);
  }
  Complex target_of(Complex source) const {
    return (source - Complex(dx, -dy)) / (k * std::polar(1.0, theta));
  }
};

inline BoundaryPolygon transform_polygon(const BoundaryPolygon& p, const auto& f) {
  BoundaryPolygon out;
  out.vertices.reserve(p.size());
  for (const auto& z : p.vertices) out.vertices.push_back(f(z));
  return out;
}

inline constexpr double kNormalizedRmsRadius = 0.5;

/// Pose parameters that move the centroid to the grid center and scale the boundary
/// RMS radius to 0.5; rotation is left at 0.
inline SimilarityParams pose_of(const BoundaryPolygon& p) {
  const auto c = centroid(p);
  const double r = rms_radius(p, c);
  return {c.real(), -c.imag(), r / kNormalizedRmsRadius, 0.0};
}

inline BoundaryPolygon normalize_polygon(const BoundaryPolygon& p) {
  const auto pose = pose_of(p);
  return transform_polygon(p, [&](Complex z) { return pose.target_of(z); });
}

/// Deterministic classical analogue of the pose-normalizing resampler.
inline std::pair<GrayImage, SimilarityParams> normalize_pose(const GrayImage& img) {
  const auto poly = trace_boundary(img);
  const auto pose = pose_of(poly);
  auto normalized = transform_polygon(poly, [&](Complex z) { return pose.target_of(z); });
  return {rasterize(normalized, img.geometry()), pose};
}

}  // namespace hbs

#endif  // HBS_SHAPE_HPP
