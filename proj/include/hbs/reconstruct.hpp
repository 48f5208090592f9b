#ifndef HBS_RECONSTRUCT_HPP
#define HBS_RECONSTRUCT_HPP

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "hbs/field.hpp"
#include "hbs/shape.hpp"

namespace hbs {

struct MeshOptions {
  int resolution = 129;        // vertices per side on the inner square
  double half_width = 1.28;    // inner square [-w, w]^2
  // Geometrically graded padding out to this half width; <= half_width disables it.
  double outer_half_width = 16.0;
  double growth = 1.15;
  double mu_cap = 1.0;
};

/// Tensor-product grid triangulation, two counterclockwise triangles per cell.
struct TriMesh {
  std::vector<double> lines;  // coordinate lines, shared by x and y
  std::vector<Complex> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Complex> per_triangle_mu;
  std::vector<unsigned char> main_diagonal;  // per cell: split along (1, 1)

  int side() const { return static_cast<int>(lines.size()); }
  int vertex(int row, int col) const { return row * side() + col; }
  bool on_boundary(int v) const {
    const int r = v / side(), c = v % side();
    return r == 0 || c == 0 || r == side() - 1 || c == side() - 1;
  }
};

inline std::vector<double> mesh_lines(const MeshOptions& o) {
  if (o.resolution < 2) throw InvalidArgument("mesh resolution must be at least 2");
  if (!(o.half_width > 0.0)) throw InvalidArgument("mesh half width must be positive");
  const double h = 2.0 * o.half_width / (o.resolution - 1);
  std::vector<double> pad;
  if (o.outer_half_width > o.half_width) {
    if (!(o.growth >= 1.0)) throw InvalidArgument("mesh growth factor must be >= 1");
    double x = o.half_width, step = h;
    while (x < o.outer_half_width) {
      step *= o.growth;
      x = std::min(x + step, o.outer_half_width);
      pad.push_back(x);
    }
  }
  std::vector<double> lines;
  for (auto it = pad.rbegin(); it != pad.rend(); ++it) lines.push_back(-*it);
  for (int k = 0; k < o.resolution; ++k) lines.push_back(-o.half_width + h * k);
  lines.back() = o.half_width;
  for (double x : pad) lines.push_back(x);
  return lines;
}

/// Mesh with per-triangle mu: bilinear sample of `field` at each triangle centroid,
/// zero where the centroid is outside the unit disk.
inline TriMesh build_mesh(const ComplexField& field, const MeshOptions& o = {}) {
  const auto& g = field.geometry();
  for (int i = 0; i < g.height; ++i)
    for (int j = 0; j < g.width; ++j)
      if (field.inside(i, j) && !(std::abs(field(i, j)) < 1.0))
        throw InvalidArgument("field has |mu| >= 1 inside the disk");
  TriMesh m;
  m.lines = mesh_lines(o);
  const int n = m.side();
  m.vertices.reserve(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m.vertices.emplace_back(m.lines[c], m.lines[r]);
  auto sample = [&](Complex z) -> Complex {
    if (std::abs(z) >= 1.0) return {};
    const double row = g.row_of(z), col = g.col_of(z);
    const double re = bilinear(g.width, g.height, row, col, [&](int i, int j) { return field(i, j).real(); });
    const double im = bilinear(g.width, g.height, row, col, [&](int i, int j) { return field(i, j).imag(); });
    Complex mu(re, im);
    if (std::abs(mu) > o.mu_cap) mu *= o.mu_cap / std::abs(mu);
    return mu;
  };
  m.triangles.reserve(2 * static_cast<std::size_t>(n - 1) * (n - 1));
  m.per_triangle_mu.reserve(2 * static_cast<std::size_t>(n - 1) * (n - 1));
  for (int r = 0; r + 1 < n; ++r)
    for (int c = 0; c + 1 < n; ++c) {
      const int v00 = m.vertex(r, c), v10 = m.vertex(r, c + 1), v01 = m.vertex(r + 1, c), v11 = m.vertex(r + 1, c + 1);
      // Split along the diagonal matching the local anisotropy: Im mu > 0 stretches
      // along (1, -1), so the (1, 1) diagonal keeps the stiffness couplings negative.
      const Complex center = 0.25 * (m.vertices[v00] + m.vertices[v10] + m.vertices[v01] + m.vertices[v11]);
      const bool main_diagonal = sample(center).imag() >= 0.0;
      m.main_diagonal.push_back(main_diagonal);
      if (main_diagonal) {
        m.triangles.push_back({v00, v10, v11});
        m.triangles.push_back({v00, v11, v01});
      } else {
        m.triangles.push_back({v00, v10, v01});
        m.triangles.push_back({v10, v11, v01});
      }
    }
  for (const auto& t : m.triangles) m.per_triangle_mu.push_back(sample((m.vertices[t[0]] + m.vertices[t[1]] + m.vertices[t[2]]) / 3.0));
  return m;
}

inline double signed_triangle_area(Complex a, Complex b, Complex c) { return 0.5 * detail::cross(b - a, c - a); }

/// Beltrami coefficient of the affine map taking triangle (p0,p1,p2) to (q0,q1,q2).
inline Complex affine_beltrami(const std::array<Complex, 3>& p, const std::array<Complex, 3>& q) {
  const Complex e1 = p[1] - p[0], e2 = p[2] - p[0];
  const Complex d1 = q[1] - q[0], d2 = q[2] - q[0];
  const Complex det = e1 * std::conj(e2) - e2 * std::conj(e1);
  if (std::abs(det) == 0.0) throw InvalidArgument("degenerate triangle");
  const Complex fz = (d1 * std::conj(e2) - d2 * std::conj(e1)) / det;
  const Complex fzb = (e1 * d2 - e2 * d1) / det;
  return fzb / fz;
}

struct QcMapSolution {
  std::vector<Complex> mapped_vertices;
  int flipped_triangle_count = 0;
  double residual = 0.0;
};

/// Piecewise-linear map with the mesh's per-triangle mu and identity on the outer
/// boundary: two SPD solves sharing one factorization.
inline QcMapSolution solve_lbs(const TriMesh& mesh) {
  const int nv = static_cast<int>(mesh.vertices.size());
  if (mesh.per_triangle_mu.size() != mesh.triangles.size()) throw InvalidArgument("mesh mu count mismatch");
  std::vector<int> unknown(nv, -1);
  int nu = 0;
  for (int v = 0; v < nv; ++v)
    if (!mesh.on_boundary(v)) unknown[v] = nu++;
  if (nu == 0) throw SolverError("mesh has no interior vertices");

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.triangles.size() * 9);
  Eigen::VectorXd bx = Eigen::VectorXd::Zero(nu), by = Eigen::VectorXd::Zero(nu);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Complex mu = mesh.per_triangle_mu[t];
    const double rho = mu.real(), tau = mu.imag(), den = 1.0 - std::norm(mu);
    if (!(den > 0.0)) throw InvalidArgument("triangle mu has modulus >= 1");
    const double a11 = ((rho - 1) * (rho - 1) + tau * tau) / den;
    const double a12 = -2.0 * tau / den;
    const double a22 = ((1 + rho) * (1 + rho) + tau * tau) / den;
    const Complex p[3] = {mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]};
    const double area = signed_triangle_area(p[0], p[1], p[2]);
    if (!(area > 0.0)) throw InvalidArgument("mesh triangle is degenerate or clockwise");
    double gx[3], gy[3];
    for (int i = 0; i < 3; ++i) {
      const Complex pj = p[(i + 1) % 3], pk = p[(i + 2) % 3];
      gx[i] = (pj.imag() - pk.imag()) / (2 * area);
      gy[i] = (pk.real() - pj.real()) / (2 * area);
    }
    for (int i = 0; i < 3; ++i) {
      const int ui = unknown[tri[i]];
      if (ui < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const double k = area * (gx[i] * (a11 * gx[j] + a12 * gy[j]) + gy[i] * (a12 * gx[j] + a22 * gy[j]));
        const int uj = unknown[tri[j]];
        if (uj >= 0) {
          trip.emplace_back(ui, uj, k);
        } else {
          bx[ui] -= k * p[j].real();
          by[ui] -= k * p[j].imag();
        }
      }
    }
  }
  Eigen::SparseMatrix<double> K(nu, nu);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
  if (solver.info() != Eigen::Success) throw SolverError("sparse factorization failed");
  const Eigen::VectorXd x = solver.solve(bx), y = solver.solve(by);
  if (solver.info() != Eigen::Success) throw SolverError("sparse solve failed");

  QcMapSolution s;
  const double nb = std::sqrt(bx.squaredNorm() + by.squaredNorm());
  const double nr = std::sqrt((K * x - bx).squaredNorm() + (K * y - by).squaredNorm());
  s.residual = nb > 0.0 ? nr / nb : nr;
  if (!(s.residual < 1e-8)) throw SolverError("linear solve residual above 1e-8");
  s.mapped_vertices.resize(nv);
  for (int v = 0; v < nv; ++v)
    s.mapped_vertices[v] = unknown[v] >= 0 ? Complex(x[unknown[v]], y[unknown[v]]) : mesh.vertices[v];
  for (const auto& tri : mesh.triangles)
    if (!(signed_triangle_area(s.mapped_vertices[tri[0]], s.mapped_vertices[tri[1]], s.mapped_vertices[tri[2]]) > 0.0))
      ++s.flipped_triangle_count;
  return s;
}

/// Per-triangle mu of the solved piecewise-linear map.
inline std::vector<Complex> recovered_mu(const TriMesh& mesh, const QcMapSolution& sol) {
  std::vector<Complex> mu;
  mu.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles)
    mu.push_back(affine_beltrami({mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]},
                                 {sol.mapped_vertices[t[0]], sol.mapped_vertices[t[1]], sol.mapped_vertices[t[2]]}));
  return mu;
}

/// Evaluates the piecewise-linear map at a point inside the meshed square.
inline Complex evaluate_map(const TriMesh& mesh, const QcMapSolution& sol, Complex z) {
  const auto& L = mesh.lines;
  auto cell = [&](double v) {
    if (v < L.front() || v > L.back()) throw InvalidArgument("point outside the mesh");
    auto it = std::upper_bound(L.begin(), L.end(), v);
    return std::clamp(static_cast<int>(it - L.begin()) - 1, 0, static_cast<int>(L.size()) - 2);
  };
  const int c = cell(z.real()), r = cell(z.imag());
  const double s = (z.real() - L[c]) / (L[c + 1] - L[c]);
  const double t = (z.imag() - L[r]) / (L[r + 1] - L[r]);
  const auto& G = sol.mapped_vertices;
  const Complex g00 = G[mesh.vertex(r, c)], g10 = G[mesh.vertex(r, c + 1)];
  const Complex g01 = G[mesh.vertex(r + 1, c)], g11 = G[mesh.vertex(r + 1, c + 1)];
  if (mesh.main_diagonal[static_cast<std::size_t>(r) * (mesh.side() - 1) + c]) {
    if (s >= t) return g00 + s * (g10 - g00) + t * (g11 - g10);
    return g00 + t * (g01 - g00) + s * (g11 - g01);
  }
  if (s + t <= 1.0) return g00 + s * (g10 - g00) + t * (g01 - g00);
  return g11 + (1.0 - s) * (g01 - g11) + (1.0 - t) * (g10 - g11);
}

struct ReconstructOptions {
  MeshOptions mesh;
  int ring_samples = 1024;
  // Flip repair: mu is damped by `repair_factor` on triangles within `repair_radius`
  // of a flipped one and the system re-solved, at most `repair_rounds` times.
  int repair_rounds = 12;
  double repair_radius = 0.06;
  double repair_factor = 0.85;
  GridGeometry output = GridGeometry::image();
};

struct Reconstruction {
  GrayImage image;
  BoundaryPolygon boundary;  // pose-normalized, clockwise
  int flipped_triangle_count = 0;      // after repair
  int raw_flipped_triangle_count = 0;  // first solve
  int repair_rounds = 0;
  int damped_triangle_count = 0;
  double residual = 0.0;
};

/// Damps mu near flipped triangles and re-solves until no triangle is flipped.
inline QcMapSolution repair_flips(TriMesh& mesh, QcMapSolution sol, const ReconstructOptions& o, int* rounds = nullptr,
                                  int* damped = nullptr) {
  std::vector<unsigned char> touched(mesh.triangles.size(), 0);
  std::vector<Complex> centroids(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    centroids[t] = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
  }
  int round = 0;
  for (; round < o.repair_rounds && sol.flipped_triangle_count > 0; ++round) {
    std::vector<Complex> flipped;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const auto& tri = mesh.triangles[t];
      if (!(signed_triangle_area(sol.mapped_vertices[tri[0]], sol.mapped_vertices[tri[1]], sol.mapped_vertices[tri[2]]) > 0.0))
        flipped.push_back(centroids[t]);
    }
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      if (mesh.per_triangle_mu[t] == Complex{}) continue;
      for (const auto& c : flipped)
        if (std::abs(centroids[t] - c) < o.repair_radius) {
          mesh.per_triangle_mu[t] *= o.repair_factor;
          touched[t] = 1;
          break;
        }
    }
    sol = solve_lbs(mesh);
  }
  if (rounds) *rounds = round;
  if (damped) *damped = static_cast<int>(std::count(touched.begin(), touched.end(), 1));
  return sol;
}

inline Reconstruction reconstruct_shape(const ComplexField& field, const ReconstructOptions& o = {}) {
  if (o.ring_samples < 8) throw InvalidArgument("ring_samples must be at least 8");
  auto mesh = build_mesh(field, o.mesh);
  auto sol = solve_lbs(mesh);
  const int raw_flips = sol.flipped_triangle_count;
  int rounds = 0, damped = 0;
  sol = repair_flips(mesh, std::move(sol), o, &rounds, &damped);
  BoundaryPolygon ring;
  ring.vertices.reserve(o.ring_samples);
  for (int k = 0; k < o.ring_samples; ++k)
    ring.vertices.push_back(evaluate_map(mesh, sol, std::polar(1.0, -kTwoPi * k / o.ring_samples)));
  if (!is_simple(ring) || !is_clockwise(ring)) throw SolverError("reconstructed boundary ring is flipped or self-intersecting");
  Reconstruction r{GrayImage(o.output), normalize_polygon(ring), sol.flipped_triangle_count, raw_flips, rounds, damped, sol.residual};
  r.image = rasterize(r.boundary, o.output);
  return r;
}

inline GrayImage shape_from_hbs(const ComplexField& field, const ReconstructOptions& o = {}) {
  return reconstruct_shape(field, o).image;
}

// ---------------------------------------------------------------------------
// Shape comparison up to similarity

inline BoundaryPolygon rotate_polygon(const BoundaryPolygon& p, double theta) {
  const Complex r = std::polar(1.0, theta);
  return transform_polygon(p, [&](Complex z) { return r * z; });
}

/// Symmetric Hausdorff distance between two closed polygons, sampled densely along
/// both boundaries against exact point-to-segment distances.
inline double polygon_hausdorff(const BoundaryPolygon& a, const BoundaryPolygon& b, int samples = 2048) {
  auto one_sided = [&](const BoundaryPolygon& from, const BoundaryPolygon& to) {
    const auto pts = resample_boundary(from, samples);
    double worst = 0.0;
    for (const auto& z : pts.vertices) {
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < to.size(); ++k) {
        const Complex p = to[k], q = to[(k + 1) % to.size()];
        const Complex e = q - p;
        const double n2 = std::norm(e);
        const double t = n2 > 0.0 ? std::clamp(std::real((z - p) * std::conj(e)) / n2, 0.0, 1.0) : 0.0;
        d = std::min(d, std::abs(z - (p + t * e)));
      }
      worst = std::max(worst, d);
    }
    return worst;
  };
  return std::max(one_sided(a, b), one_sided(b, a));
}

/// Raster Hausdorff distance between two shapes after pose normalization of both
/// and the best rotation of the second.
inline double aligned_hausdorff(const GrayImage& a, const GrayImage& b) {
  const auto& g = a.geometry();
  const auto pa = normalize_polygon(trace_boundary(a));
  const auto pb = normalize_polygon(trace_boundary(b));
  const auto ra = rasterize(pa, g);
  auto cost = [&](double t) { return hausdorff_distance(ra, rasterize(rotate_polygon(pb, t), g)); };
  constexpr int kCoarse = 180;
  double best = std::numeric_limits<double>::infinity(), best_t = 0.0;
  for (int s = 0; s < kCoarse; ++s) {
    const double t = kTwoPi * s / kCoarse, c = cost(t);
    if (c < best) {
      best = c;
      best_t = t;
    }
  }
  const double span = kTwoPi / kCoarse;
  const double center = best_t;
  for (int s = -20; s <= 20; ++s) {
    const double t = center + span * s / 20.0, c = cost(t);
    if (c < best) best = c;
  }
  return best;
}

}  // namespace hbs

#endif  // HBS_RECONSTRUCT_HPP
