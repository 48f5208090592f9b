#ifndef HBS_CONFORMAL_HPP
#define HBS_CONFORMAL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hbs/field.hpp"
#include "hbs/shape.hpp"

namespace hbs {

namespace zipper {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Geodesic slit map for a point `a` in the upper half-plane: maps H minus the
/// circular arc orthogonal to R from 0 to `a` onto H, sending a to 0.
struct SlitMap {
  double b = kInf;  // second real endpoint of the geodesic circle, |a|^2 / Re a
  double c = 0.0;   // slit height after straightening, |a|^2 / Im a

  explicit SlitMap(Complex a) {
    const double r2 = std::norm(a);
    b = a.real() != 0.0 ? r2 / a.real() : kInf;
    c = r2 / a.imag();
  }

  Complex pre(Complex z) const { return std::isinf(b) ? z : z / (1.0 - z / b); }
  Complex pre_derivative(Complex z) const {
    if (std::isinf(b)) return 1.0;
    const Complex d = 1.0 - z / b;
    return 1.0 / (d * d);
  }

  Complex apply(Complex z) const {
    const Complex t = pre(z);
    const Complex q = c / t;
    return t * std::sqrt(1.0 + q * q);
  }
  // Value and derivative.
  std::pair<Complex, Complex> apply_d(Complex z) const {
    const Complex t = pre(z);
    const Complex q = c / t;
    const Complex f = t * std::sqrt(1.0 + q * q);
    return {f, t / f * pre_derivative(z)};
  }

  /// Extended-real boundary point (infinity allowed). A point at 0 is the slit base
  /// seen from the zipped side, which lies on the negative axis.
  double apply_real(double x) const {
    double t;
    if (std::isinf(x)) {
      if (std::isinf(b)) return kInf;
      t = -b;
    } else {
      if (!std::isinf(b) && x == b) return kInf;
      t = std::isinf(b) ? x : x / (1.0 - x / b);
    }
    if (t == 0.0) return -c;
    const double mag = std::sqrt(t * t + c * c);
    return t > 0.0 ? mag : -mag;
  }
};

}  // namespace zipper

/// Conformal map of a Jordan polygon's interior onto the unit disk, built by the
/// geodesic zipper construction. When `inversion_center` is set the map is the
/// exterior map z -> 1 / inner(1 / (z - c)) instead.
class ZipperMap {
 public:
  /// Images of the construction vertices, in input order, on the unit circle.
  const std::vector<Complex>& boundary_images() const { return images_; }
  const std::vector<Complex>& elementary_params() const { return slits_; }
  Complex mobius_a() const { return mobius_a_; }
  double mobius_rotation() const { return mobius_rot_; }
  bool is_exterior() const { return inversion_center_.has_value(); }
  std::optional<Complex> inversion_center() const { return inversion_center_; }

  /// Evaluates the map at an arbitrary point of the (closed) domain.
  Complex operator()(Complex z) const { return evaluate_d(z).first; }

  /// Value and complex derivative.
  std::pair<Complex, Complex> evaluate_d(Complex z) const {
    if (inversion_center_) {
      const Complex d = z - *inversion_center_;
      const Complex zeta = 1.0 / d;
      auto [w, dw] = inner_d(zeta);
      // d/dz [1 / w(1/d)] = dw / (w^2 d^2)
      return {1.0 / w, dw / (w * w * d * d)};
    }
    return inner_d(z);
  }

  /// Post-composes w -> e^{i rot} (w - a) / (1 - conj(a) w) on top of the raw map.
  ZipperMap with_mobius(Complex a, double rot) const {
    ZipperMap m = *this;
    m.mobius_a_ = a;
    m.mobius_rot_ = rot;
    m.images_.clear();
    for (const auto& w : raw_images_) m.images_.push_back(m.post(w));
    if (m.inversion_center_)
      for (auto& w : m.images_) w = 1.0 / w;
    return m;
  }

  const std::vector<Complex>& raw_images() const { return raw_images_; }

  friend ZipperMap zipper_core(const std::vector<Complex>& vertices, Complex interior_point);
  friend ZipperMap zipper_exterior(const BoundaryPolygon& poly);

 private:
  Complex post(Complex w) const {
    return std::polar(1.0, mobius_rot_) * (w - mobius_a_) / (1.0 - std::conj(mobius_a_) * w);
  }
  Complex post_derivative(Complex w) const {
    const Complex d = 1.0 - std::conj(mobius_a_) * w;
    return std::polar(1.0, mobius_rot_) * (1.0 - std::norm(mobius_a_)) / (d * d);
  }

  std::pair<Complex, Complex> inner_d(Complex z) const {
    // first map: i sqrt((z - p1) / (z - p0))
    const Complex num = z - p1_, den = z - p0_;
    const Complex ratio = num / den;
    const Complex s = std::sqrt(ratio);
    Complex w = Complex(0, 1) * s;
    Complex dw = Complex(0, 1) * ((p1_ - p0_) / (den * den)) / (2.0 * s);
    for (const auto& a : slits_) {
      auto [f, df] = zipper::SlitMap(a).apply_d(w);
      dw *= df;
      w = f;
    }
    // final map: -(w / (1 - w / xi))^2
    if (std::isinf(xi_)) {
      dw *= -2.0 * w;
      w = -(w * w);
    } else {
      const Complex d = 1.0 - w / xi_;
      const Complex u = w / d;
      dw *= -2.0 * u / (d * d);
      w = -(u * u);
    }
    // half-plane to disk, centered at `center_`
    const Complex den2 = w - std::conj(center_);
    const Complex disk = (w - center_) / den2;
    dw *= (center_ - std::conj(center_)) / (den2 * den2);
    return {post(disk), post_derivative(disk) * dw};
  }

  Complex p0_, p1_;
  std::vector<Complex> slits_;
  double xi_ = zipper::kInf;
  Complex center_{0.0, 1.0};
  Complex mobius_a_{};
  double mobius_rot_ = 0.0;
  std::optional<Complex> inversion_center_;
  std::vector<Complex> raw_images_;  // before the post Mobius (and before inversion)
  std::vector<Complex> images_;
};

namespace detail {
inline void require_finite(Complex z, const char* what) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw ConformalError(std::string("numerical breakdown in zipper: ") + what);
}
}  // namespace detail

/// Zipper construction on a simple polygon (either orientation). `interior_point`
/// is sent to the disk center.
inline ZipperMap zipper_core(const std::vector<Complex>& input, Complex interior_point) {
  const std::size_t n = input.size();
  if (n < 8) throw InvalidArgument("zipper needs at least 8 vertices");
  BoundaryPolygon probe{input};
  const bool ccw = signed_area(probe) > 0.0;
  // Work counterclockwise so the zipped boundary collects on the negative axis.
  std::vector<Complex> p(input);
  if (!ccw) std::reverse(p.begin(), p.end());

  ZipperMap m;
  m.p0_ = p[0];
  m.p1_ = p[1];
  std::vector<double> zipped;  // images of p[0..k] on the extended real line
  zipped.reserve(n);
  zipped.push_back(zipper::kInf);
  zipped.push_back(0.0);
  std::vector<Complex> open(p.begin() + 2, p.end());
  for (auto& z : open) {
    z = Complex(0, 1) * std::sqrt((z - p[1]) / (z - p[0]));
    detail::require_finite(z, "initial map");
  }
  Complex q = Complex(0, 1) * std::sqrt((interior_point - p[1]) / (interior_point - p[0]));
  detail::require_finite(q, "initial map (interior point)");

  m.slits_.reserve(n - 2);
  for (std::size_t k = 2; k < n; ++k) {
    Complex a = open[k - 2];
    if (!(a.imag() > 0.0)) {
      // Roundoff can leave a point on the axis; anything clearly below is a failure.
      if (a.imag() < -1e-9 * (1.0 + std::abs(a)))
        throw ConformalError("boundary point left the half-plane (near self-intersection?)");
      a.imag(1e-14 * (1.0 + std::abs(a)));
    }
    m.slits_.push_back(a);
    const zipper::SlitMap f(a);
    for (auto& x : zipped) x = f.apply_real(x);
    zipped.push_back(0.0);
    for (std::size_t j = k - 1; j < open.size(); ++j) {
      open[j] = f.apply(open[j]);
      detail::require_finite(open[j], "slit map");
    }
    q = f.apply(q);
    detail::require_finite(q, "slit map (interior point)");
  }
  m.xi_ = zipped[0];
  auto final_real = [&](double x) -> double {
    if (std::isinf(m.xi_)) return std::isinf(x) ? zipper::kInf : -(x * x);
    if (std::isinf(x)) return -(m.xi_ * m.xi_);
    if (x == m.xi_) return zipper::kInf;
    const double u = x / (1.0 - x / m.xi_);
    return -(u * u);
  };
  if (std::isinf(m.xi_)) {
    q = -(q * q);
  } else {
    const Complex u = q / (1.0 - q / m.xi_);
    q = -(u * u);
  }
  if (!(q.imag() > 0.0)) throw ConformalError("interior reference point did not map into the half-plane");
  m.center_ = q;

  std::vector<Complex> images(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = final_real(zipped[k]);
    Complex w = std::isinf(x) ? Complex(1.0, 0.0) : (Complex(x, 0) - q) / (Complex(x, 0) - std::conj(q));
    detail::require_finite(w, "boundary image");
    w /= std::abs(w);  // real points land on the circle up to roundoff
    images[k] = w;
  }
  if (!ccw) std::reverse(images.begin(), images.end());
  m.raw_images_ = images;
  m.images_ = std::move(images);
  return m;
}

/// An interior point: the centroid when it lies inside, otherwise the sampled point
/// farthest from the boundary.
inline Complex interior_point(const BoundaryPolygon& poly) {
  const Complex c = centroid(poly);
  auto dist_to_boundary = [&](Complex z) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const Complex a = poly[k], b = poly[(k + 1) % poly.size()];
      const Complex ab = b - a;
      const double t = std::clamp(std::real((z - a) * std::conj(ab)) / std::norm(ab), 0.0, 1.0);
      d = std::min(d, std::abs(z - (a + t * ab)));
    }
    return d;
  };
  double xmin = poly[0].real(), xmax = xmin, ymin = poly[0].imag(), ymax = ymin;
  for (const auto& z : poly.vertices) {
    xmin = std::min(xmin, z.real());
    xmax = std::max(xmax, z.real());
    ymin = std::min(ymin, z.imag());
    ymax = std::max(ymax, z.imag());
  }
  const double scale = std::max(xmax - xmin, ymax - ymin);
  if (contains(poly, c) && dist_to_boundary(c) > 0.05 * scale) return c;
  Complex best = c;
  double best_d = -1.0;
  constexpr int kGrid = 48;
  for (int i = 0; i <= kGrid; ++i)
    for (int j = 0; j <= kGrid; ++j) {
      const Complex z(xmin + (xmax - xmin) * j / kGrid, ymin + (ymax - ymin) * i / kGrid);
      if (!contains(poly, z)) continue;
      const double d = dist_to_boundary(z);
      if (d > best_d) {
        best_d = d;
        best = z;
      }
    }
  if (best_d < 0.0) throw ConformalError("could not find an interior point");
  return best;
}

namespace detail {
inline void check_on_circle(const ZipperMap& m, const char* which) {
  for (const auto& w : m.boundary_images())
    if (std::abs(std::abs(w) - 1.0) > 1e-6)
      throw ConformalError(std::string(which) + ": boundary image off the unit circle");
}
}  // namespace detail

/// Interior map Omega -> D; images of the polygon vertices lie on the unit circle.
inline ZipperMap zipper_interior(const BoundaryPolygon& poly) {
  if (poly.size() < 8) throw InvalidArgument("zipper_interior needs at least 8 vertices");
  auto m = zipper_core(poly.vertices, interior_point(poly));
  detail::check_on_circle(m, "zipper_interior");
  return m;
}

inline Complex disk_automorphism(Complex a, Complex w) { return (w - a) / (1.0 - std::conj(a) * w); }

/// Arc-length weighted mean of the boundary images; the normalization drives this to 0.
inline Complex boundary_image_mean(const std::vector<Complex>& images, const BoundaryPolygon& poly) {
  const auto n = poly.size();
  Complex s{};
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double len = 0.5 * std::abs(poly[(k + 1) % n] - poly[(k + n - 1) % n]);
    s += images[k] * len;
    total += len;
  }
  return s / total;
}

/// Discrete boundary integral sum_k Phi1^{-1}(z_k) |dz_k|.
inline Complex interior_condition_integral(const ZipperMap& m, const BoundaryPolygon& poly) {
  return boundary_image_mean(m.boundary_images(), poly) * perimeter(poly);
}

/// Post-composes a disk automorphism so the boundary integral of the interior map
/// vanishes; damped fixed-point iteration on the automorphism center.
inline ZipperMap normalize_interior(const ZipperMap& map, const BoundaryPolygon& poly, double damping = 0.5,
                                    double tolerance = 1e-6, int max_iterations = 200) {
  if (map.boundary_images().size() != poly.size()) throw InvalidArgument("map/polygon size mismatch");
  const auto& raw = map.raw_images();
  const double length = perimeter(poly);
  Complex a{};
  std::vector<Complex> images(raw.size());
  for (int it = 0; it <= max_iterations; ++it) {
    for (std::size_t k = 0; k < raw.size(); ++k) images[k] = disk_automorphism(a, raw[k]);
    const Complex mean = boundary_image_mean(images, poly);
    // integral below tolerance, and the scale-free mean tight enough to be a fixed point
    if (std::abs(mean) * length < tolerance && std::abs(mean) < 1e-10) return map.with_mobius(a, map.mobius_rotation());
    const Complex delta = damping * mean;
    a = (delta + a) / (1.0 + std::conj(a) * delta);
    if (!(std::abs(a) < 1.0)) throw ConformalError("interior normalization left the disk");
  }
  throw ConformalError("interior normalization did not converge");
}

/// Exterior map (Omega^c, infinity) -> (D^c, infinity) by inversion about an interior
/// point, with positive real derivative at infinity.
inline ZipperMap zipper_exterior(const BoundaryPolygon& poly) {
  if (poly.size() < 8) throw InvalidArgument("zipper_exterior needs at least 8 vertices");
  const Complex c = interior_point(poly);
  std::vector<Complex> inverted;
  inverted.reserve(poly.size());
  for (const auto& z : poly.vertices) inverted.push_back(1.0 / (z - c));
  ZipperMap inner = zipper_core(inverted, Complex{});
  // inner(0) = 0 by construction; fix the rotation with the derivative at 0
  const auto [w0, dw0] = inner.evaluate_d(Complex{});
  if (std::abs(w0) > 1e-9) throw ConformalError("exterior map does not fix infinity");
  ZipperMap m = inner.with_mobius(Complex{}, -std::arg(dw0));
  m.inversion_center_ = c;
  m.images_.clear();
  for (const auto& w : m.raw_images_) m.images_.push_back(1.0 / m.post(w));
  detail::check_on_circle(m, "zipper_exterior");
  return m;
}

/// Circle homeomorphism f = Phi1^{-1} o Phi2 sampled at the boundary vertices:
/// f(e^{i beta_k}) = e^{i alpha_k}; both sequences unwrapped and strictly increasing.
struct WeldingMap {
  std::vector<double> exterior_angles;  // beta_k
  std::vector<double> interior_angles;  // alpha_k
  std::size_t sample_count() const { return exterior_angles.size(); }
};

namespace detail {
inline std::vector<double> unwrap_increasing(const std::vector<Complex>& pts, const char* which) {
  std::vector<double> out(pts.size());
  out[0] = std::arg(pts[0]);
  double total = 0.0;
  for (std::size_t k = 1; k <= pts.size(); ++k) {
    double d = std::arg(pts[k % pts.size()]) - std::arg(pts[k - 1]);
    d -= kTwoPi * std::floor(d / kTwoPi);
    if (!(d > 0.0)) throw ConformalError(std::string("non-monotone ") + which + " welding angles");
    total += d;
    if (k < pts.size()) out[k] = out[k - 1] + d;
  }
  if (std::abs(total - kTwoPi) > 1e-6) throw ConformalError(std::string("non-monotone ") + which + " welding angles");
  return out;
}
}  // namespace detail

/// Welding from the two maps evaluated on the same (clockwise) polygon. Samples are
/// reported counterclockwise, i.e. in reverse vertex order.
inline WeldingMap extract_welding(const ZipperMap& interior, const ZipperMap& exterior, const BoundaryPolygon& poly) {
  const auto n = poly.size();
  if (interior.boundary_images().size() != n || exterior.boundary_images().size() != n)
    throw InvalidArgument("extract_welding: maps were not built on this polygon");
  std::vector<Complex> a(interior.boundary_images()), b(exterior.boundary_images());
  if (!is_clockwise(poly)) throw InvalidArgument("extract_welding expects a clockwise polygon");
  std::reverse(a.begin(), a.end());
  std::reverse(b.begin(), b.end());
  WeldingMap w;
  w.interior_angles = detail::unwrap_increasing(a, "interior");
  w.exterior_angles = detail::unwrap_increasing(b, "exterior");
  return w;
}

}  // namespace hbs

#endif  // HBS_CONFORMAL_HPP
