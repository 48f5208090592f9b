#ifndef HBS_HARMONIC_HPP
#define HBS_HARMONIC_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hbs/conformal.hpp"
#include "hbs/field.hpp"
#include "hbs/resample.hpp"
#include "hbs/shape.hpp"

namespace hbs {

/// Circle map sampled on the uniform grid t_m = 2 pi m / M; values are unwrapped.
struct CircleMapSamples {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double angle(std::size_t m) const { return kTwoPi * static_cast<double>(m) / static_cast<double>(values.size()); }

  void validate() const {
    if (values.size() < 4) throw InvalidArgument("circle map needs at least 4 samples");
    for (std::size_t m = 0; m < values.size(); ++m) {
      const double next = m + 1 < values.size() ? values[m + 1] : values[0] + kTwoPi;
      if (!std::isfinite(values[m]) || !(next > values[m])) throw InvalidArgument("circle map is not strictly increasing");
    }
  }

  static CircleMapSamples identity(std::size_t M) {
    CircleMapSamples g;
    g.values.resize(M);
    for (std::size_t m = 0; m < M; ++m) g.values[m] = g.angle(m);
    return g;
  }
};

/// Periodic monotone piecewise-cubic interpolant through (x_k, y_k) with
/// x_{k+n} = x_k + 2 pi, y_{k+n} = y_k + 2 pi.
class MonotoneCircleInterpolant {
 public:
  MonotoneCircleInterpolant(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const auto n = x_.size();
    if (n < 2 || y_.size() != n) throw InvalidArgument("interpolant needs matching node lists of length >= 2");
    for (std::size_t k = 0; k < n; ++k) {
      if (!(next_x(k) > x_[k]) || !(next_y(k) > y_[k])) throw ConformalError("non-monotone welding samples");
    }
    slope_.resize(n);
    for (std::size_t k = 0; k < n; ++k) slope_[k] = (next_y(k) - y_[k]) / (next_x(k) - x_[k]);
    d_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t km = (k + n - 1) % n;
      const double hm = next_x(km) - x_[km], h = next_x(k) - x_[k];
      const double sm = slope_[km], s = slope_[k];
      double d = (h * sm + hm * s) / (hm + h);
      d = std::clamp(d, 0.0, 3.0 * std::min(sm, s));
      d_[k] = d;
    }
  }

  double operator()(double t) const {
    const double period = std::floor((t - x_[0]) / kTwoPi);
    const double tr = t - period * kTwoPi;
    auto it = std::upper_bound(x_.begin(), x_.end(), tr);
    const std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = next_x(k) - x_[k];
    const double s = (tr - x_[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    const double y = h00 * y_[k] + h10 * h * d_[k] + h01 * next_y(k) + h11 * h * d_[(k + 1) % x_.size()];
    return y + period * kTwoPi;
  }

 private:
  double next_x(std::size_t k) const { return k + 1 < x_.size() ? x_[k + 1] : x_[0] + kTwoPi; }
  double next_y(std::size_t k) const { return k + 1 < y_.size() ? y_[k + 1] : y_[0] + kTwoPi; }

  std::vector<double> x_, y_, slope_, d_;
};

/// g(t) = alpha(beta = t + shift) on M uniform nodes.
inline CircleMapSamples uniformize_welding(const WeldingMap& w, int M, double shift = 0.0) {
  if (M < 4) throw InvalidArgument("uniformize_welding needs M >= 4");
  if (w.exterior_angles.size() != w.interior_angles.size() || w.sample_count() < 2)
    throw InvalidArgument("welding angle lists must have equal length >= 2");
  MonotoneCircleInterpolant f(w.exterior_angles, w.interior_angles);
  CircleMapSamples g;
  g.values.resize(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) g.values[m] = f(kTwoPi * m / M + shift);
  g.validate();
  return g;
}

namespace detail {
/// Trapezoid-rule Poisson sum of e^{i g}; aliasing error grows like |z|^M.
inline Complex poisson_trapezoid(const CircleMapSamples& g, Complex z) {
  const double r = std::abs(z);
  const double theta = std::arg(z);
  Complex s{};
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double kernel = (1.0 - r * r) / (1.0 - 2.0 * r * std::cos(theta - g.angle(m)) + r * r);
    s += kernel * std::polar(1.0, g.values[m]);
  }
  return s / static_cast<double>(g.size());
}
}  // namespace detail

/// Harmonic extension of the trigonometric interpolant of e^{i g(t_m)}:
/// H(z) = sum_{n>=0} c_n z^n + sum_{n>=1} c_{-n} conj(z)^n.
class HarmonicExtension {
 public:
  explicit HarmonicExtension(const CircleMapSamples& g) {
    g.validate();
    const std::size_t M = g.size();
    const std::size_t K = M / 2;
    std::vector<Complex> f(M), twiddle(M);
    for (std::size_t m = 0; m < M; ++m) {
      f[m] = std::polar(1.0, g.values[m]);
      twiddle[m] = std::polar(1.0, -g.angle(m));
    }
    auto coefficient = [&](long n) {
      Complex s{};
      const long Ml = static_cast<long>(M);
      for (std::size_t m = 0; m < M; ++m) s += f[m] * twiddle[static_cast<std::size_t>(((n * static_cast<long>(m)) % Ml + Ml) % Ml)];
      return s / static_cast<double>(M);
    };
    pos_.resize(K + 1);
    neg_.assign(K + 1, Complex{});
    for (std::size_t n = 0; n <= K; ++n) pos_[n] = coefficient(static_cast<long>(n));
    for (std::size_t n = 1; n <= K; ++n) neg_[n] = coefficient(-static_cast<long>(n));
    if (M % 2 == 0) {
      // Nyquist mode shared between both halves
      pos_[K] *= 0.5;
      neg_[K] = pos_[K];
    }
  }

  Complex operator()(Complex z) const {
    const std::size_t K = pos_.size() - 1;
    Complex p = pos_[K];
    for (std::size_t n = K; n-- > 0;) p = p * z + pos_[n];
    const Complex zb = std::conj(z);
    Complex q = neg_[K];
    for (std::size_t n = K - 1; n >= 1; --n) q = q * zb + neg_[n];
    return p + q * zb;
  }

  /// Extension of t -> g(t + theta), i.e. z -> H(e^{i theta} z).
  HarmonicExtension rotated(double theta) const {
    HarmonicExtension h = *this;
    for (std::size_t n = 0; n < pos_.size(); ++n) {
      h.pos_[n] *= std::polar(1.0, theta * static_cast<double>(n));
      h.neg_[n] *= std::polar(1.0, -theta * static_cast<double>(n));
    }
    return h;
  }

  const std::vector<Complex>& positive_coefficients() const { return pos_; }
  const std::vector<Complex>& negative_coefficients() const { return neg_; }

 private:
  std::vector<Complex> pos_, neg_;
};

/// Poisson integral of e^{i g} at an interior point: the trapezoid sum where its
/// aliasing term |z|^M is below roundoff, the interpolant series closer to the rim.
inline Complex poisson_extend(const CircleMapSamples& g, Complex z) {
  const double r = std::abs(z);
  if (!(r < 1.0)) throw InvalidArgument("poisson_extend requires |z| < 1");
  if (std::pow(r, static_cast<double>(g.size())) < 1e-17) return detail::poisson_trapezoid(g, z);
  return HarmonicExtension(g)(z);
}

inline constexpr double kMuClamp = 0.999;

/// Beltrami coefficient of `h` on the masked grid by finite differences; `clamped`
/// receives the number of pixels whose |mu| was clamped to 0.999.
template <class Fn>
ComplexField beltrami_from_function(const GridGeometry& g, Fn&& h, std::size_t* clamped = nullptr) {
  ComplexField out(g);
  const auto& mask = out.mask();
  std::vector<Complex> H(g.size());
  std::vector<unsigned char> stencil(g.size(), 0);
  for (int i = 0; i < g.height; ++i)
    for (int j = 0; j < g.width; ++j) {
      const auto k = g.index(i, j);
      if (!mask.inside[k]) continue;
      const Complex z = pixel_to_complex(g, i, j);
      H[k] = h(z);
      stencil[k] = std::abs(z) < 1.0 - 1e-6;
    }
  auto ok = [&](int i, int j) { return g.contains(i, j) && stencil[g.index(i, j)]; };
  const double step = g.spacing();
  // derivative along (di, dj) in pixel index space
  auto diff = [&](int i, int j, int di, int dj) -> Complex {
    auto at = [&](int s) { return H[g.index(i + s * di, j + s * dj)]; };
    if (ok(i + di, j + dj) && ok(i - di, j - dj)) return (at(1) - at(-1)) / (2.0 * step);
    if (ok(i + di, j + dj) && ok(i + 2 * di, j + 2 * dj)) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * step);
    if (ok(i - di, j - dj) && ok(i - 2 * di, j - 2 * dj)) return (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * step);
    if (ok(i + di, j + dj)) return (at(1) - at(0)) / step;
    if (ok(i - di, j - dj)) return (at(0) - at(-1)) / step;
    throw ConformalError("no finite-difference stencil available at a masked pixel");
  };
  std::size_t nclamped = 0;
  for (int i = 0; i < g.height; ++i)
    for (int j = 0; j < g.width; ++j) {
      if (!mask(i, j)) continue;
      const Complex hx = diff(i, j, 0, 1);
      const Complex hy = -diff(i, j, 1, 0);  // rows grow downward
      const Complex hz = 0.5 * (hx - Complex(0, 1) * hy);
      const Complex hzb = 0.5 * (hx + Complex(0, 1) * hy);
      if (std::abs(hz) < 1e-12) throw ConformalError("degenerate harmonic extension (|H_z| < 1e-12)");
      Complex mu = hzb / hz;
      if (!std::isfinite(mu.real()) || !std::isfinite(mu.imag())) throw ConformalError("non-finite Beltrami coefficient");
      if (std::abs(mu) > kMuClamp) {
        mu *= kMuClamp / std::abs(mu);
        ++nclamped;
      }
      out.set(i, j, mu);
    }
  if (clamped) *clamped = nclamped;
  return out;
}

inline ComplexField beltrami_on_grid(const CircleMapSamples& g, const GridGeometry& geometry,
                                     std::size_t* clamped = nullptr) {
  const HarmonicExtension h(g);
  return beltrami_from_function(geometry, h, clamped);
}

inline double dilation(Complex mu) {
  const double a = std::abs(mu);
  if (!(a < 1.0)) throw InvalidArgument("dilation requires |mu| < 1");
  return (1.0 + a) / (1.0 - a);
}

struct RotationNormalization {
  ComplexField field;
  double theta = 0.0;
  bool degenerate = false;
};

namespace detail {
inline bool condition3_holds(Complex integral_over_z) {
  const double a = std::arg(integral_over_z);
  return a >= 0.0 && a < kPi;
}
inline double wrap_angle(double a) {
  a = std::remainder(a, kTwoPi);
  return a <= -kPi ? a + kTwoPi : a;
}
}  // namespace detail

/// Chooses theta so arg int B = 0 and arg int B/z in [0, pi) after the rotation law.
inline RotationNormalization normalize_rotation(const ComplexField& field) {
  const Complex i1 = field.integral();
  if (std::abs(i1) < 1e-9) return {field, 0.0, true};
  const Complex i2 = field.integral_over_z();
  double theta = 0.5 * std::arg(i1);
  if (!detail::condition3_holds(std::polar(1.0, -theta) * i2)) theta += kPi;
  theta = detail::wrap_angle(theta);
  if (std::abs(theta) < 1e-9) return {field, 0.0, false};
  ComplexField out = rotate_field(field, theta);
  for (int it = 0; it < 8; ++it) {
    const double r = std::arg(out.integral());
    if (std::abs(r) < 1e-12) break;
    theta += 0.5 * r;
    out = rotate_field(field, theta);
  }
  if (!detail::condition3_holds(out.integral_over_z())) {
    theta += kPi;
    out = rotate_field(field, theta);
  }
  return {std::move(out), detail::wrap_angle(theta), false};
}

inline void require_same_geometry(const ComplexField& a, const ComplexField& b) {
  if (!(a.geometry() == b.geometry())) throw InvalidArgument("field geometry mismatch");
}

/// Mean squared difference over the disk mask.
inline double hbs_distance(const ComplexField& a, const ComplexField& b) {
  require_same_geometry(a, b);
  const auto& m = a.mask();
  if (m.inside_count == 0) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < m.inside.size(); ++k)
    if (m.inside[k]) s += std::norm(a.values()[k] - b.values()[k]);
  return s / static_cast<double>(m.inside_count);
}

struct Alignment {
  ComplexField field;
  double theta = 0.0;
  double distance = 0.0;
};

/// Rotation of `b` (under the field rotation law) closest to `reference`.
inline Alignment align_rotation(const ComplexField& b, const ComplexField& reference, bool phase_correct = true) {
  require_same_geometry(b, reference);
  auto cost = [&](double t) { return hbs_distance(rotate_field(b, t, phase_correct), reference); };
  constexpr int kSteps = 360;
  const double step = kTwoPi / kSteps;
  double best_t = 0.0, best = cost(0.0);
  for (int s = 1; s < kSteps; ++s) {
    const double t = s * step, c = cost(t);
    if (c < best) {
      best = c;
      best_t = t;
    }
  }
  // golden-section refinement on the bracketing interval
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = best_t - step, hi = best_t + step;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = cost(x1), f2 = cost(x2);
  while (hi - lo > 1e-7) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = cost(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = cost(x2);
    }
  }
  const double t = 0.5 * (lo + hi), ft = cost(t);
  if (ft < best) {
    best = ft;
    best_t = t;
  }
  best_t = detail::wrap_angle(best_t);
  return {rotate_field(b, best_t, phase_correct), best_t, best};
}

// ---------------------------------------------------------------------------
// End-to-end pipeline

struct HbsConfig {
  int boundary_points = 400;
  int quad_nodes = 1024;
  // Gaussian smoothing of the traced contour along arc length, in pixels; 0 disables.
  double smoothing_px = 5.0;
  GridGeometry geometry = GridGeometry::hbs();
};

struct ConditionResiduals {
  double interior_integral = 0.0;  // |sum Phi1^{-1}(z_k) |dz_k||
  double arg_integral = 0.0;       // arg int B
  double arg_integral_over_z = 0.0;  // arg int B / z
};

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct HbsResult {
  ComplexField hbs;
  double rotation_applied = 0.0;
  ConditionResiduals residuals;
  std::vector<StageTiming> timing;
  std::size_t clamped_pixels = 0;
  bool degenerate_rotation = false;
  WeldingMap welding;

  double total_ms() const {
    double s = 0.0;
    for (const auto& t : timing) s += t.ms;
    return s;
  }
};

/// Periodic Gaussian smoothing of a closed polygon along arc length.
inline BoundaryPolygon smooth_boundary(const BoundaryPolygon& p, double sigma) {
  if (!(sigma > 0.0)) return p;
  const double len = perimeter(p);
  const int n = std::max(64, static_cast<int>(std::ceil(len / (0.25 * sigma))));
  const auto dense = resample_boundary(p, n);
  const double ds = len / n;
  const int radius = static_cast<int>(std::ceil(4.0 * sigma / ds));
  std::vector<double> w(2 * radius + 1);
  double wsum = 0.0;
  for (int k = -radius; k <= radius; ++k) wsum += w[k + radius] = std::exp(-0.5 * (k * ds / sigma) * (k * ds / sigma));
  BoundaryPolygon out;
  out.vertices.resize(n);
  for (int i = 0; i < n; ++i) {
    Complex s{};
    for (int k = -radius; k <= radius; ++k) s += w[k + radius] * dense[((i + k) % n + n) % n];
    out.vertices[i] = s / wsum;
  }
  return out;
}

namespace detail {
class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out), last_(std::chrono::steady_clock::now()) {}
  void mark(const char* stage) {
    const auto now = std::chrono::steady_clock::now();
    out_.push_back({stage, std::chrono::duration<double, std::milli>(now - last_).count()});
    last_ = now;
  }

 private:
  std::vector<StageTiming>& out_;
  std::chrono::steady_clock::time_point last_;
};
}  // namespace detail

/// Welding of a clockwise polygon (after resampling to `points` vertices).
inline WeldingMap welding_of(const BoundaryPolygon& poly, double* interior_residual = nullptr) {
  const auto interior = normalize_interior(zipper_interior(poly), poly);
  if (interior_residual) *interior_residual = std::abs(interior_condition_integral(interior, poly));
  const auto exterior = zipper_exterior(poly);
  return extract_welding(interior, exterior, poly);
}

inline HbsResult compute_hbs(const GrayImage& image, const HbsConfig& config = {}) {
  if (config.boundary_points < 8) throw InvalidArgument("boundary_points must be at least 8");
  if (config.quad_nodes < 4) throw InvalidArgument("quad_nodes must be at least 4");
  HbsResult r;
  detail::StageClock clock(r.timing);
  const auto traced = trace_boundary(image);
  clock.mark("trace");
  const double sigma_units = config.smoothing_px / image.geometry().pixels_per_unit;
  auto poly = resample_boundary(smooth_boundary(traced, sigma_units), config.boundary_points);
  if (!is_clockwise(poly)) poly = reversed(std::move(poly));
  clock.mark("resample");
  const auto interior = normalize_interior(zipper_interior(poly), poly);
  r.residuals.interior_integral = std::abs(interior_condition_integral(interior, poly));
  clock.mark("zipper_interior");
  const auto exterior = zipper_exterior(poly);
  clock.mark("zipper_exterior");
  r.welding = extract_welding(interior, exterior, poly);
  const auto samples = uniformize_welding(r.welding, config.quad_nodes);
  const HarmonicExtension h(samples);
  clock.mark("welding");

  // Rotation is applied to the extension itself, so no field resampling is needed.
  ComplexField b = beltrami_from_function(config.geometry, h, &r.clamped_pixels);
  const Complex i1 = b.integral();
  double theta = 0.0;
  if (std::abs(i1) < 1e-9) {
    r.degenerate_rotation = true;
  } else {
    theta = 0.5 * std::arg(i1);
    if (!detail::condition3_holds(std::polar(1.0, -theta) * b.integral_over_z())) theta += kPi;
    // Newton-like refinement on arg int B; keeps the best iterate since near-circular
    // shapes give a tiny, noisy integral.
    double best_theta = theta, best_res = kPi;
    ComplexField best = b;
    for (int it = 0; it < 6; ++it) {
      b = beltrami_from_function(config.geometry, h.rotated(theta), &r.clamped_pixels);
      const double res = std::arg(b.integral());
      if (std::abs(res) < best_res) {
        best_res = std::abs(res);
        best_theta = theta;
        best = b;
      }
      if (best_res < 1e-10) break;
      theta += 0.5 * res;
    }
    theta = best_theta;
    b = std::move(best);
    if (!detail::condition3_holds(b.integral_over_z())) {
      theta += kPi;
      b = beltrami_from_function(config.geometry, h.rotated(theta), &r.clamped_pixels);
    }
  }
  clock.mark("beltrami");
  r.rotation_applied = detail::wrap_angle(theta);
  r.residuals.arg_integral = std::arg(b.integral());
  r.residuals.arg_integral_over_z = std::arg(b.integral_over_z());
  r.hbs = std::move(b);
  return r;
}

}  // namespace hbs

#endif  // HBS_HARMONIC_HPP
