#ifndef HBS_RESAMPLE_HPP
#define HBS_RESAMPLE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "hbs/field.hpp"

namespace hbs {

/// 2x3 matrix [phi1 phi2 phi3; phi4 phi5 phi6] mapping target to source coordinates.
/// Coordinates are (u, v) = (x, -y) in complex units: image-style, v pointing down.
struct AffineParams {
  std::array<double, 6> phi{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  static AffineParams identity() { return {}; }
  static AffineParams rotation(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {{c, s, 0.0, -s, c, 0.0}};
  }

  double determinant() const { return phi[0] * phi[4] - phi[1] * phi[3]; }
  void validate() const {
    for (double v : phi)
      if (!std::isfinite(v)) throw InvalidArgument("affine parameters must be finite");
  }

  Complex source_of(Complex target) const {
    const double u = target.real(), v = -target.imag();
    const double su = phi[0] * u + phi[1] * v + phi[2];
    const double sv = phi[3] * u + phi[4] * v + phi[5];
    return {su, -sv};
  }
};

namespace detail {
template <class Plane>
std::vector<double> sample_plane(const GridGeometry& g, const AffineParams& p, Plane&& plane) {
  std::vector<double> out(g.size());
  for (int i = 0; i < g.height; ++i)
    for (int j = 0; j < g.width; ++j) {
      const Complex s = p.source_of(pixel_to_complex(g, i, j));
      out[g.index(i, j)] = bilinear(g.width, g.height, g.row_of(s), g.col_of(s), plane);
    }
  return out;
}
}  // namespace detail

/// Source-from-target bilinear resampling with zero padding.
inline GrayImage affine_sample(const GrayImage& src, const AffineParams& p) {
  p.validate();
  auto v = detail::sample_plane(src.geometry(), p, [&](int i, int j) { return src(i, j); });
  for (double& x : v) x = std::clamp(x, 0.0, 1.0);
  return GrayImage(src.geometry(), std::move(v));
}

/// Resamples real and imaginary planes independently; the disk mask is re-applied.
inline ComplexField affine_sample(const ComplexField& src, const AffineParams& p) {
  p.validate();
  const auto& g = src.geometry();
  std::vector<Complex> out(g.size());
  for (int i = 0; i < g.height; ++i)
    for (int j = 0; j < g.width; ++j) {
      if (!src.inside(i, j)) continue;
      const Complex s = p.source_of(pixel_to_complex(g, i, j));
      const double r = g.row_of(s), c = g.col_of(s);
      const double re = bilinear(g.width, g.height, r, c, [&](int a, int b) { return src(a, b).real(); });
      const double im = bilinear(g.width, g.height, r, c, [&](int a, int b) { return src(a, b).imag(); });
      out[g.index(i, j)] = {re, im};
    }
  return ComplexField(g, std::move(out));
}

/// B -> B(e^{i theta} z) e^{-2 i theta}; without phase correction only the domain rotates.
inline ComplexField rotate_field(const ComplexField& field, double theta, bool phase_correct = true) {
  if (!std::isfinite(theta)) throw InvalidArgument("rotation angle must be finite");
  if (theta == 0.0) return field;
  ComplexField out = affine_sample(field, AffineParams::rotation(theta));
  if (!phase_correct) return out;
  const Complex phase = std::polar(1.0, -2.0 * theta);
  std::vector<Complex> v(out.values());
  for (auto& x : v) x *= phase;
  return ComplexField(field.geometry(), std::move(v));
}

}  // namespace hbs

#endif  // HBS_RESAMPLE_HPP
