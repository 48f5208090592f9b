#ifndef HBS_TRANSFORM_HPP
#define HBS_TRANSFORM_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "hbs/field.hpp"
#include "hbs/harmonic.hpp"
#include "hbs/resample.hpp"
#include "hbs/shape.hpp"

namespace hbs {

struct RotationParam {
  double theta = 0.0;
};

inline AffineParams pre_stn_matrix(const SimilarityParams& p) {
  const double c = p.k * std::cos(p.theta), s = p.k * std::sin(p.theta);
  return {{c, s, p.dx, -s, c, p.dy}};
}

/// Similarity resampling; a target point t reads the source at k e^{i theta} t + (dx - i dy).
inline GrayImage pre_stn_transform(const GrayImage& image, const SimilarityParams& p) {
  if (!(p.k > 0.0) || !std::isfinite(p.k)) throw InvalidArgument("similarity scale must be positive");
  return affine_sample(image, pre_stn_matrix(p));
}

inline ComplexField post_stn_rotate(const ComplexField& field, const RotationParam& p, bool phase_correct = true) {
  return rotate_field(field, p.theta, phase_correct);
}

inline double loss_hbs(const ComplexField& predicted, const ComplexField& reference, const RotationParam& p) {
  require_same_geometry(predicted, reference);
  return hbs_distance(predicted, post_stn_rotate(reference, p));
}

/// Rotation of `reference` that best matches `predicted`.
inline RotationParam optimal_rotation(const ComplexField& predicted, const ComplexField& reference) {
  return {align_rotation(reference, predicted).theta};
}

inline double loss_post(const ComplexField& field) { return hbs_distance(normalize_rotation(field).field, field); }

inline constexpr double kDefaultLambdaPost = 0.1;

inline double loss_total(const ComplexField& predicted, const ComplexField& reference,
                         double lambda_post = kDefaultLambdaPost) {
  if (!(lambda_post >= 0.0)) throw InvalidArgument("lambda_post must be nonnegative");
  const double hbs_term = loss_hbs(predicted, reference, optimal_rotation(predicted, reference));
  if (lambda_post == 0.0) return hbs_term;
  return hbs_term + lambda_post * loss_post(predicted);
}

inline double loss_combined(double base_loss, const GrayImage& mask, const ComplexField& reference_hbs, double lambda_hbs,
                            const HbsConfig& config = {}) {
  if (!(lambda_hbs >= 0.0)) throw InvalidArgument("lambda_hbs must be nonnegative");
  const auto v = validate_shape(mask);
  if (!v.ok()) throw ShapeError(v, "loss_combined requires a simply connected mask");
  if (lambda_hbs == 0.0) return base_loss;
  HbsConfig c = config;
  c.geometry = reference_hbs.geometry();
  const auto predicted = compute_hbs(mask, c).hbs;
  return base_loss + lambda_hbs * loss_hbs(predicted, reference_hbs, optimal_rotation(predicted, reference_hbs));
}

// ---------------------------------------------------------------------------
// Softening

/// Gaussian variates from a fully specified engine, so output does not depend on
/// the standard library's distribution implementation.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct SoftenParams {
  double a = 0.1;
  double b = 0.1;
  double epsilon = 1e-3;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(a >= 0.0 && a <= 0.2)) throw InvalidArgument("soften parameter a must lie in [0, 0.2]");
    if (!(b >= 0.0 && b <= 0.2)) throw InvalidArgument("soften parameter b must lie in [0, 0.2]");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw InvalidArgument("soften epsilon must lie in (0, 0.5)");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InvalidArgument("noise sigma must be nonnegative");
  }
};

/// Noisy near-binary image whose 0.5-superlevel set is the input foreground.
inline GrayImage soften(const GrayImage& image, const SoftenParams& p) {
  p.validate();
  NormalSource noise(p.seed);
  std::vector<double> v(image.values().size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double n = p.noise_sigma * noise.normal();
    const double x = image.values()[k] >= 0.5 ? std::max(1.0 - p.a + n, 0.5) : std::min(p.b + n, 0.5 - p.epsilon);
    v[k] = std::clamp(x, 0.0, 1.0);
  }
  return GrayImage(image.geometry(), std::move(v));
}

}  // namespace hbs

#endif  // HBS_TRANSFORM_HPP
