#ifndef HBS_FIELD_HPP
#define HBS_FIELD_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hbs {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Error hierarchy. Every failure surfaced by the library derives from hbs::Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidArgument : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct ConformalError : Error {
  using Error::Error;
};
struct SolverError : Error {
  using Error::Error;
};

/// Pixel grid embedded in the complex plane. Pixel (row i, col j) has center
/// x = (j + 0.5 - center_x) / ppu, y = (center_y - (i + 0.5)) / ppu (y up).
struct GridGeometry {
  int width = 256;
  int height = 256;
  double pixels_per_unit = 50.0;
  double center_x = 128.0;
  double center_y = 128.0;

  GridGeometry() = default;
  GridGeometry(int w, int h, double ppu = 50.0)
      : width(w), height(h), pixels_per_unit(ppu), center_x(w / 2.0), center_y(h / 2.0) {
    validate();
  }
  GridGeometry(int w, int h, double ppu, double cx, double cy)
      : width(w), height(h), pixels_per_unit(ppu), center_x(cx), center_y(cy) {
    validate();
  }

  static GridGeometry image() { return {256, 256, 50.0}; }
  static GridGeometry hbs() { return {128, 128, 50.0}; }

  void validate() const {
    if (width <= 0 || height <= 0) throw InvalidArgument("grid dimensions must be positive");
    if (!(pixels_per_unit > 0.0) || !std::isfinite(pixels_per_unit))
      throw InvalidArgument("pixels_per_unit must be positive");
    if (!std::isfinite(center_x) || !std::isfinite(center_y))
      throw InvalidArgument("grid center must be finite");
  }

  std::size_t size() const { return static_cast<std::size_t>(width) * height; }
  double spacing() const { return 1.0 / pixels_per_unit; }
  double pixel_area() const { return spacing() * spacing(); }
  bool contains(int row, int col) const { return row >= 0 && row < height && col >= 0 && col < width; }
  std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * width + col; }

  // Fractional pixel coordinates (col, row) of a complex point; pixel centers are integers.
  double col_of(Complex z) const { return z.real() * pixels_per_unit + center_x - 0.5; }
  double row_of(Complex z) const { return center_y - z.imag() * pixels_per_unit - 0.5; }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

inline Complex pixel_to_complex(const GridGeometry& g, int row, int col) {
  if (!g.contains(row, col))
    throw InvalidArgument("pixel (" + std::to_string(row) + "," + std::to_string(col) + ") outside grid");
  return {(col + 0.5 - g.center_x) / g.pixels_per_unit, (g.center_y - (row + 0.5)) / g.pixels_per_unit};
}

/// Nearest pixel (row, col) to a complex point; may lie outside the grid.
inline std::pair<int, int> complex_to_pixel(const GridGeometry& g, Complex z) {
  return {static_cast<int>(std::lround(g.row_of(z))), static_cast<int>(std::lround(g.col_of(z)))};
}

/// Grayscale image with values in [0,1]; foreground is {value >= 0.5}.
class GrayImage {
 public:
  GrayImage() : GrayImage(GridGeometry::image()) {}
  explicit GrayImage(GridGeometry geometry, double fill = 0.0)
      : geometry_(geometry), values_(geometry.size(), fill) {
    geometry_.validate();
    if (fill < 0.0 || fill > 1.0) throw InvalidArgument("image fill value outside [0,1]");
  }
  GrayImage(GridGeometry geometry, std::vector<double> values) : geometry_(geometry), values_(std::move(values)) {
    geometry_.validate();
    if (values_.size() != geometry_.size()) throw InvalidArgument("image value count does not match geometry");
    for (double v : values_)
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("image value outside [0,1]");
  }

  const GridGeometry& geometry() const { return geometry_; }
  int width() const { return geometry_.width; }
  int height() const { return geometry_.height; }
  const std::vector<double>& values() const { return values_; }

  double operator()(int row, int col) const { return values_[geometry_.index(row, col)]; }
  double at(int row, int col) const {
    if (!geometry_.contains(row, col)) throw InvalidArgument("pixel outside image");
    return (*this)(row, col);
  }
  void set(int row, int col, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("image value outside [0,1]");
    values_[geometry_.index(row, col)] = v;
  }
  bool foreground(int row, int col) const { return (*this)(row, col) >= 0.5; }

  std::size_t foreground_count() const {
    std::size_t n = 0;
    for (double v : values_) n += v >= 0.5;
    return n;
  }

  /// Binary copy: 1 on foreground, 0 elsewhere.
  GrayImage thresholded() const {
    GrayImage out(geometry_);
    for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] = values_[k] >= 0.5 ? 1.0 : 0.0;
    return out;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
};

struct DiskMask {
  GridGeometry geometry;
  std::vector<unsigned char> inside;
  std::size_t inside_count = 0;

  bool operator()(int row, int col) const { return inside[geometry.index(row, col)] != 0; }
};

inline DiskMask make_disk_mask(const GridGeometry& g) {
  g.validate();
  DiskMask m{g, std::vector<unsigned char>(g.size(), 0), 0};
  for (int i = 0; i < g.height; ++i)
    for (int j = 0; j < g.width; ++j)
      if (std::norm(pixel_to_complex(g, i, j)) < 1.0) {
        m.inside[g.index(i, j)] = 1;
        ++m.inside_count;
      }
  return m;
}

/// Complex values on a grid, identically zero outside the unit disk.
class ComplexField {
 public:
  ComplexField() : ComplexField(GridGeometry::hbs()) {}
  explicit ComplexField(GridGeometry geometry)
      : mask_(make_disk_mask(geometry)), values_(geometry.size(), Complex{}) {}
  ComplexField(GridGeometry geometry, std::vector<Complex> values)
      : mask_(make_disk_mask(geometry)), values_(std::move(values)) {
    if (values_.size() != geometry.size()) throw InvalidArgument("field value count does not match geometry");
    apply_mask();
  }

  const GridGeometry& geometry() const { return mask_.geometry; }
  const DiskMask& mask() const { return mask_; }
  bool inside(int row, int col) const { return mask_(row, col); }
  const std::vector<Complex>& values() const { return values_; }

  Complex operator()(int row, int col) const { return values_[mask_.geometry.index(row, col)]; }
  /// Writes are dropped outside the disk.
  void set(int row, int col, Complex v) {
    const auto k = mask_.geometry.index(row, col);
    values_[k] = mask_.inside[k] ? v : Complex{};
  }

  double sup_norm() const {
    double s = 0.0;
    for (const auto& v : values_) s = std::max(s, std::abs(v));
    return s;
  }
  double mean_abs() const {
    double s = 0.0;
    for (const auto& v : values_) s += std::abs(v);
    return mask_.inside_count ? s / static_cast<double>(mask_.inside_count) : 0.0;
  }

  // Masked pixel sums times pixel area.
  Complex integral() const {
    Complex s{};
    for (const auto& v : values_) s += v;
    return s * geometry().pixel_area();
  }
  Complex integral_over_z() const {
    Complex s{};
    const auto& g = geometry();
    for (int i = 0; i < g.height; ++i)
      for (int j = 0; j < g.width; ++j)
        if (inside(i, j)) s += (*this)(i, j) / pixel_to_complex(g, i, j);
    return s * g.pixel_area();
  }

  friend bool operator==(const ComplexField& a, const ComplexField& b) {
    return a.geometry() == b.geometry() && a.values_ == b.values_;
  }

 private:
  void apply_mask() {
    for (std::size_t k = 0; k < values_.size(); ++k)
      if (!mask_.inside[k]) values_[k] = Complex{};
  }

  DiskMask mask_;
  std::vector<Complex> values_;
};

/// Bilinear sample of a real plane at fractional pixel (row, col); zero outside.
template <class Get>
double bilinear(int width, int height, double row, double col, Get&& get) {
  // Snap coordinates within 1e-9 of a pixel center so integer shifts are exact.
  if (std::abs(row - std::round(row)) < 1e-9) row = std::round(row);
  if (std::abs(col - std::round(col)) < 1e-9) col = std::round(col);
  const double r0 = std::floor(row), c0 = std::floor(col);
  const double fr = row - r0, fc = col - c0;
  const int i0 = static_cast<int>(r0), j0 = static_cast<int>(c0);
  auto value = [&](int i, int j) -> double {
    if (i < 0 || i >= height || j < 0 || j >= width) return 0.0;
    return get(i, j);
  };
  double s = 0.0;
  if ((1 - fr) * (1 - fc) != 0.0) s += (1 - fr) * (1 - fc) * value(i0, j0);
  if ((1 - fr) * fc != 0.0) s += (1 - fr) * fc * value(i0, j0 + 1);
  if (fr * (1 - fc) != 0.0) s += fr * (1 - fc) * value(i0 + 1, j0);
  if (fr * fc != 0.0) s += fr * fc * value(i0 + 1, j0 + 1);
  return s;
}

}  // namespace hbs

#endif  // HBS_FIELD_HPP
