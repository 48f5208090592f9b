#ifndef HBS_TEST_SUPPORT_HPP
#define HBS_TEST_SUPPORT_HPP

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <unistd.h>

#include "hbs/hbs.hpp"

namespace hbs::test {

// Image from a membership predicate evaluated at pixel centers.
inline GrayImage paint(const std::function<bool(Complex)>& inside, GridGeometry g = GridGeometry::image()) {
  GrayImage img(g);
  for (int i = 0; i < g.height; ++i)
    for (int j = 0; j < g.width; ++j)
      if (inside(pixel_to_complex(g, i, j))) img.set(i, j, 1.0);
  return img;
}

// Radius and center in pixels, center relative to the image center.
inline GrayImage disk_image(double radius_px, double cx_px = 0.0, double cy_px = 0.0) {
  const double ppu = GridGeometry::image().pixels_per_unit;
  const Complex c(cx_px / ppu, cy_px / ppu);
  return paint([&](Complex z) { return std::abs(z - c) < radius_px / ppu; });
}

inline GrayImage ellipse_image(double a, double b, double rot = 0.0, Complex c = {}) {
  const Complex r = std::polar(1.0, -rot);
  return paint([&](Complex z) {
    const Complex w = (z - c) * r;
    return std::pow(w.real() / a, 2) + std::pow(w.imag() / b, 2) < 1.0;
  });
}

// Field with values f(z) on the masked hbs grid.
inline ComplexField field_of(const std::function<Complex(Complex)>& f, GridGeometry g = GridGeometry::hbs()) {
  ComplexField out(g);
  for (int i = 0; i < g.height; ++i)
    for (int j = 0; j < g.width; ++j)
      if (out.inside(i, j)) out.set(i, j, f(pixel_to_complex(g, i, j)));
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("hbs_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace hbs::test

#endif
