#ifndef HBS_RENDER_HPP
#define HBS_RENDER_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "hbs/field.hpp"
#include "hbs/io.hpp"

namespace hbs {

struct Rgb8 {
  std::vector<unsigned char> data;  // row-major RGB
  int width = 0;
  int height = 0;
};

inline constexpr unsigned char kRenderBackground = 128;

/// hue = arg B, value = |B| clipped at 1, full saturation; outside the disk is neutral gray.
inline Rgb8 render_field(const ComplexField& f, int scale = 1) {
  if (scale < 1) throw InvalidArgument("render scale must be >= 1");
  const auto& g = f.geometry();
  Rgb8 out{{}, g.width * scale, g.height * scale};
  out.data.assign(static_cast<std::size_t>(out.width) * out.height * 3, kRenderBackground);
  const auto& m = f.mask();
  for (int i = 0; i < g.height; ++i)
    for (int j = 0; j < g.width; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * g.width + j;
      if (!m.inside[k]) continue;
      const Complex b = f.values()[k];
      const double v = std::min(std::abs(b), 1.0);
      double h = std::arg(b) / kTwoPi;
      if (h < 0.0) h += 1.0;
      const double hh = h * 6.0;
      const int sector = static_cast<int>(hh) % 6;
      const double fr = hh - std::floor(hh);
      double r = 0, gg = 0, bb = 0;
      switch (sector) {
        case 0: r = 1; gg = fr; break;
        case 1: r = 1 - fr; gg = 1; break;
        case 2: gg = 1; bb = fr; break;
        case 3: gg = 1 - fr; bb = 1; break;
        case 4: r = fr; bb = 1; break;
        default: r = 1; bb = 1 - fr; break;
      }
      const unsigned char px[3] = {static_cast<unsigned char>(std::lround(255 * v * r)),
                                   static_cast<unsigned char>(std::lround(255 * v * gg)),
                                   static_cast<unsigned char>(std::lround(255 * v * bb))};
      for (int a = 0; a < scale; ++a)
        for (int c = 0; c < scale; ++c) {
          const std::size_t o = (static_cast<std::size_t>(i * scale + a) * out.width + (j * scale + c)) * 3;
          std::copy(px, px + 3, out.data.begin() + static_cast<std::ptrdiff_t>(o));
        }
    }
  return out;
}

inline void write_render(const ComplexField& f, const std::filesystem::path& path, int scale = 1) {
  const auto img = render_field(f, scale);
  detail::write_png_raw(path, img.width, img.height, 3, img.data);
}

}  // namespace hbs

#endif  // HBS_RENDER_HPP
