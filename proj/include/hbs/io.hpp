#ifndef HBS_IO_HPP
#define HBS_IO_HPP

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "hbs/field.hpp"

namespace hbs {

namespace detail {

inline std::string extension_of(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

inline std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

inline void write_all(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

// Little-endian scalar packing for the .hbs format.
template <class T>
void put_le(std::vector<unsigned char>& buf, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> raw;
  std::memcpy(raw.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
  buf.insert(buf.end(), raw.begin(), raw.end());
}

template <class T>
T get_le(const std::vector<unsigned char>& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw FormatError("truncated .hbs file");
  std::array<unsigned char, sizeof(T)> raw;
  std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(pos), sizeof(T), raw.begin());
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
  pos += sizeof(T);
  T value;
  std::memcpy(&value, raw.data(), sizeof(T));
  return value;
}

inline std::uint16_t quantize16(double v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

// ---- PGM (P5) ----

inline GrayImage read_pgm(const std::filesystem::path& path, const GridGeometry* like) {
  const auto bytes = read_all(path);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw FormatError("corrupt PGM header: " + path.string());
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > (1L << 30)) throw FormatError("PGM header value too large");
    }
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw FormatError("not a binary PGM (P5): " + path.string());
  pos = 2;
  const long w = read_int(), h = read_int(), maxval = read_int();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw FormatError("unsupported PGM dimensions/maxval");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("corrupt PGM header");
  ++pos;
  const std::size_t bps = maxval > 255 ? 2 : 1;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - pos < n * bps) throw FormatError("truncated PGM payload: " + path.string());
  GridGeometry g = like ? *like : GridGeometry(static_cast<int>(w), static_cast<int>(h));
  if (g.width != w || g.height != h) g = GridGeometry(static_cast<int>(w), static_cast<int>(h), g.pixels_per_unit);
  std::vector<double> values(n);
  for (std::size_t k = 0; k < n; ++k) {
    unsigned v = bps == 2 ? (unsigned(bytes[pos + 2 * k]) << 8) | bytes[pos + 2 * k + 1] : bytes[pos + k];
    if (v > static_cast<unsigned>(maxval)) throw FormatError("PGM sample exceeds maxval");
    values[k] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return GrayImage(g, std::move(values));
}

inline void write_pgm(const GrayImage& img, const std::filesystem::path& path, int bits) {
  std::ostringstream header;
  const unsigned maxval = bits == 16 ? 65535u : 255u;
  header << "P5\n" << img.width() << " " << img.height() << "\n" << maxval << "\n";
  const auto h = header.str();
  std::vector<unsigned char> bytes(h.begin(), h.end());
  for (double v : img.values()) {
    if (bits == 16) {
      const auto q = quantize16(v);
      bytes.push_back(static_cast<unsigned char>(q >> 8));
      bytes.push_back(static_cast<unsigned char>(q & 0xff));
    } else {
      bytes.push_back(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    }
  }
  write_all(path, bytes);
}

// ---- PNG via libpng ----

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};
struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteGuard() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};
struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

inline GrayImage read_png(const std::filesystem::path& path, const GridGeometry* like) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8)) throw FormatError("not a PNG: " + path.string());
  PngReadGuard guard;
  guard.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!guard.png) throw IoError("libpng init failed");
  guard.info = png_create_info_struct(guard.png);
  if (!guard.info) throw IoError("libpng init failed");
  std::vector<std::vector<unsigned char>> rows;
  png_uint_32 w = 0, h = 0;
  int depth = 0, ctype = 0;
  if (setjmp(png_jmpbuf(guard.png))) throw FormatError("corrupt PNG: " + path.string());
  png_init_io(guard.png, fp.get());
  png_set_sig_bytes(guard.png, 8);
  png_read_info(guard.png, guard.info);
  png_get_IHDR(guard.png, guard.info, &w, &h, &depth, &ctype, nullptr, nullptr, nullptr);
  if (ctype == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(guard.png);
  if (ctype == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(guard.png);
  if (ctype & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(guard.png);
  if (ctype == PNG_COLOR_TYPE_RGB || ctype == PNG_COLOR_TYPE_RGB_ALPHA || ctype == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(guard.png, 1, -1, -1);
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(guard.png);
  png_read_update_info(guard.png, guard.info);
  const auto rowbytes = png_get_rowbytes(guard.png, guard.info);
  const int out_depth = png_get_bit_depth(guard.png, guard.info);
  rows.assign(h, std::vector<unsigned char>(rowbytes));
  std::vector<png_bytep> ptrs(h);
  for (png_uint_32 r = 0; r < h; ++r) ptrs[r] = rows[r].data();
  png_read_image(guard.png, ptrs.data());
  png_read_end(guard.png, nullptr);

  GridGeometry g = like ? *like : GridGeometry(static_cast<int>(w), static_cast<int>(h));
  if (g.width != static_cast<int>(w) || g.height != static_cast<int>(h))
    g = GridGeometry(static_cast<int>(w), static_cast<int>(h), g.pixels_per_unit);
  std::vector<double> values(static_cast<std::size_t>(w) * h);
  for (png_uint_32 r = 0; r < h; ++r)
    for (png_uint_32 c = 0; c < w; ++c) {
      double v;
      if (out_depth == 16) {
        std::uint16_t s;
        std::memcpy(&s, rows[r].data() + 2 * c, 2);
        v = s / 65535.0;
      } else {
        v = rows[r][c] / 255.0;
      }
      values[static_cast<std::size_t>(r) * w + c] = v;
    }
  return GrayImage(g, std::move(values));
}

/// Writes 8-bit RGB (channels = 3) or 16-bit gray (channels = 1) rows.
inline void write_png_raw(const std::filesystem::path& path, int width, int height, int channels,
                          const std::vector<unsigned char>& data) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("cannot open for writing " + path.string());
  PngWriteGuard guard;
  guard.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!guard.png) throw IoError("libpng init failed");
  guard.info = png_create_info_struct(guard.png);
  if (!guard.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(guard.png))) throw IoError("PNG write failed: " + path.string());
  png_init_io(guard.png, fp.get());
  const int depth = channels == 1 ? 16 : 8;
  png_set_IHDR(guard.png, guard.info, width, height, depth, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(guard.png, guard.info);
  const std::size_t stride = static_cast<std::size_t>(width) * channels * (depth / 8);
  for (int r = 0; r < height; ++r)
    png_write_row(guard.png, const_cast<png_bytep>(data.data() + stride * r));
  png_write_end(guard.png, nullptr);
}

inline void write_png(const GrayImage& img, const std::filesystem::path& path) {
  std::vector<unsigned char> data;
  data.reserve(img.values().size() * 2);
  for (double v : img.values()) {
    const auto q = quantize16(v);  // PNG stores big-endian samples
    data.push_back(static_cast<unsigned char>(q >> 8));
    data.push_back(static_cast<unsigned char>(q & 0xff));
  }
  write_png_raw(path, img.width(), img.height(), 1, data);
}

}  // namespace detail

/// Reads PGM (P5, 8/16-bit) or grayscale PNG. Values are scaled to [0,1].
/// If `like` is given, its pixels_per_unit is used for the image geometry.
inline GrayImage read_image(const std::filesystem::path& path, const GridGeometry* like = nullptr) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  const auto ext = detail::extension_of(path);
  if (ext == ".pgm") return detail::read_pgm(path, like);
  if (ext == ".png") return detail::read_png(path, like);
  throw FormatError("unsupported image format '" + ext + "': " + path.string());
}

/// Writes 16-bit PGM or 16-bit grayscale PNG depending on the extension.
inline void write_image(const GrayImage& img, const std::filesystem::path& path) {
  const auto ext = detail::extension_of(path);
  if (ext == ".pgm") return detail::write_pgm(img, path, 16);
  if (ext == ".png") return detail::write_png(img, path);
  throw FormatError("unsupported image format '" + ext + "': " + path.string());
}

inline void write_pgm8(const GrayImage& img, const std::filesystem::path& path) { detail::write_pgm(img, path, 8); }

// .hbs layout: "HBS1", u32 width, u32 height, f64 ppu, f64 center_x, f64 center_y,
// width*height f64 real plane (row-major), then the imaginary plane. Little-endian.
inline constexpr char kHbsMagic[4] = {'H', 'B', 'S', '1'};

inline std::vector<unsigned char> encode_field(const ComplexField& f) {
  const auto& g = f.geometry();
  for (int i = 0; i < g.height; ++i)
    for (int j = 0; j < g.width; ++j)
      if (f.inside(i, j) && (!std::isfinite(f(i, j).real()) || !std::isfinite(f(i, j).imag())))
        throw FormatError("field contains a non-finite value inside the disk");
  std::vector<unsigned char> buf(kHbsMagic, kHbsMagic + 4);
  buf.reserve(4 + 8 + 24 + 16 * g.size());
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.width));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.height));
  detail::put_le<double>(buf, g.pixels_per_unit);
  detail::put_le<double>(buf, g.center_x);
  detail::put_le<double>(buf, g.center_y);
  for (const auto& v : f.values()) detail::put_le<double>(buf, v.real());
  for (const auto& v : f.values()) detail::put_le<double>(buf, v.imag());
  return buf;
}

inline ComplexField decode_field(const std::vector<unsigned char>& buf) {
  if (buf.size() < 4 || !std::equal(kHbsMagic, kHbsMagic + 4, buf.begin())) throw FormatError("bad .hbs magic");
  std::size_t pos = 4;
  const auto w = detail::get_le<std::uint32_t>(buf, pos);
  const auto h = detail::get_le<std::uint32_t>(buf, pos);
  const auto ppu = detail::get_le<double>(buf, pos);
  const auto cx = detail::get_le<double>(buf, pos);
  const auto cy = detail::get_le<double>(buf, pos);
  if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) throw FormatError(".hbs dimensions out of range");
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (buf.size() != pos + 16 * n) throw FormatError(".hbs payload size does not match dimensions");
  GridGeometry g;
  try {
    g = GridGeometry(static_cast<int>(w), static_cast<int>(h), ppu, cx, cy);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string(".hbs geometry invalid: ") + e.what());
  }
  std::vector<Complex> values(n);
  for (std::size_t k = 0; k < n; ++k) values[k].real(detail::get_le<double>(buf, pos));
  for (std::size_t k = 0; k < n; ++k) values[k].imag(detail::get_le<double>(buf, pos));
  ComplexField f(g, values);
  for (std::size_t k = 0; k < n; ++k) {
    if (!f.mask().inside[k]) continue;
    if (!std::isfinite(values[k].real()) || !std::isfinite(values[k].imag()))
      throw FormatError(".hbs contains a non-finite value inside the disk");
  }
  return f;
}

inline void write_field(const ComplexField& f, const std::filesystem::path& path) {
  detail::write_all(path, encode_field(f));
}

inline ComplexField read_field(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  return decode_field(detail::read_all(path));
}

}  // namespace hbs

#endif  // HBS_IO_HPP
