#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "foggy/error.hpp"
#include "foggy/numerics.hpp"

namespace foggy {

// Explicit little-endian encoding keeps the on-disk formats identical across
// hosts regardless of native byte order.
namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  put_u32(os, static_cast<std::uint32_t>(v));
  put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline void put_f32(std::ostream& os, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(os, v);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("unexpected end of stream");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64(std::istream& is) {
  const std::uint64_t lo = get_u32(is);
  const std::uint64_t hi = get_u32(is);
  return lo | (hi << 32);
}

inline float get_f32(std::istream& is) {
  const std::uint32_t v = get_u32(is);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

inline void put_magic(std::ostream& os, const char magic[5]) {
  os.write(magic, 4);
}

inline void expect_magic(std::istream& is, const char magic[5],
                         const std::string& what) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0)
    throw IoError(what + ": bad magic bytes");
}

}  // namespace detail

// --- FGI1: image file -------------------------------------------------------
// "FGI1", u32 width, u32 height, u32 channels, then w*h*c f32 row-major.

inline void write_image(std::ostream& os, const Image& img) {
  detail::put_magic(os, "FGI1");
  detail::put_u32(os, static_cast<std::uint32_t>(img.width));
  detail::put_u32(os, static_cast<std::uint32_t>(img.height));
  detail::put_u32(os, static_cast<std::uint32_t>(img.channels));
  for (double p : img.pixels) detail::put_f32(os, static_cast<float>(p));
  if (!os) throw IoError("write_image: stream failure");
}

inline Image read_image(std::istream& is) {
  detail::expect_magic(is, "FGI1", "read_image");
  const std::uint32_t w = detail::get_u32(is);
  const std::uint32_t h = detail::get_u32(is);
  const std::uint32_t c = detail::get_u32(is);
  if (w < 1 || h < 1 || c < 1) throw IoError("read_image: bad shape");
  Image img = make_image(static_cast<int>(w), static_cast<int>(h),
                         static_cast<int>(c));
  for (auto& p : img.pixels) p = static_cast<double>(detail::get_f32(is));
  return img;
}

inline void save_image(const std::string& path, const Image& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  write_image(f, img);
}

inline Image load_image(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  return read_image(f);
}

// --- FGE1: embedding cache --------------------------------------------------
// "FGE1", u32 count, u32 dim, then count*dim f32. Values are widened to
// double and re-normalized on load so the unit-norm invariant survives the
// f32 round trip.

inline void write_embedding_cache(std::ostream& os,
                                  const std::vector<NormalizedEmbedding>& vs) {
  detail::put_magic(os, "FGE1");
  detail::put_u32(os, static_cast<std::uint32_t>(vs.size()));
  const std::uint32_t dim =
      vs.empty() ? 0 : static_cast<std::uint32_t>(vs.front().values.size());
  detail::put_u32(os, dim);
  for (const auto& v : vs) {
    if (v.values.size() != dim)
      throw ShapeError("write_embedding_cache: inconsistent dimension");
    for (double x : v.values) detail::put_f32(os, static_cast<float>(x));
  }
  if (!os) throw IoError("write_embedding_cache: stream failure");
}

inline std::vector<NormalizedEmbedding> read_embedding_cache(std::istream& is) {
  detail::expect_magic(is, "FGE1", "read_embedding_cache");
  const std::uint32_t count = detail::get_u32(is);
  const std::uint32_t dim = detail::get_u32(is);
  std::vector<NormalizedEmbedding> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Embedding v(dim);
    for (auto& x : v) x = static_cast<double>(detail::get_f32(is));
    out.push_back(normalize(v));
  }
  return out;
}

inline void save_embedding_cache(const std::string& path,
                                 const std::vector<NormalizedEmbedding>& vs) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  write_embedding_cache(f, vs);
}

inline std::vector<NormalizedEmbedding> load_embedding_cache(
    const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  return read_embedding_cache(f);
}

}  // namespace foggy
