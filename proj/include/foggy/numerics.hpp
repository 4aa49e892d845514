#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "foggy/error.hpp"

namespace foggy {

constexpr double kDegenerateNormEps = 1e-12;

/// Dense real grid with image shape but no range constraint; used for
/// gradients and other intermediate fields.
struct Grid {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> values;

  static Grid zeros(int w, int h, int c) {
    Grid g;
    g.width = w;
    g.height = h;
    g.channels = c;
    g.values.assign(static_cast<std::size_t>(w) * h * c, 0.0);
    return g;
  }

  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  double& at(int y, int x, int c) { return values[index(y, x, c)]; }
  double at(int y, int x, int c) const { return values[index(y, x, c)]; }
  std::size_t size() const { return values.size(); }
};

/// Pixel grid, row-major, values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> pixels;

  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  double& at(int y, int x, int c) { return pixels[index(y, x, c)]; }
  double at(int y, int x, int c) const { return pixels[index(y, x, c)]; }
  std::size_t size() const { return pixels.size(); }

  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height &&
           channels == other.channels;
  }
};

inline Image make_image(int w, int h, int c, double fill = 0.0) {
  if (w < 1 || h < 1 || c < 1) throw ShapeError("image dimensions must be >= 1");
  Image img;
  img.width = w;
  img.height = h;
  img.channels = c;
  img.pixels.assign(static_cast<std::size_t>(w) * h * c, fill);
  return img;
}

inline void validate_image(const Image& img, const std::string& what = "image") {
  if (img.width < 1 || img.height < 1 || img.channels < 1)
    throw ShapeError(what + ": dimensions must be >= 1");
  const std::size_t expect =
      static_cast<std::size_t>(img.width) * img.height * img.channels;
  if (img.pixels.size() != expect)
    throw ShapeError(what + ": pixel buffer length does not match shape");
  for (double p : img.pixels)
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(what + ": pixel value outside [0, 1]");
}

using Embedding = std::vector<double>;

/// Embedding brought onto the unit sphere by normalize().
struct NormalizedEmbedding {
  Embedding values;
};

inline double l2_norm(const Embedding& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline NormalizedEmbedding normalize(const Embedding& v) {
  const double n = l2_norm(v);
  if (!(n >= kDegenerateNormEps))
    throw DegenerateVectorError("normalize: vector norm below 1e-12");
  NormalizedEmbedding out;
  out.values.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.values[i] = v[i] / n;
  return out;
}

/// Squared L2 distance between the unit-normalized arguments; range [0, 4].
inline double distance(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size())
    throw ShapeError("distance: dimension mismatch");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na >= kDegenerateNormEps) || !(nb >= kDegenerateNormEps))
    throw DegenerateVectorError("distance: zero-norm input");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] / na - b[i] / nb;
    s += d * d;
  }
  return s;
}

inline double distance(const NormalizedEmbedding& a,
                       const NormalizedEmbedding& b) {
  return distance(a.values, b.values);
}

struct EmbeddingStats {
  Embedding mean;
  Embedding std;  // population standard deviation, per dimension
};

inline EmbeddingStats embedding_stats(
    const std::vector<NormalizedEmbedding>& vs) {
  if (vs.empty()) throw EmptySetError("embedding_stats: empty input");
  const std::size_t d = vs.front().values.size();
  EmbeddingStats out;
  out.mean.assign(d, 0.0);
  out.std.assign(d, 0.0);
  for (const auto& v : vs) {
    if (v.values.size() != d)
      throw ShapeError("embedding_stats: dimension mismatch");
    for (std::size_t j = 0; j < d; ++j) out.mean[j] += v.values[j];
  }
  const double n = static_cast<double>(vs.size());
  for (std::size_t j = 0; j < d; ++j) out.mean[j] /= n;
  for (const auto& v : vs)
    for (std::size_t j = 0; j < d; ++j) {
      const double dif = v.values[j] - out.mean[j];
      out.std[j] += dif * dif;
    }
  for (std::size_t j = 0; j < d; ++j) out.std[j] = std::sqrt(out.std[j] / n);
  return out;
}

}  // namespace foggy
