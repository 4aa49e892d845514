#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "foggy/error.hpp"
#include "foggy/numerics.hpp"
#include "foggy/rng.hpp"

namespace foggy {

enum class TransformKind { FlipLr, Brightness, CropResize, GaussianNoise };

inline std::string to_string(TransformKind k) {
  switch (k) {
    case TransformKind::FlipLr: return "flip-lr";
    case TransformKind::Brightness: return "brightness";
    case TransformKind::CropResize: return "crop-resize";
    case TransformKind::GaussianNoise: return "gaussian-noise";
  }
  return "?";
}

/// One transform family plus the image shape it operates on. Parameters are
/// drawn per spec bounds by sample().
struct TransformSpec {
  TransformKind kind = TransformKind::FlipLr;
  int width = 0, height = 0, channels = 0;
  double brightness_max = 0.0;  // shift drawn uniform in [-max, max]
  int crop_size = 0;            // square window, <= min(width, height)
  double noise_mu = 0.0;
  double noise_sigma = 0.0;

  void validate() const {
    if (width < 1 || height < 1 || channels < 1)
      throw ShapeError("TransformSpec: bad image shape");
    if (brightness_max < 0.0)
      throw ConfigError("TransformSpec: brightness max shift must be >= 0");
    if (noise_sigma < 0.0)
      throw ConfigError("TransformSpec: noise sigma must be >= 0");
    if (kind == TransformKind::CropResize &&
        (crop_size < 1 || crop_size > std::min(width, height)))
      throw ConfigError("TransformSpec: crop size must be in [1, image side]");
  }
};

/// A spec with its randomness resolved; applying it is deterministic.
struct SampledTransform {
  TransformSpec spec;
  bool flip = false;
  double shift = 0.0;
  int crop_x = 0, crop_y = 0;
  std::vector<double> noise;  // image-shaped, GaussianNoise only
};

inline SampledTransform sample(const TransformSpec& spec, SeededRng& rng) {
  spec.validate();
  SampledTransform t;
  t.spec = spec;
  switch (spec.kind) {
    case TransformKind::FlipLr:
      t.flip = rng.uniform() < 0.5;
      break;
    case TransformKind::Brightness:
      t.shift = rng.uniform(-spec.brightness_max, spec.brightness_max);
      break;
    case TransformKind::CropResize:
      t.crop_x = static_cast<int>(
          rng.uniform_int(static_cast<std::uint64_t>(spec.width - spec.crop_size + 1)));
      t.crop_y = static_cast<int>(
          rng.uniform_int(static_cast<std::uint64_t>(spec.height - spec.crop_size + 1)));
      break;
    case TransformKind::GaussianNoise: {
      const std::size_t n =
          static_cast<std::size_t>(spec.width) * spec.height * spec.channels;
      t.noise.assign(n, 0.0);
      if (spec.noise_sigma > 0.0)
        for (auto& v : t.noise) v = rng.normal(spec.noise_mu, spec.noise_sigma);
      else if (spec.noise_mu != 0.0)
        for (auto& v : t.noise) v = spec.noise_mu;
      break;
    }
  }
  return t;
}

namespace detail {

// Bilinear source coordinates for resizing an s-wide window up to out_n.
// Half-pixel convention; collapses to the identity when s == out_n.
struct LerpCoord {
  int i0, i1;
  double f;  // weight of i1
};

inline LerpCoord lerp_coord(int out_idx, int out_n, int window, int origin) {
  double src = (out_idx + 0.5) * static_cast<double>(window) / out_n - 0.5;
  src = std::clamp(src, 0.0, static_cast<double>(window - 1));
  int i0 = static_cast<int>(std::floor(src));
  if (i0 > window - 1) i0 = window - 1;
  int i1 = std::min(i0 + 1, window - 1);
  return {origin + i0, origin + i1, src - i0};
}

}  // namespace detail

inline Image apply(const SampledTransform& t, const Image& x) {
  const auto& s = t.spec;
  if (x.width != s.width || x.height != s.height || x.channels != s.channels)
    throw ShapeError("apply: image shape does not match transform spec");
  Image out = x;
  switch (s.kind) {
    case TransformKind::FlipLr:
      if (t.flip)
        for (int y = 0; y < x.height; ++y)
          for (int xx = 0; xx < x.width; ++xx)
            for (int c = 0; c < x.channels; ++c)
              out.at(y, xx, c) = x.at(y, x.width - 1 - xx, c);
      break;
    case TransformKind::Brightness:
      for (auto& p : out.pixels) p = std::clamp(p + t.shift, 0.0, 1.0);
      break;
    case TransformKind::CropResize: {
      if (s.crop_size > std::min(x.width, x.height))
        throw ConfigError("apply: crop larger than image");
      for (int y = 0; y < x.height; ++y) {
        const auto cy = detail::lerp_coord(y, x.height, s.crop_size, t.crop_y);
        for (int xx = 0; xx < x.width; ++xx) {
          const auto cx = detail::lerp_coord(xx, x.width, s.crop_size, t.crop_x);
          for (int c = 0; c < x.channels; ++c) {
            const double v =
                (1 - cy.f) * ((1 - cx.f) * x.at(cy.i0, cx.i0, c) +
                              cx.f * x.at(cy.i0, cx.i1, c)) +
                cy.f * ((1 - cx.f) * x.at(cy.i1, cx.i0, c) +
                        cx.f * x.at(cy.i1, cx.i1, c));
            out.at(y, xx, c) = std::clamp(v, 0.0, 1.0);
          }
        }
      }
      break;
    }
    case TransformKind::GaussianNoise:
      for (std::size_t i = 0; i < out.pixels.size(); ++i)
        out.pixels[i] = std::clamp(x.pixels[i] + t.noise[i], 0.0, 1.0);
      break;
  }
  return out;
}

/// Exact vector-Jacobian product of apply() at input x. The clamp uses the
/// zero-outside-range subgradient, so positions whose pre-clamp value fell
/// outside [0, 1] pass no gradient.
inline Grid backprop(const SampledTransform& t, const Image& x,
                     const Grid& upstream) {
  const auto& s = t.spec;
  if (upstream.width != s.width || upstream.height != s.height ||
      upstream.channels != s.channels)
    throw ShapeError("backprop: upstream gradient shape mismatch");
  Grid g = Grid::zeros(s.width, s.height, s.channels);
  switch (s.kind) {
    case TransformKind::FlipLr:
      if (!t.flip) {
        g.values = upstream.values;
      } else {
        for (int y = 0; y < s.height; ++y)
          for (int xx = 0; xx < s.width; ++xx)
            for (int c = 0; c < s.channels; ++c)
              g.at(y, s.width - 1 - xx, c) = upstream.at(y, xx, c);
      }
      break;
    case TransformKind::Brightness:
      for (std::size_t i = 0; i < g.values.size(); ++i) {
        const double pre = x.pixels[i] + t.shift;
        g.values[i] = (pre < 0.0 || pre > 1.0) ? 0.0 : upstream.values[i];
      }
      break;
    case TransformKind::CropResize:
      for (int y = 0; y < s.height; ++y) {
        const auto cy = detail::lerp_coord(y, s.height, s.crop_size, t.crop_y);
        for (int xx = 0; xx < s.width; ++xx) {
          const auto cx = detail::lerp_coord(xx, s.width, s.crop_size, t.crop_x);
          for (int c = 0; c < s.channels; ++c) {
            const double u = upstream.at(y, xx, c);
            g.at(cy.i0, cx.i0, c) += (1 - cy.f) * (1 - cx.f) * u;
            g.at(cy.i0, cx.i1, c) += (1 - cy.f) * cx.f * u;
            g.at(cy.i1, cx.i0, c) += cy.f * (1 - cx.f) * u;
            g.at(cy.i1, cx.i1, c) += cy.f * cx.f * u;
          }
        }
      }
      break;
    case TransformKind::GaussianNoise:
      for (std::size_t i = 0; i < g.values.size(); ++i) {
        const double pre = x.pixels[i] + t.noise[i];
        g.values[i] = (pre < 0.0 || pre > 1.0) ? 0.0 : upstream.values[i];
      }
      break;
  }
  return g;
}

// --- transform chains -------------------------------------------------------

inline std::vector<SampledTransform> sample_chain(
    const std::vector<TransformSpec>& specs, SeededRng& rng) {
  std::vector<SampledTransform> chain;
  chain.reserve(specs.size());
  for (const auto& s : specs) chain.push_back(sample(s, rng));
  return chain;
}

struct ChainResult {
  Image output;
  std::vector<Image> stage_inputs;  // input seen by each stage, in order
};

inline ChainResult apply_chain(const std::vector<SampledTransform>& chain,
                               const Image& x) {
  ChainResult r;
  r.output = x;
  r.stage_inputs.reserve(chain.size());
  for (const auto& t : chain) {
    r.stage_inputs.push_back(r.output);
    r.output = apply(t, r.stage_inputs.back());
  }
  return r;
}

inline Grid backprop_chain(const std::vector<SampledTransform>& chain,
                           const ChainResult& fwd, const Grid& upstream) {
  Grid g = upstream;
  for (std::size_t i = chain.size(); i-- > 0;)
    g = backprop(chain[i], fwd.stage_inputs[i], g);
  return g;
}

/// Default EOT set: flip, brightness up to 0.25, crop at 150/160 of the
/// side with bilinear resize back, additive Gaussian noise. The crop ratio
/// is preserved rather than the absolute pixel count.
inline std::vector<TransformSpec> eot_default_preset(int width, int height,
                                                     int channels,
                                                     double noise_sigma = 0.5) {
  const int side = std::min(width, height);
  const int crop = std::max(
      1, static_cast<int>(std::lround(side * 150.0 / 160.0)));
  TransformSpec flip{TransformKind::FlipLr, width, height, channels};
  TransformSpec bright{TransformKind::Brightness, width, height, channels};
  bright.brightness_max = 0.25;
  TransformSpec cropr{TransformKind::CropResize, width, height, channels};
  cropr.crop_size = crop;
  TransformSpec noise{TransformKind::GaussianNoise, width, height, channels};
  noise.noise_mu = 0.0;
  noise.noise_sigma = noise_sigma;
  return {flip, bright, cropr, noise};
}

}  // namespace foggy
