#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "foggy/embednet.hpp"
#include "foggy/error.hpp"
#include "foggy/numerics.hpp"
#include "foggy/rng.hpp"

namespace foggy {

/// Photo jitter applied around each identity's prototype.
struct JitterParams {
  double brightness = 0.05;   // shift uniform in [-brightness, brightness]
  double noise_sigma = 0.02;  // per-pixel Gaussian
  int max_translation = 1;    // integer shift, uniform in [-t, t]^2
};

struct SynthDatasetSpec {
  int identity_count = 19;
  int photos_per_identity = 50;
  int queries_per_identity = 5;
  int width = 16, height = 16, channels = 1;
  JitterParams jitter;
  // Prototype construction: a shared bump field plus an identity-specific
  // bump field scaled by identity_blend. Smaller blend packs the identities
  // closer together in embedding space.
  int shared_bumps = 6;
  int identity_bumps = 4;
  double identity_blend = 0.55;
  std::uint64_t master_seed = 1;

  void validate() const {
    if (identity_count < 1 || photos_per_identity < 1 ||
        queries_per_identity < 1)
      throw ConfigError("SynthDatasetSpec: counts must be >= 1");
    if (width < 1 || height < 1 || channels < 1)
      throw ConfigError("SynthDatasetSpec: bad image shape");
    if (jitter.brightness < 0 || jitter.noise_sigma < 0 ||
        jitter.max_translation < 0)
      throw ConfigError("SynthDatasetSpec: jitter parameters must be >= 0");
  }
};

struct SynthPhoto {
  std::string photo_id;
  std::string identity;
  Image image;
};

struct SynthDataset {
  SynthDatasetSpec spec;
  std::vector<std::string> identities;
  std::vector<SynthPhoto> photos;   // lookup-set photos, role clean
  std::vector<SynthPhoto> queries;  // held-out queries, disjoint from photos
};

namespace detail {

struct Bump {
  double cx, cy, sigma, amp;
};

inline void draw_bumps(std::vector<Bump>& bumps, int count, double amp_scale,
                       int width, int height, SeededRng& rng) {
  for (int i = 0; i < count; ++i) {
    Bump b;
    b.cx = rng.uniform(0.0, width - 1.0);
    b.cy = rng.uniform(0.0, height - 1.0);
    b.sigma = rng.uniform(0.15, 0.35) * std::min(width, height);
    b.amp = amp_scale * rng.uniform(-1.0, 1.0);
    bumps.push_back(b);
  }
}

inline Image render_prototype(const std::vector<Bump>& bumps, int width,
                              int height, int channels) {
  Image img = make_image(width, height, channels);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double f = 0.0;
      for (const auto& b : bumps) {
        const double dx = x - b.cx, dy = y - b.cy;
        f += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
      }
      const double v = std::clamp(0.5 + 0.4 * f, 0.0, 1.0);
      for (int c = 0; c < channels; ++c) img.at(y, x, c) = v;
    }
  return img;
}

inline Image jittered(const Image& proto, const JitterParams& jit,
                      SeededRng& rng) {
  const int t = jit.max_translation;
  const int dx = t > 0 ? static_cast<int>(rng.uniform_int(2 * t + 1)) - t : 0;
  const int dy = t > 0 ? static_cast<int>(rng.uniform_int(2 * t + 1)) - t : 0;
  const double shift = jit.brightness > 0
                           ? rng.uniform(-jit.brightness, jit.brightness)
                           : 0.0;
  Image out = proto;
  for (int y = 0; y < proto.height; ++y)
    for (int x = 0; x < proto.width; ++x) {
      const int sy = std::clamp(y + dy, 0, proto.height - 1);
      const int sx = std::clamp(x + dx, 0, proto.width - 1);
      for (int c = 0; c < proto.channels; ++c) {
        double v = proto.at(sy, sx, c) + shift;
        if (jit.noise_sigma > 0) v += rng.normal(0.0, jit.noise_sigma);
        out.at(y, x, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  return out;
}

inline std::string zero_pad(int v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*d", digits, v);
  return buf;
}

}  // namespace detail

/// Deterministic synthetic dataset: per identity one smooth prototype, with
/// every photo and query an independently jittered copy. Fully determined by
/// the master seed.
inline SynthDataset generate(const SynthDatasetSpec& spec) {
  spec.validate();
  SynthDataset ds;
  ds.spec = spec;

  SeededRng base_rng(spec.master_seed, stream_id(streams::kDataset, 0));
  std::vector<detail::Bump> shared;
  detail::draw_bumps(shared, spec.shared_bumps, 1.0, spec.width, spec.height,
                     base_rng);

  for (int i = 0; i < spec.identity_count; ++i) {
    const std::string ident = "id-" + detail::zero_pad(i, 3);
    ds.identities.push_back(ident);

    SeededRng proto_rng(spec.master_seed,
                        stream_id(streams::kDataset, 1000 + i));
    std::vector<detail::Bump> bumps = shared;
    detail::draw_bumps(bumps, spec.identity_bumps, spec.identity_blend,
                       spec.width, spec.height, proto_rng);
    const Image proto =
        detail::render_prototype(bumps, spec.width, spec.height, spec.channels);

    SeededRng photo_rng(spec.master_seed,
                        stream_id(streams::kDataset, 100000 + i));
    for (int p = 0; p < spec.photos_per_identity; ++p)
      ds.photos.push_back({ident + "-p" + detail::zero_pad(p, 3), ident,
                           detail::jittered(proto, spec.jitter, photo_rng)});

    SeededRng query_rng(spec.master_seed,
                        stream_id(streams::kDataset, 200000 + i));
    for (int q = 0; q < spec.queries_per_identity; ++q)
      ds.queries.push_back({ident + "-q" + detail::zero_pad(q, 3), ident,
                            detail::jittered(proto, spec.jitter, query_rng)});
  }
  return ds;
}

struct ClusterQuality {
  double intra = 0.0;            // mean distance over same-identity pairs
  std::optional<double> inter;   // mean over cross-identity pairs; empty
                                 // when fewer than two identities exist
};

/// Full pairwise distance sweep over the lookup photos under the model.
inline ClusterQuality cluster_quality(const SynthDataset& ds,
                                      const EmbedNet& model) {
  if (ds.photos.empty()) throw EmptySetError("cluster_quality: empty dataset");
  std::vector<NormalizedEmbedding> embs;
  std::vector<int> ident_idx;
  embs.reserve(ds.photos.size());
  for (const auto& p : ds.photos) {
    embs.push_back(normalize(model.forward(p.image)));
    int idx = 0;
    while (ds.identities[idx] != p.identity) ++idx;
    ident_idx.push_back(idx);
  }
  double intra_sum = 0.0, inter_sum = 0.0;
  std::size_t intra_n = 0, inter_n = 0;
  for (std::size_t a = 0; a < embs.size(); ++a)
    for (std::size_t b = a + 1; b < embs.size(); ++b) {
      const double d = distance(embs[a], embs[b]);
      if (ident_idx[a] == ident_idx[b]) {
        intra_sum += d;
        ++intra_n;
      } else {
        inter_sum += d;
        ++inter_n;
      }
    }
  ClusterQuality q;
  q.intra = intra_n ? intra_sum / intra_n : 0.0;
  if (inter_n) q.inter = inter_sum / inter_n;
  return q;
}

}  // namespace foggy
