#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "foggy/error.hpp"
#include "foggy/lookup.hpp"
#include "foggy/numerics.hpp"
#include "foggy/rng.hpp"

namespace foggy {

enum class TargetKind {
  Universal,      // one photo of the protected, shared by all decoys
  RandomLookup,   // independent draws from the protected's lookup photos
  Mean,           // per-dimension mean of the protected's lookup embeddings
  GaussianSample, // draws from a diagonal Gaussian fit to those embeddings
  DecoyRetarget,  // draws from existing decoys aimed at the protected
};

inline std::string to_string(TargetKind k) {
  switch (k) {
    case TargetKind::Universal: return "universal";
    case TargetKind::RandomLookup: return "random-lookup";
    case TargetKind::Mean: return "mean";
    case TargetKind::GaussianSample: return "gaussian-sample";
    case TargetKind::DecoyRetarget: return "decoy-retarget";
  }
  return "?";
}

inline TargetKind parse_strategy(const std::string& s) {
  if (s == "universal") return TargetKind::Universal;
  if (s == "random-lookup") return TargetKind::RandomLookup;
  if (s == "mean") return TargetKind::Mean;
  if (s == "gaussian-sample") return TargetKind::GaussianSample;
  if (s == "decoy-retarget") return TargetKind::DecoyRetarget;
  throw ConfigError("unknown targeting strategy: " + s);
}

namespace detail {

inline std::vector<std::size_t> eligible_sources(TargetKind kind,
                                                 const std::string& protected_id,
                                                 const LookupStore& store) {
  std::vector<std::size_t> out;
  if (kind == TargetKind::DecoyRetarget) {
    for (std::size_t i = 0; i < store.size(); ++i) {
      const auto& e = store.entry(i);
      if (e.role == Role::Decoy && e.provenance &&
          e.provenance->target_identity == protected_id)
        out.push_back(i);
    }
  } else {
    for (std::size_t i : store.entries_of(protected_id))
      if (store.entry(i).role == Role::Clean) out.push_back(i);
  }
  return out;
}

}  // namespace detail

/// Pick n target vectors for decoys shielding `protected_id`. Embeddings are
/// read from the store's primary cache (the model the protectors hold).
inline std::vector<Embedding> choose_targets(TargetKind kind,
                                             const std::string& protected_id,
                                             const LookupStore& store, int n,
                                             SeededRng& rng) {
  if (n < 1) throw ConfigError("choose_targets: n must be >= 1");
  const auto sources = detail::eligible_sources(kind, protected_id, store);
  if (sources.empty())
    throw StrategyError("no eligible source embeddings for " +
                        to_string(kind) + " targeting of " + protected_id);

  std::vector<Embedding> targets;
  targets.reserve(n);
  switch (kind) {
    case TargetKind::Universal: {
      const auto& v =
          store.entry(sources[rng.uniform_int(sources.size())]).embedding;
      targets.assign(n, v.values);
      break;
    }
    case TargetKind::RandomLookup:
    case TargetKind::DecoyRetarget:
      for (int i = 0; i < n; ++i)
        targets.push_back(
            store.entry(sources[rng.uniform_int(sources.size())])
                .embedding.values);
      break;
    case TargetKind::Mean:
    case TargetKind::GaussianSample: {
      std::vector<NormalizedEmbedding> embs;
      embs.reserve(sources.size());
      for (std::size_t i : sources) embs.push_back(store.entry(i).embedding);
      const auto stats = embedding_stats(embs);
      if (l2_norm(stats.mean) < 1e-8)
        throw DegenerateVectorError(
            "choose_targets: mean embedding norm below 1e-8");
      if (kind == TargetKind::Mean) {
        // left unnormalized; the distance function normalizes internally
        targets.assign(n, stats.mean);
      } else {
        for (int i = 0; i < n; ++i) {
          Embedding v(stats.mean.size());
          for (std::size_t j = 0; j < v.size(); ++j)
            v[j] = stats.std[j] > 0
                       ? rng.normal(stats.mean[j], stats.std[j])
                       : stats.mean[j];
          targets.push_back(std::move(v));
        }
      }
      break;
    }
  }
  return targets;
}

/// Which protectors supply how many decoys for each protected identity.
/// Invariant: no protector's share exceeds ceil(total / protector count).
struct ProtectionAssignment {
  std::map<std::string, std::vector<std::pair<std::string, int>>> shares;
};

/// Round-robin over the protectors (excluding the protected identity itself)
/// in seeded-shuffled order.
inline ProtectionAssignment assign_protectors(
    const std::vector<std::string>& protected_ids,
    const std::vector<std::string>& protector_ids, int decoys_per_protected,
    SeededRng& rng) {
  if (decoys_per_protected < 1)
    throw ConfigError("assign_protectors: decoy count must be >= 1");
  if (protector_ids.empty())
    throw AssignmentError("assign_protectors: empty protector set");
  ProtectionAssignment out;
  for (const auto& protd : protected_ids) {
    std::vector<std::string> pool;
    for (const auto& p : protector_ids)
      if (p != protd) pool.push_back(p);
    if (pool.empty())
      throw AssignmentError("no protector available for " + protd +
                            " (a user cannot protect only themself)");
    rng.shuffle(pool);
    const int m = static_cast<int>(pool.size());
    std::vector<std::pair<std::string, int>> shares;
    for (int i = 0; i < m; ++i) {
      const int count =
          decoys_per_protected / m + (i < decoys_per_protected % m ? 1 : 0);
      if (count > 0) shares.emplace_back(pool[i], count);
    }
    out.shares[protd] = std::move(shares);
  }
  return out;
}

}  // namespace foggy
