#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "foggy/embednet.hpp"
#include "foggy/error.hpp"
#include "foggy/numerics.hpp"
#include "foggy/serialize.hpp"
#include "foggy/synthpeople.hpp"

namespace foggy {

enum class Role { Clean, Decoy };

inline std::string to_string(Role r) {
  return r == Role::Clean ? "clean" : "decoy";
}

inline Role parse_role(const std::string& s) {
  if (s == "clean") return Role::Clean;
  if (s == "decoy") return Role::Decoy;
  throw ConfigError("unknown role: " + s);
}

/// How a decoy came to be: which strategy produced it, at what budget, under
/// which generator model, and which identity it is meant to shield.
struct Provenance {
  std::string strategy;
  double epsilon = 0.0;
  std::string generator_model;
  std::string target_identity;
};

struct LookupItem {
  std::string photo_id;
  std::string identity;
  Role role = Role::Clean;
  Image image;
  std::optional<Provenance> provenance;
};

/// Decoy entries carry the identity of the person actually depicted (the
/// protector), never the identity they shield.
struct LookupEntry {
  std::string photo_id;
  std::string identity;
  Role role = Role::Clean;
  NormalizedEmbedding embedding;  // under the primary model
  std::optional<Provenance> provenance;
};

/// The adversary's photo store: entries are fixed once built ("sealed");
/// embedding caches may exist for several models, keyed by model id.
class LookupStore {
 public:
  static LookupStore build(const std::vector<LookupItem>& items,
                           const EmbedNet& model) {
    LookupStore store;
    store.primary_model_ = model.id();
    std::unordered_set<std::string> seen;
    std::vector<NormalizedEmbedding> cache;
    cache.reserve(items.size());
    for (const auto& it : items) {
      if (!seen.insert(it.photo_id).second)
        throw BuildError("duplicate photo id: " + it.photo_id);
      NormalizedEmbedding emb;
      try {
        emb = normalize(model.forward(it.image));
      } catch (const DegenerateVectorError&) {
        throw DegenerateVectorError("degenerate embedding for photo " +
                                    it.photo_id);
      }
      store.entries_.push_back(
          {it.photo_id, it.identity, it.role, emb, it.provenance});
      cache.push_back(std::move(emb));
      store.images_.push_back(it.image);
    }
    store.caches_[store.primary_model_] = std::move(cache);
    store.rebuild_identity_index();
    return store;
  }

  /// Embed the stored photos under an additional model. Only valid on stores
  /// that still hold their source images (in-memory builds); call before
  /// sharing the store across threads.
  void add_model(const EmbedNet& model) {
    if (caches_.count(model.id())) return;
    if (images_.size() != entries_.size())
      throw BuildError("add_model: store has no source images");
    std::vector<NormalizedEmbedding> cache;
    cache.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      try {
        cache.push_back(normalize(model.forward(images_[i])));
      } catch (const DegenerateVectorError&) {
        throw DegenerateVectorError("degenerate embedding for photo " +
                                    entries_[i].photo_id);
      }
    }
    caches_[model.id()] = std::move(cache);
  }

  const std::vector<LookupEntry>& entries() const { return entries_; }
  const LookupEntry& entry(std::size_t i) const { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::string& primary_model() const { return primary_model_; }
  bool has_cache(const std::string& model_id) const {
    return caches_.count(model_id) != 0;
  }
  bool has_images() const { return images_.size() == entries_.size(); }
  const Image& image(std::size_t i) const { return images_[i]; }

  const std::vector<NormalizedEmbedding>& cache(
      const std::string& model_id) const {
    auto it = caches_.find(model_id);
    if (it == caches_.end())
      throw BuildError("no embedding cache for model " + model_id);
    return it->second;
  }

  int identity_count() const { return static_cast<int>(identity_index_.size()); }

  const std::vector<std::size_t>& entries_of(const std::string& identity) const {
    static const std::vector<std::size_t> kEmpty;
    auto it = identity_index_.find(identity);
    return it == identity_index_.end() ? kEmpty : it->second;
  }

  const std::map<std::string, std::vector<std::size_t>>& identity_index() const {
    return identity_index_;
  }

  // persistence: manifest TSV plus one FGE1 cache file per model id
  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream mf(dir / "store_manifest.tsv");
    if (!mf) throw IoError("cannot write store manifest");
    for (const auto& e : entries_) {
      mf << e.photo_id << '\t' << e.identity << '\t' << to_string(e.role);
      if (e.provenance) {
        char eps[64];
        std::snprintf(eps, sizeof eps, "%.17g", e.provenance->epsilon);
        mf << '\t' << e.provenance->strategy << '\t' << eps << '\t'
           << e.provenance->generator_model << '\t'
           << e.provenance->target_identity;
      } else {
        mf << "\t\t\t\t";
      }
      mf << '\n';
    }
    std::ofstream pf(dir / "primary_model.txt");
    pf << primary_model_ << '\n';
    for (const auto& [model_id, cache] : caches_)
      save_embedding_cache((dir / (model_id + ".fge")).string(), cache);
  }

  static LookupStore load(const std::filesystem::path& dir) {
    LookupStore store;
    std::ifstream pf(dir / "primary_model.txt");
    if (!pf) throw IoError("missing primary_model.txt in " + dir.string());
    std::getline(pf, store.primary_model_);

    std::ifstream mf(dir / "store_manifest.tsv");
    if (!mf) throw IoError("missing store_manifest.tsv in " + dir.string());
    std::string line;
    while (std::getline(mf, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, '\t')) cols.push_back(col);
      if (cols.size() < 3) throw IoError("malformed store manifest line");
      LookupEntry e;
      e.photo_id = cols[0];
      e.identity = cols[1];
      e.role = parse_role(cols[2]);
      if (cols.size() >= 7 && !cols[3].empty())
        e.provenance = Provenance{cols[3], std::stod(cols[4]), cols[5], cols[6]};
      store.entries_.push_back(std::move(e));
    }
    for (const auto& f : std::filesystem::directory_iterator(dir)) {
      if (f.path().extension() != ".fge") continue;
      auto cache = load_embedding_cache(f.path().string());
      if (cache.size() != store.entries_.size())
        throw IoError("cache size mismatch in " + f.path().string());
      store.caches_[f.path().stem().string()] = std::move(cache);
    }
    if (!store.caches_.count(store.primary_model_))
      throw IoError("store is missing its primary embedding cache");
    const auto& primary = store.caches_.at(store.primary_model_);
    for (std::size_t i = 0; i < store.entries_.size(); ++i)
      store.entries_[i].embedding = primary[i];
    store.rebuild_identity_index();
    return store;
  }

 private:
  void rebuild_identity_index() {
    identity_index_.clear();
    for (std::size_t i = 0; i < entries_.size(); ++i)
      identity_index_[entries_[i].identity].push_back(i);
  }

  std::vector<LookupEntry> entries_;
  std::vector<Image> images_;  // retained for add_model; absent after load()
  std::map<std::string, std::vector<NormalizedEmbedding>> caches_;
  std::map<std::string, std::vector<std::size_t>> identity_index_;
  std::string primary_model_;
};

struct Neighbor {
  std::size_t entry_index;
  double dist;
};

/// Exact brute-force top-k under the given model's cache: ascending distance,
/// ties broken by photo id ascending. k past the store size returns the whole
/// store ordered.
inline std::vector<Neighbor> top_k(const LookupStore& store,
                                   const NormalizedEmbedding& query,
                                   const std::string& model_id, int k) {
  if (k < 1) throw ConfigError("top_k: k must be >= 1");
  if (store.empty()) throw EmptyStoreError("top_k: empty store");
  const auto& cache = store.cache(model_id);
  std::vector<Neighbor> all(store.size());
  for (std::size_t i = 0; i < store.size(); ++i)
    all[i] = {i, distance(query, cache[i])};
  const auto cmp = [&store](const Neighbor& a, const Neighbor& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return store.entry(a.entry_index).photo_id <
           store.entry(b.entry_index).photo_id;
  };
  const std::size_t kk = std::min<std::size_t>(k, all.size());
  std::partial_sort(all.begin(), all.begin() + kk, all.end(), cmp);
  all.resize(kk);
  return all;
}

inline std::vector<Neighbor> top_k(const LookupStore& store, const Image& q,
                                   const EmbedNet& model, int k) {
  return top_k(store, normalize(model.forward(q)), model.id(), k);
}

/// Commercial-API style oracle: nearest identity if within tau, else
/// no-match. A no-match or wrong identity both score as incorrect.
inline std::optional<std::string> identify_top1(const LookupStore& store,
                                                const Image& q,
                                                const EmbedNet& model,
                                                double tau) {
  if (tau < 0) throw ConfigError("identify_top1: tau must be >= 0");
  const auto nearest = top_k(store, q, model, 1);
  if (nearest.front().dist <= tau)
    return store.entry(nearest.front().entry_index).identity;
  return std::nullopt;
}

/// Threshold calibration: 95th percentile (nearest-rank) of each query's
/// distance to its closest clean same-identity entry.
inline double calibrate_threshold(const LookupStore& store,
                                  const std::vector<SynthPhoto>& queries,
                                  const EmbedNet& model,
                                  double percentile = 0.95) {
  if (queries.empty()) throw EmptySetError("calibrate_threshold: no queries");
  const auto& cache = store.cache(model.id());
  std::vector<double> nearest;
  nearest.reserve(queries.size());
  for (const auto& q : queries) {
    const auto emb = normalize(model.forward(q.image));
    double best = -1.0;
    for (std::size_t i : store.entries_of(q.identity)) {
      if (store.entry(i).role != Role::Clean) continue;
      const double d = distance(emb, cache[i]);
      if (best < 0 || d < best) best = d;
    }
    if (best >= 0) nearest.push_back(best);
  }
  if (nearest.empty())
    throw EmptySetError("calibrate_threshold: no query has clean entries");
  std::sort(nearest.begin(), nearest.end());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(percentile * static_cast<double>(nearest.size())));
  return nearest[std::min(nearest.size() - 1, rank == 0 ? 0 : rank - 1)];
}

}  // namespace foggy
