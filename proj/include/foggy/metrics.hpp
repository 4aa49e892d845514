#pragma once

#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "foggy/error.hpp"
#include "foggy/lookup.hpp"

namespace foggy {

struct RecallEntryView {
  std::string photo_id;
  std::string identity;
  Role role = Role::Clean;
  double dist = 0.0;
};

/// One query's recall set. Membership in the protected identity's lookup
/// subset is an identity test: photos count if they depict the ground-truth
/// person, whatever their provenance; protector decoys carry the protector's
/// identity and so never count.
struct QueryOutcome {
  std::string query_id;
  std::string truth;
  int k = 0;
  std::vector<RecallEntryView> recall;
};

inline QueryOutcome make_outcome(const LookupStore& store,
                                 const std::string& query_id,
                                 const std::string& truth, int k,
                                 const std::vector<Neighbor>& neighbors) {
  QueryOutcome o;
  o.query_id = query_id;
  o.truth = truth;
  o.k = k;
  o.recall.reserve(neighbors.size());
  for (const auto& n : neighbors) {
    const auto& e = store.entry(n.entry_index);
    o.recall.push_back({e.photo_id, e.identity, e.role, n.dist});
  }
  return o;
}

/// Fraction of the recall set depicting the true identity. The divisor is k
/// itself even when k exceeds the store size.
inline double recall_percentage(const QueryOutcome& o) {
  if (o.k < 1) throw ConfigError("recall_percentage: k must be >= 1");
  int hits = 0;
  for (const auto& e : o.recall)
    if (e.identity == o.truth) ++hits;
  return static_cast<double>(hits) / static_cast<double>(o.k);
}

/// 1 iff at least one clean photo of the true identity made the recall set.
inline int discovery(const QueryOutcome& o) {
  for (const auto& e : o.recall)
    if (e.identity == o.truth && e.role == Role::Clean) return 1;
  return 0;
}

/// 1 - (identities present in the recall set) / (identities in the store).
/// Low values mean the response could plausibly be anyone.
inline double identity_uniformity(const QueryOutcome& o,
                                  int total_identities) {
  if (total_identities < 1)
    throw EmptySetError("identity_uniformity: store has no identities");
  std::set<std::string> present;
  for (const auto& e : o.recall) present.insert(e.identity);
  return 1.0 - static_cast<double>(present.size()) /
                   static_cast<double>(total_identities);
}

inline double identity_uniformity(const QueryOutcome& o,
                                  const LookupStore& store) {
  return identity_uniformity(o, store.identity_count());
}

/// Sweep-cell coordinates a metric mean belongs to.
struct CellKey {
  std::string strategy;
  double epsilon = 0.0;
  int k = 0;
  double decoy_ratio = 0.0;
  int round = 1;
  std::string model_gen;
  std::string model_eval;

  bool operator<(const CellKey& other) const {
    auto tie = [](const CellKey& c) {
      return std::tie(c.strategy, c.epsilon, c.k, c.decoy_ratio, c.round,
                      c.model_gen, c.model_eval);
    };
    return tie(*this) < tie(other);
  }
};

struct IdentityBreakdown {
  double recall_mean = 0.0;
  double discovery_mean = 0.0;
  double idunif_mean = 0.0;
  int n_queries = 0;
};

struct MetricReport {
  CellKey key;
  double recall_mean = 0.0;
  double discovery_mean = 0.0;           // expectation over queries
  double discovery_identity_mean = 0.0;  // mean of per-identity means
  double idunif_mean = 0.0;
  int n_queries = 0;
  std::map<std::string, IdentityBreakdown> per_identity;
};

/// Deterministic reduction of per-query metrics into one cell report.
inline MetricReport aggregate_cell(const CellKey& key,
                                   const std::vector<QueryOutcome>& outcomes,
                                   int total_identities) {
  if (outcomes.empty()) throw EmptySetError("aggregate_cell: no outcomes");
  MetricReport rep;
  rep.key = key;
  rep.n_queries = static_cast<int>(outcomes.size());
  for (const auto& o : outcomes) {
    const double rp = recall_percentage(o);
    const double dr = discovery(o);
    const double iu = identity_uniformity(o, total_identities);
    rep.recall_mean += rp;
    rep.discovery_mean += dr;
    rep.idunif_mean += iu;
    auto& pid = rep.per_identity[o.truth];
    pid.recall_mean += rp;
    pid.discovery_mean += dr;
    pid.idunif_mean += iu;
    pid.n_queries += 1;
  }
  const double n = static_cast<double>(rep.n_queries);
  rep.recall_mean /= n;
  rep.discovery_mean /= n;
  rep.idunif_mean /= n;
  for (auto& [ident, pid] : rep.per_identity) {
    const double m = static_cast<double>(pid.n_queries);
    pid.recall_mean /= m;
    pid.discovery_mean /= m;
    pid.idunif_mean /= m;
    rep.discovery_identity_mean += pid.discovery_mean;
  }
  rep.discovery_identity_mean /= static_cast<double>(rep.per_identity.size());
  return rep;
}

/// Group outcomes by cell and aggregate each; empty cells are dropped with a
/// warning on stderr.
inline std::vector<MetricReport> aggregate(
    const std::map<CellKey, std::vector<QueryOutcome>>& by_cell,
    int total_identities) {
  std::vector<MetricReport> reports;
  for (const auto& [key, outcomes] : by_cell) {
    if (outcomes.empty()) {
      std::fprintf(stderr, "warning: empty metric cell omitted (k=%d)\n",
                   key.k);
      continue;
    }
    reports.push_back(aggregate_cell(key, outcomes, total_identities));
  }
  return reports;
}

}  // namespace foggy
