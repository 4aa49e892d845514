#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "foggy/config.hpp"
#include "foggy/decoygen.hpp"
#include "foggy/lookup.hpp"
#include "foggy/metrics.hpp"
#include "foggy/parallel.hpp"
#include "foggy/report.hpp"
#include "foggy/synthpeople.hpp"
#include "foggy/targeting.hpp"
#include "foggy/version.hpp"

namespace foggy {

struct GateReport {
  double baseline_recall_at_1 = 0.0;
  double intra = 0.0;
  double inter = 0.0;
};

namespace detail {

struct ModelsBundle {
  std::vector<EmbedNet> generation;
  EmbedNet evaluation;
  std::string gen_id;
};

inline ModelsBundle build_models(const ScenarioConfig& cfg) {
  ModelsBundle b;
  const int n0 = cfg.dataset.width * cfg.dataset.height * cfg.dataset.channels;
  for (const auto& ms : cfg.generation_models) {
    b.generation.push_back(EmbedNet::from_seed(ms.seed, n0, ms.hidden));
    if (!b.gen_id.empty()) b.gen_id += '+';
    b.gen_id += b.generation.back().id();
  }
  b.evaluation = EmbedNet::from_seed(cfg.evaluation_model.seed, n0,
                                     cfg.evaluation_model.hidden);
  return b;
}

inline std::vector<LookupItem> clean_items(const SynthDataset& ds) {
  std::vector<LookupItem> items;
  items.reserve(ds.photos.size());
  for (const auto& p : ds.photos)
    items.push_back({p.photo_id, p.identity, Role::Clean, p.image, {}});
  return items;
}

}  // namespace detail

/// Hard preconditions for every experiment: the undefended store must
/// identify queries (mean recall at k=1 >= 0.9) and same-identity photos
/// must embed closer together than cross-identity ones.
inline GateReport run_baseline_gate(const SynthDataset& ds,
                                    const EmbedNet& model) {
  GateReport rep;
  const auto quality = cluster_quality(ds, model);
  rep.intra = quality.intra;
  if (!quality.inter)
    throw GateError("baseline gate: need at least two identities");
  rep.inter = *quality.inter;
  if (!(rep.intra < rep.inter))
    throw GateError("baseline gate: intra-identity distance not below inter");

  const auto store = LookupStore::build(detail::clean_items(ds), model);
  double hits = 0;
  for (const auto& q : ds.queries) {
    const auto nn = top_k(store, q.image, model, 1);
    if (store.entry(nn.front().entry_index).identity == q.identity) hits += 1;
  }
  rep.baseline_recall_at_1 = hits / static_cast<double>(ds.queries.size());
  if (rep.baseline_recall_at_1 < 0.9)
    throw GateError("baseline gate: undefended recall@1 below 0.9");
  return rep;
}

namespace detail {

struct DecoyPool {
  std::map<std::string, std::vector<LookupItem>> by_protected;
  long long count = 0;
  long long violations = 0;
};

/// Generate the decoy pool for every protected identity at a fixed epsilon.
/// Per protected, decoys cycle round-robin over the (seed-shuffled)
/// protectors, so any prefix of the list keeps the balance invariant; sweeps
/// over smaller ratios reuse prefixes instead of re-attacking.
inline DecoyPool generate_decoy_pool(
    const SynthDataset& ds, const LookupStore& defender_view,
    const ModelEnsemble& gen, const std::string& gen_id, TargetKind strategy,
    double epsilon, int decoys_per_protected, const AttackPreset& preset,
    std::uint64_t master_seed, std::uint64_t salt, unsigned threads) {
  DecoyPool pool;
  if (decoys_per_protected < 1) return pool;

  SeededRng assign_rng(master_seed, stream_id(streams::kAssignment, salt));
  const auto assignment = assign_protectors(
      ds.identities, ds.identities, decoys_per_protected, assign_rng);

  std::vector<TransformSpec> transforms;
  if (preset.transform_preset == "eot")
    transforms = eot_default_preset(ds.spec.width, ds.spec.height,
                                    ds.spec.channels, preset.noise_sigma);

  struct Job {
    std::string protected_id;
    std::string photo_id;
    std::string protector;
    const Image* source = nullptr;
    Embedding target;
  };
  std::vector<Job> jobs;

  std::map<std::string, std::vector<const SynthPhoto*>> photos_of;
  for (const auto& p : ds.photos) photos_of[p.identity].push_back(&p);

  for (std::size_t ii = 0; ii < ds.identities.size(); ++ii) {
    const std::string& protd = ds.identities[ii];
    const auto& shares = assignment.shares.at(protd);
    std::vector<std::string> cycle;
    for (const auto& [protector, count] : shares) cycle.push_back(protector);

    SeededRng target_rng(master_seed,
                         stream_id(streams::kTargets, salt * 100000 + ii));
    const auto targets = choose_targets(strategy, protd, defender_view,
                                        decoys_per_protected, target_rng);

    SeededRng photo_rng(
        master_seed,
        stream_id(streams::kAssignment, salt * 100000 + 50000 + ii));
    std::map<std::string, std::vector<std::size_t>> photo_order;
    std::map<std::string, std::size_t> cursor;
    for (const auto& protector : cycle) {
      std::vector<std::size_t> order(photos_of.at(protector).size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      photo_rng.shuffle(order);
      photo_order[protector] = std::move(order);
      cursor[protector] = 0;
    }

    for (int s = 0; s < decoys_per_protected; ++s) {
      const std::string& protector = cycle[s % cycle.size()];
      const auto& order = photo_order.at(protector);
      const std::size_t src = order[cursor[protector]++ % order.size()];
      Job job;
      job.protected_id = protd;
      job.photo_id = protd + "-d" + zero_pad(s, 4) + "-" + protector;
      job.protector = protector;
      job.source = &photos_of.at(protector)[src]->image;
      job.target = targets[s];
      jobs.push_back(std::move(job));
    }
  }

  std::vector<AttackResult> results(jobs.size());
  parallel_for(
      jobs.size(),
      [&](std::size_t j) {
        AttackConfig cfg;
        cfg.epsilon = epsilon;
        cfg.alpha = preset.alpha;
        cfg.max_iterations = preset.max_iterations;
        cfg.patience = preset.patience;
        cfg.step_rule = preset.step_rule;
        cfg.transforms = transforms;
        cfg.eot_samples = preset.eot_samples;
        cfg.models = &gen;
        cfg.rng = SeededRng(master_seed,
                            stream_id(streams::kAttack, salt * 1000000 + j));
        results[j] = generate_decoy(*jobs[j].source, jobs[j].target, cfg);
      },
      threads);

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto& job = jobs[j];
    Provenance prov{to_string(strategy), epsilon, gen_id, job.protected_id};
    pool.by_protected[job.protected_id].push_back(
        {job.photo_id, job.protector, Role::Decoy, results[j].adversarial,
         prov});
    pool.count += 1;
    if (!results[j].constraint_satisfied) pool.violations += 1;
  }
  return pool;
}

inline LookupStore poisoned_store(const SynthDataset& ds,
                                  const DecoyPool& pool, double ratio,
                                  const EmbedNet& eval_model) {
  auto items = clean_items(ds);
  const int per_protected =
      static_cast<int>(std::lround(ratio * ds.spec.photos_per_identity));
  for (const auto& ident : ds.identities) {
    auto it = pool.by_protected.find(ident);
    if (it == pool.by_protected.end()) continue;
    const int take =
        std::min<int>(per_protected, static_cast<int>(it->second.size()));
    for (int i = 0; i < take; ++i) items.push_back(it->second[i]);
  }
  return LookupStore::build(items, eval_model);
}

/// Evaluate every query against the store and accumulate per-(cell, k)
/// outcomes. One ranking pass per query serves every k via the prefix
/// property of top_k.
inline void evaluate_into(std::map<CellKey, std::vector<QueryOutcome>>& acc,
                          const LookupStore& store, const EmbedNet& eval_model,
                          const SynthDataset& ds,
                          const std::vector<int>& k_grid, CellKey proto) {
  int max_k = 1;
  for (int k : k_grid) max_k = std::max(max_k, k);
  proto.model_eval = eval_model.id();
  for (const auto& q : ds.queries) {
    const auto ranked = top_k(store, q.image, eval_model, max_k);
    for (int k : k_grid) {
      const std::size_t kk = std::min<std::size_t>(k, ranked.size());
      const std::vector<Neighbor> prefix(ranked.begin(), ranked.begin() + kk);
      CellKey key = proto;
      key.k = k;
      acc[key].push_back(
          make_outcome(store, q.photo_id, q.identity, k, prefix));
    }
  }
}

inline std::string join_doubles(const std::vector<double>& vs) {
  std::string out;
  for (double v : vs) {
    if (!out.empty()) out += ',';
    out += fmt(v);
  }
  return out;
}

inline std::string join_ints(const std::vector<int>& vs) {
  std::string out;
  for (int v : vs) {
    if (!out.empty()) out += ',';
    out += std::to_string(v);
  }
  return out;
}

inline void echo_config(RunRecord& rec, const ScenarioConfig& cfg,
                        const ModelsBundle& models) {
  auto& c = rec.config;
  c.emplace_back("seed", std::to_string(cfg.master_seed));
  c.emplace_back("out", cfg.out_dir);
  c.emplace_back("threads", std::to_string(cfg.threads));
  c.emplace_back("pixel_domain", "0..1");
  c.emplace_back("dataset.identities", std::to_string(cfg.dataset.identity_count));
  c.emplace_back("dataset.photos", std::to_string(cfg.dataset.photos_per_identity));
  c.emplace_back("dataset.queries", std::to_string(cfg.dataset.queries_per_identity));
  c.emplace_back("dataset.width", std::to_string(cfg.dataset.width));
  c.emplace_back("dataset.height", std::to_string(cfg.dataset.height));
  c.emplace_back("dataset.channels", std::to_string(cfg.dataset.channels));
  c.emplace_back("dataset.jitter_brightness", fmt(cfg.dataset.jitter.brightness));
  c.emplace_back("dataset.jitter_noise_sigma", fmt(cfg.dataset.jitter.noise_sigma));
  c.emplace_back("dataset.jitter_translation",
                 std::to_string(cfg.dataset.jitter.max_translation));
  c.emplace_back("dataset.identity_blend", fmt(cfg.dataset.identity_blend));
  c.emplace_back("targets.strategy", to_string(cfg.strategy));
  c.emplace_back("sweep.epsilons", join_doubles(cfg.epsilon_grid));
  c.emplace_back("sweep.ks", join_ints(cfg.k_grid));
  c.emplace_back("sweep.ratios", join_doubles(cfg.decoy_ratios));
  if (cfg.scenario == "solo-subsample")
    c.emplace_back("sweep.subsample_rates", join_doubles(cfg.subsample_rates));
  if (cfg.scenario == "loss-profile")
    c.emplace_back("sweep.profile_jobs", std::to_string(cfg.profile_jobs));
  std::string gen_specs;
  for (const auto& ms : cfg.generation_models) {
    if (!gen_specs.empty()) gen_specs += ',';
    gen_specs += ms.text();
  }
  c.emplace_back("models.generation", gen_specs);
  c.emplace_back("models.generation_ids", models.gen_id);
  c.emplace_back("models.evaluation", cfg.evaluation_model.text());
  c.emplace_back("models.evaluation_id", models.evaluation.id());
  c.emplace_back("attack.alpha", fmt(cfg.attack.alpha));
  c.emplace_back("attack.iterations", std::to_string(cfg.attack.max_iterations));
  c.emplace_back("attack.patience", std::to_string(cfg.attack.patience));
  c.emplace_back("attack.step_rule", to_string(cfg.attack.step_rule));
  c.emplace_back("attack.transforms", cfg.attack.transform_preset);
  c.emplace_back("attack.noise_sigma", fmt(cfg.attack.noise_sigma));
  c.emplace_back("attack.eot_samples", std::to_string(cfg.attack.eot_samples));
  c.emplace_back("attack.solo_init_sigma", "epsilon/3");
  if (cfg.scenario == "top1-oracle")
    c.emplace_back("oracle.tau_percentile", fmt(cfg.tau_percentile));
}

// Community engine shared by community-sweep, ratio-sweep, multi-round and
// top1-oracle: per epsilon one decoy pool at the largest ratio, then one
// poisoned store per ratio.
struct CommunityRun {
  std::map<CellKey, std::vector<QueryOutcome>> outcomes;
  std::map<double, LookupStore> stores_by_ratio;  // last epsilon's stores
  DecoyPool pool;                                 // last epsilon's pool
  long long decoys = 0;
  long long violations = 0;
  int total_identities = 0;
};

inline CommunityRun run_community(const SynthDataset& ds,
                                  const ScenarioConfig& cfg,
                                  const ModelsBundle& models,
                                  const LookupStore& defender_view,
                                  TargetKind strategy, int round,
                                  std::uint64_t salt_base) {
  CommunityRun run;
  const ModelEnsemble gen(models.generation);
  double max_ratio = 0;
  for (double r : cfg.decoy_ratios) max_ratio = std::max(max_ratio, r);
  const int pool_size = static_cast<int>(
      std::lround(max_ratio * ds.spec.photos_per_identity));

  for (std::size_t ei = 0; ei < cfg.epsilon_grid.size(); ++ei) {
    const double eps = cfg.epsilon_grid[ei];
    const std::uint64_t salt = salt_base + ei;
    DecoyPool pool;
    if (pool_size > 0)
      pool = generate_decoy_pool(ds, defender_view, gen, models.gen_id,
                                 strategy, eps, pool_size, cfg.attack,
                                 cfg.master_seed, salt, cfg.threads);
    run.decoys += pool.count;
    run.violations += pool.violations;

    std::map<double, LookupStore> stores;
    for (double ratio : cfg.decoy_ratios) {
      LookupStore store = poisoned_store(ds, pool, ratio, models.evaluation);
      run.total_identities = store.identity_count();
      CellKey proto;
      proto.strategy = to_string(strategy);
      proto.epsilon = eps;
      proto.decoy_ratio = ratio;
      proto.round = round;
      proto.model_gen = models.gen_id;
      evaluate_into(run.outcomes, store, models.evaluation, ds, cfg.k_grid,
                    proto);
      stores.emplace(ratio, std::move(store));
    }
    run.stores_by_ratio = std::move(stores);
    run.pool = std::move(pool);
  }
  return run;
}

}  // namespace detail

/// Orchestrate one named experiment end to end: dataset, baseline gate,
/// decoy generation, poisoned stores, metric aggregation.
inline RunRecord run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.version = kVersion;
  rec.scenario = cfg.scenario;

  SynthDataset ds = generate(cfg.dataset);
  const auto models = detail::build_models(cfg);
  detail::echo_config(rec, cfg, models);

  const auto gate = run_baseline_gate(ds, models.evaluation);
  rec.config.emplace_back("gate.baseline_recall_at_1",
                          detail::fmt(gate.baseline_recall_at_1));
  rec.config.emplace_back("gate.intra_distance", detail::fmt(gate.intra));
  rec.config.emplace_back("gate.inter_distance", detail::fmt(gate.inter));

  const EmbedNet& defender_model = models.generation.front();
  std::map<CellKey, std::vector<QueryOutcome>> outcomes;
  int total_identities = cfg.dataset.identity_count;

  if (cfg.scenario == "loss-profile") {
    const LookupStore defender_view =
        LookupStore::build(detail::clean_items(ds), defender_model);
    const ModelEnsemble gen(models.generation);
    std::vector<DecoyJob> jobs;
    SeededRng job_rng(cfg.master_seed, stream_id(streams::kScenario, 1));
    const int identities = cfg.dataset.identity_count;
    for (int j = 0; j < cfg.profile_jobs; ++j) {
      const int src_ident = j % identities;
      const int tgt_ident = (src_ident + 1) % identities;
      const auto& src_entries = defender_view.entries_of(ds.identities[src_ident]);
      const std::size_t src_index =
          src_entries[job_rng.uniform_int(src_entries.size())];
      SeededRng tgt_rng(cfg.master_seed,
                        stream_id(streams::kTargets, 900000 + j));
      auto targets = choose_targets(TargetKind::RandomLookup,
                                    ds.identities[tgt_ident], defender_view, 1,
                                    tgt_rng);
      jobs.push_back({defender_view.image(src_index), std::move(targets[0])});
    }
    AttackConfig base;
    base.alpha = cfg.attack.alpha;
    base.max_iterations = cfg.attack.max_iterations;
    base.patience = cfg.attack.patience;
    base.step_rule = cfg.attack.step_rule;
    base.eot_samples = cfg.attack.eot_samples;
    base.models = &gen;
    base.rng = SeededRng(cfg.master_seed, stream_id(streams::kScenario, 2));
    rec.profile = loss_vs_epsilon_profile(jobs, cfg.epsilon_grid, base);
    for (const auto& row : rec.profile) {
      rec.decoys_generated += static_cast<long long>(row.final_losses.size());
      rec.constraint_violations += row.constraint_violations;
    }
  } else if (cfg.scenario == "community-sweep" || cfg.scenario == "ratio-sweep") {
    const LookupStore defender_view =
        LookupStore::build(detail::clean_items(ds), defender_model);
    auto run = detail::run_community(ds, cfg, models, defender_view,
                                     cfg.strategy, 1, 10);
    outcomes = std::move(run.outcomes);
    total_identities = run.total_identities;
    rec.decoys_generated = run.decoys;
    rec.constraint_violations = run.violations;
  } else if (cfg.scenario == "multi-round") {
    const LookupStore defender_view =
        LookupStore::build(detail::clean_items(ds), defender_model);
    auto round1 = detail::run_community(ds, cfg, models, defender_view,
                                        cfg.strategy, 1, 10);
    // Round 2 targets are drawn from the decoys already in the store, so the
    // defender view must be the poisoned store of round 1 (largest ratio).
    double max_ratio = 0;
    for (double r : cfg.decoy_ratios) max_ratio = std::max(max_ratio, r);
    const LookupStore round1_view = [&] {
      auto items = detail::clean_items(ds);
      for (const auto& [ident, decoys] : round1.pool.by_protected) {
        const int take = static_cast<int>(
            std::min<std::size_t>(decoys.size(),
                                  static_cast<std::size_t>(std::lround(
                                      max_ratio * ds.spec.photos_per_identity))));
        for (int i = 0; i < take; ++i) items.push_back(decoys[i]);
      }
      return LookupStore::build(items, defender_model);
    }();
    auto round2 = detail::run_community(ds, cfg, models, round1_view,
                                        TargetKind::DecoyRetarget, 2, 500);
    outcomes = std::move(round1.outcomes);
    for (auto& [key, val] : round2.outcomes)
      outcomes.emplace(key, std::move(val));
    total_identities = round1.total_identities;
    rec.decoys_generated = round1.decoys + round2.decoys;
    rec.constraint_violations = round1.violations + round2.violations;
  } else if (cfg.scenario == "solo-subsample") {
    const ModelEnsemble gen(models.generation);
    std::map<std::string, std::vector<const SynthPhoto*>> photos_of;
    for (const auto& p : ds.photos) photos_of[p.identity].push_back(&p);
    double max_rate = 0;
    for (double r : cfg.subsample_rates) max_rate = std::max(max_rate, r);

    for (std::size_t ei = 0; ei < cfg.epsilon_grid.size(); ++ei) {
      const double eps = cfg.epsilon_grid[ei];
      // per identity: seeded photo order; the first ceil(rate*n) photos of
      // that order are the ones the individual managed to modify
      struct SoloJob {
        const SynthPhoto* photo;
        Image modified;
      };
      std::map<std::string, std::vector<SoloJob>> jobs_of;
      std::vector<SoloJob*> flat;
      for (std::size_t ii = 0; ii < ds.identities.size(); ++ii) {
        const auto& ident = ds.identities[ii];
        auto photos = photos_of.at(ident);
        SeededRng order_rng(cfg.master_seed,
                            stream_id(streams::kScenario, 700 + ii));
        order_rng.shuffle(photos);
        const int n_mod = static_cast<int>(
            std::ceil(max_rate * static_cast<double>(photos.size())));
        auto& jobs = jobs_of[ident];
        for (int i = 0; i < n_mod; ++i) jobs.push_back({photos[i], {}});
      }
      for (auto& [ident, jobs] : jobs_of)
        for (auto& j : jobs) flat.push_back(&j);

      rec.decoys_generated += static_cast<long long>(flat.size());
      std::vector<char> ok(flat.size(), 1);
      parallel_for(
          flat.size(),
          [&](std::size_t j) {
            AttackConfig acfg;
            acfg.epsilon = eps;
            acfg.alpha = cfg.attack.alpha;
            acfg.max_iterations = cfg.attack.max_iterations;
            acfg.patience = cfg.attack.patience;
            acfg.step_rule = cfg.attack.step_rule;
            acfg.eot_samples = cfg.attack.eot_samples;
            acfg.models = &gen;
            acfg.rng = SeededRng(
                cfg.master_seed,
                stream_id(streams::kAttack, (1000 + ei) * 1000000 + j));
            const auto res = solo_attack(flat[j]->photo->image, acfg);
            flat[j]->modified = res.adversarial;
            ok[j] = res.constraint_satisfied ? 1 : 0;
          },
          cfg.threads);
      for (char c : ok)
        if (!c) rec.constraint_violations += 1;

      for (double rate : cfg.subsample_rates) {
        std::vector<LookupItem> items;
        for (const auto& [ident, jobs] : jobs_of) {
          const auto& photos = photos_of.at(ident);
          const int n_mod = static_cast<int>(
              std::ceil(rate * static_cast<double>(photos.size())));
          std::map<std::string, const Image*> replaced;
          const int take = std::min(n_mod, static_cast<int>(jobs.size()));
          for (int i = 0; i < take; ++i)
            replaced[jobs[i].photo->photo_id] = &jobs[i].modified;
          for (const auto* p : photos) {
            auto it = replaced.find(p->photo_id);
            if (it != replaced.end())
              items.push_back({p->photo_id, ident, Role::Clean, *it->second,
                               Provenance{"solo", eps, models.gen_id, ident}});
            else
              items.push_back({p->photo_id, ident, Role::Clean, p->image, {}});
          }
        }
        std::sort(items.begin(), items.end(),
                  [](const LookupItem& a, const LookupItem& b) {
                    return a.photo_id < b.photo_id;
                  });
        LookupStore store = LookupStore::build(items, models.evaluation);
        total_identities = store.identity_count();
        CellKey proto;
        proto.strategy = "solo";
        proto.epsilon = eps;
        proto.decoy_ratio = rate;  // ratio column carries the subsample rate
        proto.round = 1;
        proto.model_gen = models.gen_id;
        detail::evaluate_into(outcomes, store, models.evaluation, ds,
                              cfg.k_grid, proto);
      }
    }
  } else if (cfg.scenario == "transfer") {
    // decoys are built against the generation ensemble; metrics are reported
    // both on a generation member ("direct") and on the unseen evaluation
    // model ("transfer")
    run_baseline_gate(ds, models.generation.front());
    const LookupStore defender_view =
        LookupStore::build(detail::clean_items(ds), defender_model);
    const ModelEnsemble gen(models.generation);
    double max_ratio = 0;
    for (double r : cfg.decoy_ratios) max_ratio = std::max(max_ratio, r);
    const int pool_size = static_cast<int>(
        std::lround(max_ratio * ds.spec.photos_per_identity));

    for (std::size_t ei = 0; ei < cfg.epsilon_grid.size(); ++ei) {
      const double eps = cfg.epsilon_grid[ei];
      detail::DecoyPool pool;
      if (pool_size > 0)
        pool = detail::generate_decoy_pool(
            ds, defender_view, gen, models.gen_id, cfg.strategy, eps,
            pool_size, cfg.attack, cfg.master_seed, 300 + ei, cfg.threads);
      rec.decoys_generated += pool.count;
      rec.constraint_violations += pool.violations;

      for (double ratio : cfg.decoy_ratios) {
        LookupStore store =
            detail::poisoned_store(ds, pool, ratio, models.evaluation);
        store.add_model(models.generation.front());
        total_identities = store.identity_count();
        CellKey proto;
        proto.strategy = to_string(cfg.strategy);
        proto.epsilon = eps;
        proto.decoy_ratio = ratio;
        proto.round = 1;
        proto.model_gen = models.gen_id;
        detail::evaluate_into(outcomes, store, models.evaluation, ds,
                              cfg.k_grid, proto);
        detail::evaluate_into(outcomes, store, models.generation.front(), ds,
                              cfg.k_grid, proto);
      }
    }
  } else if (cfg.scenario == "top1-oracle") {
    const LookupStore defender_view =
        LookupStore::build(detail::clean_items(ds), defender_model);
    const LookupStore clean_store =
        LookupStore::build(detail::clean_items(ds), models.evaluation);
    const double tau = calibrate_threshold(clean_store, ds.queries,
                                           models.evaluation,
                                           cfg.tau_percentile);
    rec.config.emplace_back("oracle.tau", detail::fmt(tau));

    auto run = detail::run_community(ds, cfg, models, defender_view,
                                     cfg.strategy, 1, 10);
    outcomes = std::move(run.outcomes);
    total_identities = run.total_identities;
    rec.decoys_generated = run.decoys;
    rec.constraint_violations = run.violations;

    const double eps = cfg.epsilon_grid.back();
    for (const auto& [ratio, store] : run.stores_by_ratio) {
      Top1Row row;
      row.epsilon = eps;
      row.ratio = ratio;
      row.tau = tau;
      int correct = 0, no_match = 0;
      for (const auto& q : ds.queries) {
        const auto id = identify_top1(store, q.image, models.evaluation, tau);
        if (!id)
          ++no_match;
        else if (*id == q.identity)
          ++correct;
      }
      row.n_queries = static_cast<int>(ds.queries.size());
      row.correct_rate = static_cast<double>(correct) / row.n_queries;
      row.no_match_rate = static_cast<double>(no_match) / row.n_queries;
      rec.top1.push_back(row);
    }
  }

  if (!outcomes.empty()) rec.cells = aggregate(outcomes, total_identities);

  rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rec;
}

// --- strategy comparison --------------------------------------------------

struct StrategyCellEntry {
  std::string strategy;
  double recall = 0.0;
  double discovery = 0.0;
  double idunif = 0.0;
};

struct StrategyCell {
  double epsilon = 0.0;
  int k = 0;
  double ratio = 0.0;
  int round = 1;
  std::string model_eval;
  std::vector<StrategyCellEntry> ranked;  // by discovery then recall, ascending
};

/// Line up records that share sweep grids and rank strategies per cell.
inline std::vector<StrategyCell> compare_strategies(
    const std::vector<RunRecord>& records) {
  if (records.empty()) throw ComparisonError("compare_strategies: no records");
  using Axes = std::tuple<double, int, double, int, std::string>;
  std::map<Axes, std::vector<StrategyCellEntry>> cells;
  std::map<Axes, std::size_t> seen_in_records;

  for (const auto& rec : records) {
    std::set<Axes> seen_here;
    for (const auto& cell : rec.cells) {
      const Axes axes{cell.key.epsilon, cell.key.k, cell.key.decoy_ratio,
                      cell.key.round, cell.key.model_eval};
      cells[axes].push_back({cell.key.strategy, cell.recall_mean,
                             cell.discovery_mean, cell.idunif_mean});
      seen_here.insert(axes);
    }
    for (const auto& axes : seen_here) seen_in_records[axes] += 1;
  }
  for (const auto& [axes, count] : seen_in_records)
    if (count != records.size())
      throw ComparisonError(
          "compare_strategies: records do not share sweep grids");

  std::vector<StrategyCell> out;
  for (auto& [axes, entries] : cells) {
    StrategyCell cell;
    std::tie(cell.epsilon, cell.k, cell.ratio, cell.round, cell.model_eval) =
        axes;
    std::sort(entries.begin(), entries.end(),
              [](const StrategyCellEntry& a, const StrategyCellEntry& b) {
                if (a.discovery != b.discovery) return a.discovery < b.discovery;
                if (a.recall != b.recall) return a.recall < b.recall;
                return a.strategy < b.strategy;
              });
    cell.ranked = std::move(entries);
    out.push_back(std::move(cell));
  }
  return out;
}

inline std::string comparison_csv(const std::vector<StrategyCell>& cells) {
  std::string out =
      "epsilon,k,decoy_ratio,round,model_eval,rank,strategy,recall,discovery,"
      "idunif,delta_recall_vs_best,delta_discovery_vs_best\n";
  for (const auto& cell : cells) {
    for (std::size_t r = 0; r < cell.ranked.size(); ++r) {
      const auto& e = cell.ranked[r];
      out += detail::fmt(cell.epsilon);
      out += ',';
      out += std::to_string(cell.k);
      out += ',';
      out += detail::fmt(cell.ratio);
      out += ',';
      out += std::to_string(cell.round);
      out += ',';
      out += cell.model_eval;
      out += ',';
      out += std::to_string(r + 1);
      out += ',';
      out += e.strategy;
      out += ',';
      out += detail::fmt(e.recall);
      out += ',';
      out += detail::fmt(e.discovery);
      out += ',';
      out += detail::fmt(e.idunif);
      out += ',';
      out += detail::fmt(e.recall - cell.ranked.front().recall);
      out += ',';
      out += detail::fmt(e.discovery - cell.ranked.front().discovery);
      out += '\n';
    }
  }
  return out;
}

}  // namespace foggy
