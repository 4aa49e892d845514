#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "foggy/embednet.hpp"
#include "foggy/error.hpp"
#include "foggy/numerics.hpp"
#include "foggy/rng.hpp"
#include "foggy/transforms.hpp"

namespace foggy {

enum class StepRule { Sign, Raw, Normalized };

inline std::string to_string(StepRule r) {
  switch (r) {
    case StepRule::Sign: return "sign";
    case StepRule::Raw: return "raw";
    case StepRule::Normalized: return "normalized";
  }
  return "?";
}

inline StepRule parse_step_rule(const std::string& s) {
  if (s == "sign") return StepRule::Sign;
  if (s == "raw") return StepRule::Raw;
  if (s == "normalized") return StepRule::Normalized;
  throw ConfigError("unknown step rule: " + s);
}

struct AttackConfig {
  double epsilon = 0.06;  // L-inf budget in pixel units
  double alpha = 0.1;
  int max_iterations = 400;
  int patience = 10;  // iterations without loss decline before stopping
  StepRule step_rule = StepRule::Sign;
  std::vector<TransformSpec> transforms;  // empty = plain objective
  int eot_samples = 1;   // transform draws averaged per iteration
  const ModelEnsemble* models = nullptr;
  SeededRng rng;  // owns transform sampling and the solo-attack init

  void validate() const {
    if (epsilon < 0) throw ConfigError("AttackConfig: epsilon must be >= 0");
    if (alpha <= 0) throw ConfigError("AttackConfig: alpha must be > 0");
    if (max_iterations < 1)
      throw ConfigError("AttackConfig: max iterations must be >= 1");
    if (patience < 1) throw ConfigError("AttackConfig: patience must be >= 1");
    if (eot_samples < 1)
      throw ConfigError("AttackConfig: eot samples must be >= 1");
    if (!models) throw ConfigError("AttackConfig: no model ensemble");
  }
};

struct AttackResult {
  Image adversarial;
  double initial_loss = 0.0;
  double final_loss = 0.0;  // best objective value seen
  int iterations_used = 0;
  std::vector<double> loss_trace;  // [0] is the initial plain loss
  bool constraint_satisfied = false;
};

/// One constrained optimization instance.
struct DecoyJob {
  Image source;
  Embedding target;
};

namespace detail {

inline void check_finite(double loss) {
  if (!std::isfinite(loss))
    throw AttackAbortError("attack aborted: non-finite loss");
}

// Projection onto the L-inf ball around the source intersected with the
// pixel box.
inline void project(std::vector<double>& delta, const std::vector<double>& x,
                    double eps) {
  for (std::size_t i = 0; i < delta.size(); ++i) {
    double d = std::clamp(delta[i], -eps, eps);
    d = std::clamp(d, -x[i], 1.0 - x[i]);
    delta[i] = d;
  }
}

inline void apply_step(std::vector<double>& delta, const Grid& grad,
                       double alpha, StepRule rule, int direction) {
  const double sgn = static_cast<double>(direction);
  switch (rule) {
    case StepRule::Sign:
      for (std::size_t i = 0; i < delta.size(); ++i) {
        const double g = grad.values[i];
        if (g > 0)
          delta[i] += sgn * alpha;
        else if (g < 0)
          delta[i] -= sgn * alpha;
      }
      break;
    case StepRule::Raw:
      for (std::size_t i = 0; i < delta.size(); ++i)
        delta[i] += sgn * alpha * grad.values[i];
      break;
    case StepRule::Normalized: {
      double n = 0.0;
      for (double g : grad.values) n += g * g;
      n = std::sqrt(n);
      if (n > 0)
        for (std::size_t i = 0; i < delta.size(); ++i)
          delta[i] += sgn * alpha * grad.values[i] / n;
      break;
    }
  }
}

// Objective and gradient w.r.t. delta at the current iterate. Targets are
// per-member; with transforms the expectation is estimated by eot_samples
// fresh draws.
inline EmbedNet::LossGrad evaluate(const AttackConfig& cfg, SeededRng& rng,
                                   const Image& iterate,
                                   const std::vector<Embedding>& targets) {
  const auto& members = cfg.models->members();
  EmbedNet::LossGrad acc;
  acc.grad = Grid::zeros(iterate.width, iterate.height, iterate.channels);
  if (cfg.transforms.empty()) {
    for (std::size_t j = 0; j < members.size(); ++j) {
      const auto lg = members[j].loss_and_input_gradient(iterate, targets[j]);
      acc.loss += lg.loss;
      for (std::size_t i = 0; i < acc.grad.values.size(); ++i)
        acc.grad.values[i] += lg.grad.values[i];
    }
    return acc;
  }
  for (int s = 0; s < cfg.eot_samples; ++s) {
    const auto chain = sample_chain(cfg.transforms, rng);
    const auto fwd = apply_chain(chain, iterate);
    Grid up = Grid::zeros(iterate.width, iterate.height, iterate.channels);
    double loss = 0.0;
    for (std::size_t j = 0; j < members.size(); ++j) {
      const auto lg = members[j].loss_and_input_gradient(fwd.output, targets[j]);
      loss += lg.loss;
      for (std::size_t i = 0; i < up.values.size(); ++i)
        up.values[i] += lg.grad.values[i];
    }
    const Grid g = backprop_chain(chain, fwd, up);
    acc.loss += loss;
    for (std::size_t i = 0; i < acc.grad.values.size(); ++i)
      acc.grad.values[i] += g.values[i];
  }
  acc.loss /= cfg.eot_samples;
  for (auto& g : acc.grad.values) g /= cfg.eot_samples;
  return acc;
}

// Plain objective (no transforms) at the iterate; used for the trace origin
// and the returned best iterate's loss accounting.
inline double plain_loss(const AttackConfig& cfg, const Image& iterate,
                         const std::vector<Embedding>& targets) {
  double loss = 0.0;
  const auto& members = cfg.models->members();
  for (std::size_t j = 0; j < members.size(); ++j)
    loss += distance(members[j].forward(iterate), targets[j]);
  return loss;
}

inline bool within_constraints(const Image& adv, const Image& src, double eps) {
  for (std::size_t i = 0; i < adv.pixels.size(); ++i) {
    if (std::abs(adv.pixels[i] - src.pixels[i]) > eps + 1e-6) return false;
    if (adv.pixels[i] < 0.0 || adv.pixels[i] > 1.0) return false;
  }
  return true;
}

// Shared projected-gradient loop. direction -1 descends (targeted decoys),
// +1 ascends (solo self-distance attack); "improvement" follows direction.
inline AttackResult pgd_run(const Image& x,
                            const std::vector<Embedding>& targets,
                            AttackConfig cfg, int direction,
                            std::vector<double> delta0) {
  cfg.validate();
  if (static_cast<int>(x.pixels.size()) != cfg.models->input_size())
    throw ShapeError("attack: image shape does not match model input");
  SeededRng rng = cfg.rng;

  std::vector<double> delta = std::move(delta0);
  project(delta, x.pixels, cfg.epsilon);
  auto materialize = [&x](const std::vector<double>& d) {
    Image img = x;
    for (std::size_t i = 0; i < d.size(); ++i)
      img.pixels[i] = std::clamp(x.pixels[i] + d[i], 0.0, 1.0);
    return img;
  };
  Image iterate = materialize(delta);

  AttackResult res;
  res.initial_loss = plain_loss(cfg, iterate, targets);
  check_finite(res.initial_loss);
  res.loss_trace.push_back(res.initial_loss);

  double best_loss = res.initial_loss;
  std::vector<double> best_delta = delta;
  const auto improved = [direction](double cur, double best) {
    return direction < 0 ? cur < best : cur > best;
  };
  const auto improved_meaningfully = [direction](double cur, double best) {
    return direction < 0 ? cur < best - 1e-9 : cur > best + 1e-9;
  };

  int stall = 0;
  if (!(direction < 0 && res.initial_loss <= 0.0)) {
    auto lg = evaluate(cfg, rng, iterate, targets);
    check_finite(lg.loss);
    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
      res.iterations_used = iter;
      apply_step(delta, lg.grad, cfg.alpha, cfg.step_rule, direction);
      project(delta, x.pixels, cfg.epsilon);
      iterate = materialize(delta);

      lg = evaluate(cfg, rng, iterate, targets);
      check_finite(lg.loss);
      res.loss_trace.push_back(lg.loss);

      if (improved_meaningfully(lg.loss, best_loss))
        stall = 0;
      else
        ++stall;
      if (improved(lg.loss, best_loss)) {
        best_loss = lg.loss;
        best_delta = delta;
      }
      if (direction < 0 && best_loss <= 0.0) break;
      if (stall >= cfg.patience) break;
    }
  }

  res.final_loss = best_loss;
  res.adversarial = materialize(best_delta);
  res.constraint_satisfied = within_constraints(res.adversarial, x, cfg.epsilon);
  return res;
}

}  // namespace detail

/// Targeted decoy generation: minimize the (ensemble, optionally EOT)
/// distance to the target vector under the L-inf and pixel-box constraints,
/// returning the best-loss iterate.
inline AttackResult generate_decoy(const Image& x, const Embedding& target,
                                   const AttackConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(target.size()) != cfg.models->dim())
    throw ShapeError("generate_decoy: target dimension mismatch");
  std::vector<Embedding> targets(cfg.models->size(), target);
  return detail::pgd_run(x, targets, cfg, -1,
                         std::vector<double>(x.pixels.size(), 0.0));
}

/// Untargeted self-distance attack: push the image's embedding as far as the
/// budget allows from where it started, per member. Initialized with
/// truncated-normal noise (sigma = epsilon/3) inside the ball.
inline AttackResult solo_attack(const Image& x, const AttackConfig& cfg) {
  cfg.validate();
  std::vector<Embedding> targets;
  targets.reserve(cfg.models->size());
  for (const auto& m : cfg.models->members()) targets.push_back(m.forward(x));

  AttackConfig run_cfg = cfg;
  SeededRng init_rng = cfg.rng;
  std::vector<double> delta0(x.pixels.size(), 0.0);
  if (cfg.epsilon > 0) {
    const double sigma = cfg.epsilon / 3.0;
    for (auto& d : delta0)
      d = init_rng.normal_truncated(0.0, sigma, -cfg.epsilon, cfg.epsilon);
  }
  run_cfg.rng = init_rng;  // continue the same stream for transform draws
  return detail::pgd_run(x, targets, run_cfg, +1, std::move(delta0));
}

struct EpsilonProfileRow {
  double epsilon = 0.0;
  double mean_initial = 0.0;
  double mean_final = 0.0;
  double q0 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q100 = 0.0;
  std::vector<double> final_losses;
  long long constraint_violations = 0;
};

/// Final-loss distribution per epsilon over a fixed set of jobs.
inline std::vector<EpsilonProfileRow> loss_vs_epsilon_profile(
    const std::vector<DecoyJob>& jobs, const std::vector<double>& eps_grid,
    const AttackConfig& base) {
  if (eps_grid.empty())
    throw ConfigError("loss_vs_epsilon_profile: empty epsilon grid");
  if (jobs.empty()) throw EmptySetError("loss_vs_epsilon_profile: no jobs");
  std::vector<EpsilonProfileRow> rows;
  rows.reserve(eps_grid.size());
  for (double eps : eps_grid) {
    EpsilonProfileRow row;
    row.epsilon = eps;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      AttackConfig cfg = base;
      cfg.epsilon = eps;
      cfg.rng = SeededRng(base.rng.seed(),
                          stream_id(streams::kAttack, j));
      const auto res = generate_decoy(jobs[j].source, jobs[j].target, cfg);
      row.mean_initial += res.initial_loss;
      row.mean_final += res.final_loss;
      row.final_losses.push_back(res.final_loss);
      if (!res.constraint_satisfied) row.constraint_violations += 1;
    }
    const double n = static_cast<double>(jobs.size());
    row.mean_initial /= n;
    row.mean_final /= n;
    std::vector<double> sorted = row.final_losses;
    std::sort(sorted.begin(), sorted.end());
    auto q = [&sorted](double p) {
      const std::size_t idx = static_cast<std::size_t>(
          std::ceil(p * static_cast<double>(sorted.size())));
      return sorted[std::min(sorted.size() - 1, idx == 0 ? 0 : idx - 1)];
    };
    row.q0 = sorted.front();
    row.q25 = q(0.25);
    row.q50 = q(0.50);
    row.q75 = q(0.75);
    row.q100 = sorted.back();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace foggy
