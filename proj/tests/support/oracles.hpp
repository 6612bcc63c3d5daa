#pragma once

// Reference implementations used as test oracles. They share no code paths
// with the library beyond the public types and the random source.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "resalloc/dqn_agents.hpp"
#include "resalloc/replay_memory.hpp"
#include "resalloc/rng.hpp"
#include "resalloc/sim_env.hpp"
#include "resalloc/tensor_nn.hpp"

namespace resalloc::oracle {

using env::EnvConfig;

// Step-by-step re-simulation of the five phases with its own state layout.
// Consumes the generator in the documented order: one geometric per
// assignment, one Bernoulli per still-held slot, one Poisson per step.
struct HandSim {
  enum Kind { kFree, kHeld, kCool };
  struct Slot {
    Kind kind = kFree;
    std::uint64_t id = 0;
    int left = 0;
  };
  struct Waiting {
    std::uint64_t id;
    long eligible;
  };

  EnvConfig c;
  Rng rng;
  std::vector<Slot> slots;
  std::vector<Waiting> queue;
  long t = 0;
  std::uint64_t next_id = 1;

  HandSim(EnvConfig cfg, std::uint64_t seed) : c(cfg), rng(seed), slots(cfg.num_resources) {}

  struct Out {
    double reward;
    int unutilized, performing, utilized, dropped, queue_len, allocated;
    std::vector<double> obs;
  };

  Out step(int a) {
    Out o{};
    // allocate
    std::vector<Waiting> kept;
    for (const auto& w : queue) {
      int free_slot = -1;
      for (int i = 0; i < c.num_resources; ++i) {
        if (slots[i].kind == kFree) {
          free_slot = i;
          break;
        }
      }
      if (o.allocated < a && w.eligible <= t && free_slot >= 0) {
        const int hold = c.min_hold + static_cast<int>(rng.geometric(c.mean_hold - c.min_hold));
        slots[free_slot] = {kHeld, w.id, hold};
        ++o.allocated;
      } else {
        kept.push_back(w);
      }
    }
    queue = kept;
    // advance
    std::vector<Waiting> back;
    for (auto& s : slots) {
      if (s.kind == kHeld) {
        s.left -= 1;
        if (s.left == 0) {
          s = Slot{};
        } else if (rng.bernoulli(c.change_request_prob)) {
          back.push_back({s.id, t + 1 + c.reallocation_delay});
          s = c.reallocation_delay > 0 ? Slot{kCool, 0, c.reallocation_delay} : Slot{};
        }
      } else if (s.kind == kCool) {
        s.left -= 1;
        if (s.left == 0) s = Slot{};
      }
    }
    back.insert(back.end(), queue.begin(), queue.end());
    queue = back;
    // arrive
    const auto n = rng.poisson(c.arrival_rate);
    for (std::uint64_t i = 0; i < n; ++i) {
      if (static_cast<int>(queue.size()) < c.max_queue) {
        queue.push_back({next_id++, t + 1});
      } else {
        ++o.dropped;
      }
    }
    // score
    for (const auto& s : slots) {
      o.unutilized += s.kind == kFree;
      o.performing += s.kind == kHeld;
    }
    o.utilized = c.num_resources - o.unutilized;
    o.reward = -std::abs(o.unutilized - c.target_unutilized);
    o.queue_len = static_cast<int>(queue.size());
    ++t;
    for (const auto& s : slots) {
      o.obs.push_back(s.kind == kFree ? 0.0 : 1.0);
      o.obs.push_back(s.kind == kFree ? 0.0 : std::min(1.0, s.left / c.mean_hold));
    }
    o.obs.push_back(std::min<double>(static_cast<double>(queue.size()), c.max_queue) / c.max_queue);
    o.obs.push_back(static_cast<double>(o.unutilized) / c.num_resources);
    o.obs.push_back(static_cast<double>(t) / c.episode_length);
    return o;
  }
};


// Random small network mixing plain and noisy layers and both head kinds.
inline nn::NetworkSpec random_spec(Rng& rng) {
  nn::NetworkSpec spec;
  spec.input_dim = 2 + static_cast<int>(rng.uniform_index(5));
  const int depth = 1 + static_cast<int>(rng.uniform_index(3));
  int in = spec.input_dim;
  for (int l = 0; l < depth; ++l) {
    nn::LayerSpec layer;
    layer.kind = rng.bernoulli(0.5) ? nn::LayerKind::NoisyLinear : nn::LayerKind::Linear;
    layer.in_dim = in;
    layer.out_dim = 2 + static_cast<int>(rng.uniform_index(6));
    layer.activation = nn::Activation::ReLU;
    spec.trunk.push_back(layer);
    in = layer.out_dim;
  }
  spec.head = rng.bernoulli(0.5) ? nn::HeadKind::Dueling : nn::HeadKind::Single;
  spec.head_kind = rng.bernoulli(0.5) ? nn::LayerKind::NoisyLinear : nn::LayerKind::Linear;
  spec.num_actions = 2 + static_cast<int>(rng.uniform_index(4));
  return spec;
}

inline std::vector<std::span<double>> tensors_of(nn::LayerParams& p) {
  std::vector<std::span<double>> out = {p.weight_mu.values(), std::span<double>(p.bias_mu)};
  if (p.noisy()) {
    out.push_back(p.weight_sigma.values());
    out.push_back(std::span<double>(p.bias_sigma));
  }
  return out;
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  long checked = 0;
  bool skipped = false;  // no kink-free input found
};

// Central finite differences of L = sum(G .* Q) against backward_batch.
// Inputs are resampled until every ReLU pre-activation is at least
// `kink_margin` away from zero so the difference quotient stays smooth.
inline GradCheckResult gradient_check(const nn::NetworkSpec& spec, Rng& rng, double step = 1e-5,
                                      double kink_margin = 1e-3, int batch = 3) {
  nn::NetworkParams params = nn::init_params(spec, rng);
  const nn::NoiseSample noise = spec.has_noisy() ? nn::sample_noise(spec, rng) : nn::NoiseSample{};
  const auto layers = spec.layers();

  nn::Matrix x(static_cast<std::size_t>(spec.input_dim), static_cast<std::size_t>(batch));
  nn::ForwardCache cache;
  bool smooth = false;
  for (int attempt = 0; attempt < 200 && !smooth; ++attempt) {
    for (double& v : x.values()) v = 2.0 * rng.uniform() - 1.0;
    nn::forward_batch(params, spec, x, noise, &cache);
    smooth = true;
    for (std::size_t l = 0; l < layers.size() && smooth; ++l) {
      if (layers[l].activation != nn::Activation::ReLU) continue;
      for (double z : cache.pre_activation[l].values()) {
        if (std::abs(z) < kink_margin) smooth = false;
      }
    }
  }
  GradCheckResult result;
  if (!smooth) {
    result.skipped = true;
    return result;
  }

  nn::Matrix g(static_cast<std::size_t>(spec.num_actions), static_cast<std::size_t>(batch));
  for (double& v : g.values()) v = rng.normal();
  auto loss = [&](const nn::NetworkParams& p) {
    const nn::Matrix q = nn::forward_batch(p, spec, x, noise);
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += g.values()[i] * q.values()[i];
    return s;
  };

  nn::forward_batch(params, spec, x, noise, &cache);
  nn::Gradients grads = nn::backward_batch(params, spec, cache, g);

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto ps = tensors_of(params.layers[l]);
    auto gs = tensors_of(grads[l]);
    for (std::size_t t = 0; t < ps.size(); ++t) {
      for (std::size_t i = 0; i < ps[t].size(); ++i) {
        const double keep = ps[t][i];
        ps[t][i] = keep + step;
        const double up = loss(params);
        ps[t][i] = keep - step;
        const double down = loss(params);
        ps[t][i] = keep;
        const double numeric = (up - down) / (2.0 * step);
        const double analytic = gs[t][i];
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        result.max_relative_error = std::max(result.max_relative_error, std::abs(numeric - analytic) / denom);
        ++result.checked;
      }
    }
  }
  return result;
}

// Zero-noise Q values of one input, written from the layer equations.
inline std::vector<double> reference_q(const nn::NetworkParams& params, const nn::NetworkSpec& spec,
                                       const std::vector<double>& input) {
  auto dense = [&](std::size_t l, const std::vector<double>& x, bool relu) {
    const auto& p = params.layers[l];
    std::vector<double> y(p.weight_mu.rows());
    for (std::size_t i = 0; i < y.size(); ++i) {
      double acc = p.bias_mu[i];
      for (std::size_t k = 0; k < x.size(); ++k) acc += p.weight_mu(i, k) * x[k];
      y[i] = relu && acc < 0.0 ? 0.0 : acc;
    }
    return y;
  };
  std::vector<double> h = input;
  for (std::size_t l = 0; l < spec.trunk.size(); ++l) h = dense(l, h, true);
  const std::size_t head = spec.trunk.size();
  if (spec.head == nn::HeadKind::Single) return dense(head, h, false);
  const double v = dense(head, h, false)[0];
  const std::vector<double> a = dense(head + 1, h, false);
  double sum = 0.0;
  for (double ai : a) sum += ai;
  const double mean = sum / static_cast<double>(a.size());
  std::vector<double> q(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) q[i] = v + (a[i] - mean);
  return q;
}

// y = r for terminal transitions, else r + gamma * Q_target(s', argmax_a Q_policy(s', a)).
inline std::vector<double> reference_targets(const agents::QHead& head, const nn::NetworkSpec& spec,
                                             double gamma,
                                             std::span<const replay::Transition* const> batch) {
  std::vector<double> y;
  for (const auto* t : batch) {
    if (t->terminal) {
      y.push_back(t->reward);
      continue;
    }
    const auto qp = reference_q(head.policy, spec, t->next_state);
    const auto qt = reference_q(head.target, spec, t->next_state);
    std::size_t best = 0;
    for (std::size_t a = 0; a < qp.size(); ++a) {
      if (qp[a] > qp[best]) best = a;
    }
    y.push_back(t->reward + gamma * qt[best]);
  }
  return y;
}

// Upper-tail p-value of Pearson's chi-square statistic for observed counts
// against expected probabilities.
inline double chi_square_p_value(std::span<const long> observed, std::span<const double> probs) {
  double total = 0.0;
  for (long o : observed) total += static_cast<double>(o);
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    const double expected = total * probs[i];
    const double diff = static_cast<double>(observed[i]) - expected;
    stat += diff * diff / expected;
    ++cells;
  }
  const boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace resalloc::oracle
