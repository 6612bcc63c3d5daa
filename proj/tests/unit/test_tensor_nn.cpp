#include <cmath>
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "resalloc/errors.hpp"
#include "resalloc/tensor_nn.hpp"
#include "support/oracles.hpp"

using namespace resalloc;
using namespace resalloc::nn;

namespace {

Vector random_input(int dim, Rng& rng) {
  Vector v(static_cast<std::size_t>(dim));
  for (double& x : v) x = rng.uniform();
  return v;
}

// Same spec with every layer plain.
NetworkSpec plain_copy(NetworkSpec spec) {
  for (auto& l : spec.trunk) l.kind = LayerKind::Linear;
  spec.head_kind = LayerKind::Linear;
  return spec;
}

NetworkParams mu_only(const NetworkParams& p) {
  NetworkParams out;
  for (const auto& l : p.layers) out.layers.push_back({l.weight_mu, l.bias_mu, {}, {}});
  return out;
}

}  // namespace

TEST(TensorNn, DefaultSpecLayout) {
  const NetworkSpec spec = make_q_network_spec(23, 11, true, true);
  const auto layers = spec.layers();
  ASSERT_EQ(layers.size(), 4u);
  EXPECT_EQ(layers[0].kind, LayerKind::Linear);
  EXPECT_EQ(layers[0].in_dim, 23);
  EXPECT_EQ(layers[0].out_dim, 64);
  EXPECT_EQ(layers[1].kind, LayerKind::NoisyLinear);
  EXPECT_EQ(layers[2].out_dim, 1);
  EXPECT_EQ(layers[2].activation, Activation::Identity);
  EXPECT_EQ(layers[3].out_dim, 11);
  EXPECT_EQ(layers[3].kind, LayerKind::NoisyLinear);
  EXPECT_FALSE(make_q_network_spec(23, 11, false, false).has_noisy());
}

TEST(TensorNn, ScaleNoise) {
  EXPECT_EQ(scale_noise(4.0), 2.0);
  EXPECT_EQ(scale_noise(-9.0), -3.0);
  EXPECT_EQ(scale_noise(0.0), 0.0);
}

TEST(TensorNn, DuelingCombineExample) {
  Matrix v(1, 1, 1.0);
  Matrix a(3, 1);
  a(0, 0) = 1;
  a(1, 0) = 2;
  a(2, 0) = 3;
  const Matrix q = dueling_combine(v, a);
  EXPECT_EQ(q.column(0), (Vector{0, 1, 2}));
}

TEST(TensorNn, GradientsMatchFiniteDifferences) {
  Rng rng(123);
  int checked = 0;
  for (int i = 0; i < 25; ++i) {
    const NetworkSpec spec = oracle::random_spec(rng);
    const auto r = oracle::gradient_check(spec, rng);
    if (r.skipped) continue;
    ++checked;
    EXPECT_LT(r.max_relative_error, 1e-4) << "configuration " << i;
  }
  EXPECT_GE(checked, 20);
}

TEST(TensorNn, DefaultNetworkGradientCheck) {
  Rng rng(5);
  for (bool dueling : {false, true}) {
    const auto spec = make_q_network_spec(7, 4, dueling, true, std::vector<int>{8, 8});
    const auto r = oracle::gradient_check(spec, rng);
    ASSERT_FALSE(r.skipped);
    EXPECT_LT(r.max_relative_error, 1e-4);
  }
}

TEST(TensorNn, ZeroNoiseEqualsPlainNetwork) {
  Rng rng(9);
  for (bool dueling : {false, true}) {
    const NetworkSpec noisy = make_q_network_spec(23, 11, dueling, true);
    const NetworkParams params = init_params(noisy, rng);
    const NetworkSpec plain = plain_copy(noisy);
    const NetworkParams plain_params = mu_only(params);
    for (int i = 0; i < 100; ++i) {
      const Vector x = random_input(23, rng);
      ASSERT_EQ(forward(params, noisy, x, NoiseSample::zero()), forward(plain_params, plain, x));
    }
  }
}

TEST(TensorNn, ReferenceForwardAgrees) {
  Rng rng(10);
  for (int i = 0; i < 50; ++i) {
    const NetworkSpec spec = oracle::random_spec(rng);
    const NetworkParams params = init_params(spec, rng);
    const Vector x = random_input(spec.input_dim, rng);
    ASSERT_EQ(forward(params, spec, x), oracle::reference_q(params, spec, x));
  }
}

TEST(TensorNn, BatchEqualsSingle) {
  Rng rng(11);
  const NetworkSpec spec = make_q_network_spec(23, 11, true, true);
  const NetworkParams params = init_params(spec, rng);
  const NoiseSample noise = sample_noise(spec, rng);
  std::vector<Vector> xs;
  for (int i = 0; i < 37; ++i) xs.push_back(random_input(23, rng));
  std::vector<const Vector*> cols;
  for (const auto& x : xs) cols.push_back(&x);
  const Matrix q = forward_batch(params, spec, make_batch(cols), noise);
  for (std::size_t j = 0; j < xs.size(); ++j) ASSERT_EQ(q.column(j), forward(params, spec, xs[j], noise));
}

TEST(TensorNn, DuelingArgmaxInvariantToAdvantageShift) {
  Rng rng(12);
  const NetworkSpec spec = make_q_network_spec(23, 11, true, false);
  const NetworkParams params = init_params(spec, rng);
  std::vector<Vector> xs;
  for (int i = 0; i < 200; ++i) xs.push_back(random_input(23, rng));
  for (double c : {-10.0, 1.0, 1e3}) {
    NetworkParams shifted = params;
    for (double& b : shifted.layers.back().bias_mu) b += c;
    for (const auto& x : xs) {
      ASSERT_EQ(argmax(forward(params, spec, x)), argmax(forward(shifted, spec, x)));
    }
  }
}

TEST(TensorNn, FactorizedNoiseIsRankOne) {
  Rng rng(13);
  LayerNoise n;
  for (int i = 0; i < 5; ++i) n.eps_in.push_back(rng.normal());
  for (int i = 0; i < 4; ++i) n.eps_out.push_back(rng.normal());
  const Matrix m = factorized_noise(n);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 5; ++k)
      EXPECT_EQ(m(i, k), scale_noise(n.eps_out[i]) * scale_noise(n.eps_in[k]));
  for (std::size_t i = 1; i < 4; ++i)
    for (std::size_t k = 1; k < 5; ++k)
      EXPECT_NEAR(m(i, k) * m(0, 0), m(i, 0) * m(0, k), 1e-12);
}

TEST(TensorNn, NoisePerturbationHasZeroMean) {
  Rng rng(14);
  const NetworkSpec spec = make_q_network_spec(3, 2, false, true, std::vector<int>{4});
  const NetworkParams params = init_params(spec, rng);
  const auto& layer = params.layers[0];
  const int n = 20000;
  Matrix sum(layer.weight_sigma.rows(), layer.weight_sigma.cols());
  for (int s = 0; s < n; ++s) {
    const NoiseSample noise = sample_noise(spec, rng);
    const Matrix p = weight_perturbation(layer, noise.layers[0]);
    for (std::size_t i = 0; i < p.size(); ++i) sum.values()[i] += p.values()[i];
  }
  // Each entry is sigma * f(a) f(b) with variance sigma^2 * 2/pi.
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const double sd = layer.weight_sigma.values()[i] * std::sqrt(2.0 / M_PI) / std::sqrt(n);
    EXPECT_LT(std::abs(sum.values()[i] / n), 5.0 * sd);
  }
}

TEST(TensorNn, SampleNoiseRequiresNoisyLayers) {
  Rng rng(15);
  EXPECT_THROW(sample_noise(make_q_network_spec(3, 2, true, false), rng), ContractError);
}

TEST(TensorNn, AdamFirstStepMovesByLearningRate) {
  Rng rng(16);
  const NetworkSpec spec = make_q_network_spec(5, 3, true, true, std::vector<int>{6});
  NetworkParams params = init_params(spec, rng);
  NetworkParams before = clone_params(params);
  Gradients g = zeros_like(params);
  for (auto& l : g)
    for (auto t : oracle::tensors_of(l))
      for (double& v : t) v = rng.normal();
  AdamConfig cfg;
  adam_step(params, g, cfg);
  EXPECT_EQ(params.adam.step, 1);
  for (std::size_t l = 0; l < g.size(); ++l) {
    auto after = oracle::tensors_of(params.layers[l]);
    auto orig = oracle::tensors_of(before.layers[l]);
    auto grads = oracle::tensors_of(g[l]);
    for (std::size_t t = 0; t < after.size(); ++t) {
      for (std::size_t i = 0; i < after[t].size(); ++i) {
        const double delta = after[t][i] - orig[t][i];
        EXPECT_NEAR(std::abs(delta), cfg.lr, 1e-6);
        EXPECT_EQ(delta < 0, grads[t][i] > 0);
      }
    }
  }
}

TEST(TensorNn, AdamRejectsNonFiniteGradient) {
  Rng rng(17);
  const NetworkSpec spec = make_q_network_spec(5, 3, false, false, std::vector<int>{6});
  NetworkParams params = init_params(spec, rng);
  const NetworkParams before = clone_params(params);
  Gradients g = zeros_like(params);
  g.back().bias_mu[0] = std::nan("");
  EXPECT_THROW(adam_step(params, g, {}), NumericError);
  EXPECT_EQ(params, before);
}

TEST(TensorNn, CloneIsDeep) {
  Rng rng(18);
  const NetworkSpec spec = make_q_network_spec(5, 3, false, true, std::vector<int>{6});
  NetworkParams a = init_params(spec, rng);
  NetworkParams b = clone_params(a);
  b.layers[0].weight_mu(0, 0) += 1.0;
  EXPECT_NE(a, b);
}

TEST(TensorNn, ArgmaxLowestTie) {
  EXPECT_EQ(argmax(Vector{1, 3, 3, 2}), 1);
  EXPECT_EQ(argmax(Vector{0, 0, 0}), 0);
}

TEST(TensorNn, ShapeMismatchThrows) {
  Rng rng(19);
  const NetworkSpec spec = make_q_network_spec(5, 3, false, false);
  const NetworkParams params = init_params(spec, rng);
  EXPECT_THROW(forward(params, spec, Vector(4, 0.0)), ContractError);
}

TEST(TensorNn, CheckpointRoundTrip) {
  Rng rng(20);
  const NetworkSpec spec = make_q_network_spec(23, 11, true, true);
  NetworkParams params = init_params(spec, rng);
  Gradients g = zeros_like(params);
  for (auto& l : g)
    for (auto t : oracle::tensors_of(l))
      for (double& v : t) v = rng.normal();
  adam_step(params, g, {});

  const auto path = std::filesystem::temp_directory_path() / "resalloc_ckpt_test.json";
  save_checkpoint(params, path);
  const NetworkParams back = load_checkpoint(path, spec);
  std::filesystem::remove(path);
  EXPECT_EQ(back, params);

  nlohmann::json j = params_to_json(params);
  EXPECT_EQ(j["format"], "resalloc.tensors/1");
  j["tensors"][0]["shape"] = {1, 1};
  EXPECT_ANY_THROW(params_from_json(j, spec));
}
