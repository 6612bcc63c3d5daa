#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "resalloc/rng.hpp"

namespace resalloc::nn {

using Vector = std::vector<double>;

// Row-major dense matrix. Activations are stored features x batch, so one
// row holds a single feature across the whole batch.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  Vector column(std::size_t c) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class LayerKind { Linear, NoisyLinear };
enum class Activation { ReLU, Identity };
enum class HeadKind { Single, Dueling };

struct LayerSpec {
  LayerKind kind = LayerKind::Linear;
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::ReLU;
};

/// A feed-forward Q network: a trunk of hidden layers followed by either one
/// output layer (Single) or a value layer and an advantage layer that both
/// read the last trunk activation (Dueling).
struct NetworkSpec {
  int input_dim = 0;
  std::vector<LayerSpec> trunk;
  HeadKind head = HeadKind::Single;
  LayerKind head_kind = LayerKind::Linear;
  int num_actions = 0;

  // Trunk layers followed by the head layers; the order used by NetworkParams.
  std::vector<LayerSpec> layers() const;
  bool has_noisy() const;
  // Throws ContractError when dimensions do not chain.
  void validate() const;
};

// Standard Q network. With noisy=true the last hidden layer and the head
// layers are NoisyLinear; earlier trunk layers stay plain.
NetworkSpec make_q_network_spec(int input_dim, int num_actions, bool dueling, bool noisy,
                                std::span<const int> hidden_widths);
NetworkSpec make_q_network_spec(int input_dim, int num_actions, bool dueling, bool noisy);

// sigma tensors are empty for plain layers.
struct LayerParams {
  Matrix weight_mu;
  Vector bias_mu;
  Matrix weight_sigma;
  Vector bias_sigma;

  bool noisy() const { return !weight_sigma.empty(); }
  bool operator==(const LayerParams&) const = default;
};

using Gradients = std::vector<LayerParams>;

struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  long step = 0;

  bool operator==(const AdamState&) const = default;
};

struct NetworkParams {
  std::vector<LayerParams> layers;
  AdamState adam;

  bool operator==(const NetworkParams&) const = default;
};

// mu ~ U(-1/sqrt(in), 1/sqrt(in)); sigma = sigma0 / sqrt(in).
NetworkParams init_params(const NetworkSpec& spec, Rng& rng, double sigma0 = 0.5);

struct LayerNoise {
  Vector eps_in;
  Vector eps_out;
};

// Per-layer factorized noise; an empty sample means zero noise everywhere.
struct NoiseSample {
  std::vector<LayerNoise> layers;

  static NoiseSample zero() { return {}; }
  bool is_zero() const { return layers.empty(); }
};

// f(x) = sign(x) * sqrt(|x|)
double scale_noise(double x);

NoiseSample sample_noise(const NetworkSpec& spec, Rng& rng);

// f(eps_out) f(eps_in)^T, the rank-1 factor before scaling by sigma_W.
Matrix factorized_noise(const LayerNoise& noise);
// sigma_W elementwise-times the rank-1 factor.
Matrix weight_perturbation(const LayerParams& layer, const LayerNoise& noise);

// Q = V + A - mean(A), per batch column.
Matrix dueling_combine(const Matrix& value, const Matrix& advantage);

// Intermediates of one forward pass, consumed by backward_batch.
struct ForwardCache {
  std::vector<Matrix> inputs;      // input of each layer
  std::vector<Matrix> pre_activation;
  std::vector<Matrix> weights;     // effective weights (noisy layers only)
  std::vector<Vector> noise_out;   // f(eps_out) per noisy layer
  std::vector<Vector> noise_in;    // f(eps_in) per noisy layer
};

// inputs: input_dim x batch. Returns num_actions x batch.
Matrix forward_batch(const NetworkParams& params, const NetworkSpec& spec, const Matrix& inputs,
                     const NoiseSample& noise, ForwardCache* cache = nullptr);

Vector forward(const NetworkParams& params, const NetworkSpec& spec, std::span<const double> input,
               const NoiseSample& noise = {});

// Gradients of sum(output_grad .* Q) with the noise held fixed.
Gradients backward_batch(const NetworkParams& params, const NetworkSpec& spec,
                         const ForwardCache& cache, const Matrix& output_grad);

Gradients backward(const NetworkParams& params, const NetworkSpec& spec,
                   std::span<const double> input, const NoiseSample& noise,
                   std::span<const double> output_grad);

Gradients zeros_like(const NetworkParams& params);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected adaptive-moment update in place. Throws NumericError on a
// non-finite gradient before touching any parameter.
void adam_step(NetworkParams& params, const Gradients& grads, const AdamConfig& config);

// Deep copy, including optimizer state.
NetworkParams clone_params(const NetworkParams& params);

// Lowest index among the maxima.
int argmax(std::span<const double> values);

// Packs observations as columns of an input_dim x batch matrix.
Matrix make_batch(std::span<const Vector* const> columns);

/// Checkpoint format: a JSON object
///   {"format": "resalloc.tensors/1", "adam_step": n,
///    "tensors": [{"name": "layers.0.weight_mu", "shape": [rows, cols], "data": [...]}, ...]}
/// Names are layers.<i>.{weight_mu,bias_mu,weight_sigma,bias_sigma} and the same
/// names prefixed with adam.m. / adam.v. for the moment accumulators. Data is
/// row-major; vectors have a one-element shape.
nlohmann::json params_to_json(const NetworkParams& params);
NetworkParams params_from_json(const nlohmann::json& j, const NetworkSpec& spec);
void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams load_checkpoint(const std::filesystem::path& path, const NetworkSpec& spec);

}  // namespace resalloc::nn
