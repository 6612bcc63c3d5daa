#include "resalloc/tensor_nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "resalloc/errors.hpp"

namespace resalloc::nn {

namespace {

constexpr int kDefaultHidden[] = {64, 64};

void shape_check(bool ok, const std::string& what) {
  if (!ok) throw ContractError("shape mismatch: " + what);
}

// out(i, j) = bias(i) + sum_k weight(i, k) * x(k, j), accumulated in k order.
// Each output element sees the same operation sequence for any batch width.
Matrix affine(const Matrix& weight, std::span<const double> bias, const Matrix& x) {
  const std::size_t out_dim = weight.rows();
  const std::size_t in_dim = weight.cols();
  const std::size_t batch = x.cols();
  constexpr std::size_t kBlock = 8;
  Matrix out(out_dim, batch);
  const double* xs = x.values().data();
  for (std::size_t i = 0; i < out_dim; ++i) {
    auto out_row = out.row(i);
    const auto w_row = weight.row(i);
    std::size_t j0 = 0;
    for (; j0 + kBlock <= batch; j0 += kBlock) {
      double acc[kBlock];
      for (std::size_t t = 0; t < kBlock; ++t) acc[t] = bias[i];
      for (std::size_t k = 0; k < in_dim; ++k) {
        const double w = w_row[k];
        const double* xk = xs + k * batch + j0;
        for (std::size_t t = 0; t < kBlock; ++t) acc[t] += w * xk[t];
      }
      for (std::size_t t = 0; t < kBlock; ++t) out_row[j0 + t] = acc[t];
    }
    for (std::size_t j = j0; j < batch; ++j) {
      double acc = bias[i];
      for (std::size_t k = 0; k < in_dim; ++k) acc += w_row[k] * xs[k * batch + j];
      out_row[j] = acc;
    }
  }
  return out;
}

void relu_inplace(Matrix& m) {
  for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
}

LayerParams empty_like(const LayerParams& p) {
  LayerParams z;
  z.weight_mu = Matrix(p.weight_mu.rows(), p.weight_mu.cols());
  z.bias_mu = Vector(p.bias_mu.size(), 0.0);
  if (p.noisy()) {
    z.weight_sigma = Matrix(p.weight_sigma.rows(), p.weight_sigma.cols());
    z.bias_sigma = Vector(p.bias_sigma.size(), 0.0);
  }
  return z;
}

Vector scaled(const Vector& eps) {
  Vector f(eps.size());
  std::transform(eps.begin(), eps.end(), f.begin(), scale_noise);
  return f;
}

void check_params(const NetworkParams& params, const std::vector<LayerSpec>& layers) {
  shape_check(params.layers.size() == layers.size(), "layer count");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& p = params.layers[l];
    const auto& s = layers[l];
    shape_check(p.weight_mu.rows() == static_cast<std::size_t>(s.out_dim) &&
                    p.weight_mu.cols() == static_cast<std::size_t>(s.in_dim) &&
                    p.bias_mu.size() == static_cast<std::size_t>(s.out_dim),
                "layer " + std::to_string(l) + " parameters");
    shape_check(p.noisy() == (s.kind == LayerKind::NoisyLinear),
                "layer " + std::to_string(l) + " noise parameters");
  }
}

template <class Fn>
void for_each_tensor(LayerParams& a, const LayerParams& b, Fn&& fn) {
  fn(a.weight_mu.values(), b.weight_mu.values());
  fn(std::span<double>(a.bias_mu), std::span<const double>(b.bias_mu));
  if (a.noisy()) {
    fn(a.weight_sigma.values(), b.weight_sigma.values());
    fn(std::span<double>(a.bias_sigma), std::span<const double>(b.bias_sigma));
  }
}

}  // namespace

Vector Matrix::column(std::size_t c) const {
  Vector v(rows_);
  for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
  return v;
}

std::vector<LayerSpec> NetworkSpec::layers() const {
  std::vector<LayerSpec> all = trunk;
  const int last = trunk.empty() ? input_dim : trunk.back().out_dim;
  if (head == HeadKind::Single) {
    all.push_back({head_kind, last, num_actions, Activation::Identity});
  } else {
    all.push_back({head_kind, last, 1, Activation::Identity});
    all.push_back({head_kind, last, num_actions, Activation::Identity});
  }
  return all;
}

bool NetworkSpec::has_noisy() const {
  if (head_kind == LayerKind::NoisyLinear) return true;
  return std::any_of(trunk.begin(), trunk.end(),
                     [](const LayerSpec& l) { return l.kind == LayerKind::NoisyLinear; });
}

void NetworkSpec::validate() const {
  shape_check(input_dim > 0, "input_dim must be positive");
  shape_check(num_actions > 0, "num_actions must be positive");
  int prev = input_dim;
  for (const auto& l : trunk) {
    shape_check(l.in_dim == prev && l.out_dim > 0, "trunk dimensions do not chain");
    prev = l.out_dim;
  }
}

NetworkSpec make_q_network_spec(int input_dim, int num_actions, bool dueling, bool noisy,
                                std::span<const int> hidden_widths) {
  NetworkSpec spec;
  spec.input_dim = input_dim;
  spec.num_actions = num_actions;
  spec.head = dueling ? HeadKind::Dueling : HeadKind::Single;
  spec.head_kind = noisy ? LayerKind::NoisyLinear : LayerKind::Linear;
  int prev = input_dim;
  for (std::size_t i = 0; i < hidden_widths.size(); ++i) {
    const bool last = i + 1 == hidden_widths.size();
    spec.trunk.push_back({noisy && last ? LayerKind::NoisyLinear : LayerKind::Linear, prev,
                          hidden_widths[i], Activation::ReLU});
    prev = hidden_widths[i];
  }
  spec.validate();
  return spec;
}

NetworkSpec make_q_network_spec(int input_dim, int num_actions, bool dueling, bool noisy) {
  return make_q_network_spec(input_dim, num_actions, dueling, noisy, kDefaultHidden);
}

NetworkParams init_params(const NetworkSpec& spec, Rng& rng, double sigma0) {
  spec.validate();
  NetworkParams params;
  for (const auto& l : spec.layers()) {
    LayerParams p;
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in_dim));
    p.weight_mu = Matrix(l.out_dim, l.in_dim);
    p.bias_mu = Vector(l.out_dim);
    for (double& w : p.weight_mu.values()) w = (2.0 * rng.uniform() - 1.0) * bound;
    for (double& b : p.bias_mu) b = (2.0 * rng.uniform() - 1.0) * bound;
    if (l.kind == LayerKind::NoisyLinear) {
      const double sigma = sigma0 * bound;
      p.weight_sigma = Matrix(l.out_dim, l.in_dim, sigma);
      p.bias_sigma = Vector(l.out_dim, sigma);
    }
    params.layers.push_back(std::move(p));
  }
  return params;
}

double scale_noise(double x) {
  return std::copysign(std::sqrt(std::abs(x)), x);
}

NoiseSample sample_noise(const NetworkSpec& spec, Rng& rng) {
  if (!spec.has_noisy()) throw ContractError("sample_noise: network has no noisy layers");
  NoiseSample sample;
  for (const auto& l : spec.layers()) {
    LayerNoise n;
    if (l.kind == LayerKind::NoisyLinear) {
      n.eps_in.resize(l.in_dim);
      n.eps_out.resize(l.out_dim);
      for (double& e : n.eps_in) e = rng.normal();
      for (double& e : n.eps_out) e = rng.normal();
    }
    sample.layers.push_back(std::move(n));
  }
  return sample;
}

Matrix factorized_noise(const LayerNoise& noise) {
  const Vector fin = scaled(noise.eps_in);
  const Vector fout = scaled(noise.eps_out);
  Matrix m(fout.size(), fin.size());
  for (std::size_t i = 0; i < fout.size(); ++i)
    for (std::size_t k = 0; k < fin.size(); ++k) m(i, k) = fout[i] * fin[k];
  return m;
}

Matrix weight_perturbation(const LayerParams& layer, const LayerNoise& noise) {
  Matrix m = factorized_noise(noise);
  shape_check(m.rows() == layer.weight_sigma.rows() && m.cols() == layer.weight_sigma.cols(),
              "noise sample against sigma");
  auto out = m.values();
  const auto sigma = layer.weight_sigma.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= sigma[i];
  return m;
}

Matrix dueling_combine(const Matrix& value, const Matrix& advantage) {
  shape_check(value.rows() == 1 && value.cols() == advantage.cols(), "dueling streams");
  const std::size_t actions = advantage.rows();
  Matrix q(actions, advantage.cols());
  for (std::size_t j = 0; j < advantage.cols(); ++j) {
    double sum = 0.0;
    for (std::size_t a = 0; a < actions; ++a) sum += advantage(a, j);
    const double mean = sum / static_cast<double>(actions);
    for (std::size_t a = 0; a < actions; ++a) q(a, j) = value(0, j) + (advantage(a, j) - mean);
  }
  return q;
}

Matrix forward_batch(const NetworkParams& params, const NetworkSpec& spec, const Matrix& inputs,
                     const NoiseSample& noise, ForwardCache* cache) {
  const auto layers = spec.layers();
  check_params(params, layers);
  shape_check(inputs.rows() == static_cast<std::size_t>(spec.input_dim), "network input");
  shape_check(noise.is_zero() || noise.layers.size() == layers.size(), "noise sample layers");

  if (cache) {
    *cache = ForwardCache{};
    cache->inputs.resize(layers.size());
    cache->pre_activation.resize(layers.size());
    cache->weights.resize(layers.size());
    cache->noise_out.resize(layers.size());
    cache->noise_in.resize(layers.size());
  }

  auto apply_layer = [&](std::size_t l, const Matrix& x) {
    const auto& p = params.layers[l];
    Matrix out;
    if (p.noisy() && !noise.is_zero()) {
      const auto& n = noise.layers[l];
      shape_check(n.eps_in.size() == static_cast<std::size_t>(layers[l].in_dim) &&
                      n.eps_out.size() == static_cast<std::size_t>(layers[l].out_dim),
                  "noise vectors for layer " + std::to_string(l));
      const Vector fin = scaled(n.eps_in);
      const Vector fout = scaled(n.eps_out);
      Matrix w = p.weight_mu;
      Vector b = p.bias_mu;
      for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t k = 0; k < w.cols(); ++k)
          w(i, k) += p.weight_sigma(i, k) * (fout[i] * fin[k]);
        b[i] += p.bias_sigma[i] * fout[i];
      }
      out = affine(w, b, x);
      if (cache) {
        cache->weights[l] = std::move(w);
        cache->noise_in[l] = fin;
        cache->noise_out[l] = fout;
      }
    } else {
      out = affine(p.weight_mu, p.bias_mu, x);
    }
    if (cache) {
      cache->inputs[l] = x;
      cache->pre_activation[l] = out;
    }
    if (layers[l].activation == Activation::ReLU) relu_inplace(out);
    return out;
  };

  Matrix h = inputs;
  for (std::size_t l = 0; l < spec.trunk.size(); ++l) h = apply_layer(l, h);

  const std::size_t head = spec.trunk.size();
  if (spec.head == HeadKind::Single) return apply_layer(head, h);
  const Matrix value = apply_layer(head, h);
  const Matrix advantage = apply_layer(head + 1, h);
  return dueling_combine(value, advantage);
}

Vector forward(const NetworkParams& params, const NetworkSpec& spec, std::span<const double> input,
               const NoiseSample& noise) {
  Matrix x(input.size(), 1);
  std::copy(input.begin(), input.end(), x.values().begin());
  return forward_batch(params, spec, x, noise).column(0);
}

Gradients zeros_like(const NetworkParams& params) {
  Gradients g;
  g.reserve(params.layers.size());
  for (const auto& p : params.layers) g.push_back(empty_like(p));
  return g;
}

Gradients backward_batch(const NetworkParams& params, const NetworkSpec& spec,
                         const ForwardCache& cache, const Matrix& output_grad) {
  const auto layers = spec.layers();
  check_params(params, layers);
  shape_check(cache.inputs.size() == layers.size(), "forward cache");
  const std::size_t batch = cache.inputs.front().cols();
  shape_check(output_grad.rows() == static_cast<std::size_t>(spec.num_actions) &&
                  output_grad.cols() == batch,
              "output gradient");

  Gradients grads = zeros_like(params);

  // Accumulates parameter gradients of layer l and returns the input gradient.
  auto layer_backward = [&](std::size_t l, Matrix upstream) {
    const auto& p = params.layers[l];
    const Matrix& x = cache.inputs[l];
    if (layers[l].activation == Activation::ReLU) {
      const auto z = cache.pre_activation[l].values();
      auto g = upstream.values();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!(z[i] > 0.0)) g[i] = 0.0;
    }
    const bool perturbed = !cache.weights[l].empty();
    const Matrix& w = perturbed ? cache.weights[l] : p.weight_mu;
    auto& gl = grads[l];

    // Batch-major copy of the input so the weight-gradient loop runs over contiguous k.
    Matrix x_t(batch, x.rows());
    for (std::size_t k = 0; k < x.rows(); ++k)
      for (std::size_t j = 0; j < batch; ++j) x_t(j, k) = x(k, j);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      const auto g_row = upstream.row(i);
      auto gw_row = gl.weight_mu.row(i);
      double gb = 0.0;
      for (std::size_t j = 0; j < batch; ++j) {
        const double g = g_row[j];
        gb += g;
        if (g == 0.0) continue;
        const auto xj = x_t.row(j);
        for (std::size_t k = 0; k < gw_row.size(); ++k) gw_row[k] += g * xj[k];
      }
      gl.bias_mu[i] = gb;
    }
    if (p.noisy() && perturbed) {
      const auto& fin = cache.noise_in[l];
      const auto& fout = cache.noise_out[l];
      for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t k = 0; k < w.cols(); ++k)
          gl.weight_sigma(i, k) = gl.weight_mu(i, k) * (fout[i] * fin[k]);
        gl.bias_sigma[i] = gl.bias_mu[i] * fout[i];
      }
    }

    constexpr std::size_t kBlock = 8;
    Matrix dx(w.cols(), batch);
    const double* gs = upstream.values().data();
    for (std::size_t k = 0; k < w.cols(); ++k) {
      auto dx_row = dx.row(k);
      std::size_t j0 = 0;
      for (; j0 + kBlock <= batch; j0 += kBlock) {
        double acc[kBlock] = {};
        for (std::size_t i = 0; i < w.rows(); ++i) {
          const double wik = w(i, k);
          const double* gi = gs + i * batch + j0;
          for (std::size_t t = 0; t < kBlock; ++t) acc[t] += wik * gi[t];
        }
        for (std::size_t t = 0; t < kBlock; ++t) dx_row[j0 + t] = acc[t];
      }
      for (std::size_t j = j0; j < batch; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < w.rows(); ++i) acc += w(i, k) * gs[i * batch + j];
        dx_row[j] = acc;
      }
    }
    return dx;
  };

  const std::size_t head = spec.trunk.size();
  Matrix grad;
  if (spec.head == HeadKind::Single) {
    grad = layer_backward(head, output_grad);
  } else {
    const std::size_t actions = output_grad.rows();
    Matrix g_value(1, batch);
    Matrix g_adv(actions, batch);
    for (std::size_t j = 0; j < batch; ++j) {
      double sum = 0.0;
      for (std::size_t a = 0; a < actions; ++a) sum += output_grad(a, j);
      g_value(0, j) = sum;
      const double mean = sum / static_cast<double>(actions);
      for (std::size_t a = 0; a < actions; ++a) g_adv(a, j) = output_grad(a, j) - mean;
    }
    grad = layer_backward(head, std::move(g_value));
    const Matrix from_adv = layer_backward(head + 1, std::move(g_adv));
    auto gv = grad.values();
    const auto ga = from_adv.values();
    for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += ga[i];
  }
  for (std::size_t l = head; l-- > 0;) grad = layer_backward(l, std::move(grad));
  return grads;
}

Gradients backward(const NetworkParams& params, const NetworkSpec& spec,
                   std::span<const double> input, const NoiseSample& noise,
                   std::span<const double> output_grad) {
  Matrix x(input.size(), 1);
  std::copy(input.begin(), input.end(), x.values().begin());
  ForwardCache cache;
  forward_batch(params, spec, x, noise, &cache);
  Matrix g(output_grad.size(), 1);
  std::copy(output_grad.begin(), output_grad.end(), g.values().begin());
  return backward_batch(params, spec, cache, g);
}

void adam_step(NetworkParams& params, const Gradients& grads, const AdamConfig& config) {
  shape_check(grads.size() == params.layers.size(), "gradient layer count");
  for (std::size_t l = 0; l < grads.size(); ++l) {
    auto check = [&](std::span<const double> values) {
      for (double v : values)
        if (!std::isfinite(v))
          throw NumericError("non-finite gradient in layer " + std::to_string(l));
    };
    shape_check(grads[l].weight_mu.size() == params.layers[l].weight_mu.size() &&
                    grads[l].noisy() == params.layers[l].noisy(),
                "gradient shapes");
    check(grads[l].weight_mu.values());
    check(grads[l].bias_mu);
    check(grads[l].weight_sigma.values());
    check(grads[l].bias_sigma);
  }
  auto& adam = params.adam;
  if (adam.first_moment.empty()) {
    adam.first_moment = zeros_like(params);
    adam.second_moment = zeros_like(params);
  }
  ++adam.step;
  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(adam.step));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(adam.step));

  for (std::size_t l = 0; l < grads.size(); ++l) {
    // Walk the four tensors of parameter, gradient and both moments in lockstep.
    std::span<double> p[] = {params.layers[l].weight_mu.values(), params.layers[l].bias_mu,
                             params.layers[l].weight_sigma.values(), params.layers[l].bias_sigma};
    std::span<const double> g[] = {grads[l].weight_mu.values(), grads[l].bias_mu,
                                   grads[l].weight_sigma.values(), grads[l].bias_sigma};
    std::span<double> m[] = {adam.first_moment[l].weight_mu.values(), adam.first_moment[l].bias_mu,
                             adam.first_moment[l].weight_sigma.values(),
                             adam.first_moment[l].bias_sigma};
    std::span<double> v[] = {adam.second_moment[l].weight_mu.values(),
                             adam.second_moment[l].bias_mu,
                             adam.second_moment[l].weight_sigma.values(),
                             adam.second_moment[l].bias_sigma};
    for (int t = 0; t < 4; ++t) {
      for (std::size_t i = 0; i < p[t].size(); ++i) {
        const double gi = g[t][i];
        m[t][i] = config.beta1 * m[t][i] + (1.0 - config.beta1) * gi;
        v[t][i] = config.beta2 * v[t][i] + (1.0 - config.beta2) * gi * gi;
        const double m_hat = m[t][i] / correction1;
        const double v_hat = v[t][i] / correction2;
        p[t][i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
      }
    }
  }
}

NetworkParams clone_params(const NetworkParams& params) { return params; }

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = static_cast<int>(i);
  return best;
}

Matrix make_batch(std::span<const Vector* const> columns) {
  if (columns.empty()) return {};
  const std::size_t dim = columns.front()->size();
  Matrix m(dim, columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    shape_check(columns[j]->size() == dim, "batch column length");
    for (std::size_t r = 0; r < dim; ++r) m(r, j) = (*columns[j])[r];
  }
  return m;
}

// ---- checkpoints ----------------------------------------------------------

namespace {

constexpr const char* kFormat = "resalloc.tensors/1";

void add_tensor(nlohmann::json& out, const std::string& name, std::size_t rows, std::size_t cols,
                std::span<const double> data) {
  nlohmann::json shape = cols == 0 ? nlohmann::json::array({rows}) : nlohmann::json::array({rows, cols});
  out.push_back({{"name", name}, {"shape", shape}, {"data", std::vector<double>(data.begin(), data.end())}});
}

void add_layers(nlohmann::json& out, const std::string& prefix, const std::vector<LayerParams>& layers) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& p = layers[l];
    const std::string base = prefix + "layers." + std::to_string(l) + ".";
    add_tensor(out, base + "weight_mu", p.weight_mu.rows(), p.weight_mu.cols(), p.weight_mu.values());
    add_tensor(out, base + "bias_mu", p.bias_mu.size(), 0, p.bias_mu);
    if (p.noisy()) {
      add_tensor(out, base + "weight_sigma", p.weight_sigma.rows(), p.weight_sigma.cols(),
                 p.weight_sigma.values());
      add_tensor(out, base + "bias_sigma", p.bias_sigma.size(), 0, p.bias_sigma);
    }
  }
}

void read_tensor(const nlohmann::json& tensors, const std::string& name, std::vector<std::size_t> shape,
                 std::span<double> dst) {
  for (const auto& t : tensors) {
    if (t.at("name").get<std::string>() != name) continue;
    const auto data = t.at("data").get<std::vector<double>>();
    if (t.at("shape").get<std::vector<std::size_t>>() != shape || data.size() != dst.size()) {
      throw ConfigError("checkpoint tensor " + name + " has the wrong shape");
    }
    std::copy(data.begin(), data.end(), dst.begin());
    return;
  }
  throw ConfigError("checkpoint is missing tensor " + name);
}

void read_layers(const nlohmann::json& tensors, const std::string& prefix, std::vector<LayerParams>& layers) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& p = layers[l];
    const std::string base = prefix + "layers." + std::to_string(l) + ".";
    const std::vector<std::size_t> matrix = {p.weight_mu.rows(), p.weight_mu.cols()};
    const std::vector<std::size_t> vector = {p.bias_mu.size()};
    read_tensor(tensors, base + "weight_mu", matrix, p.weight_mu.values());
    read_tensor(tensors, base + "bias_mu", vector, p.bias_mu);
    if (p.noisy()) {
      read_tensor(tensors, base + "weight_sigma", matrix, p.weight_sigma.values());
      read_tensor(tensors, base + "bias_sigma", vector, p.bias_sigma);
    }
  }
}

}  // namespace

nlohmann::json params_to_json(const NetworkParams& params) {
  nlohmann::json tensors = nlohmann::json::array();
  add_layers(tensors, "", params.layers);
  if (!params.adam.first_moment.empty()) {
    add_layers(tensors, "adam.m.", params.adam.first_moment);
    add_layers(tensors, "adam.v.", params.adam.second_moment);
  }
  return {{"format", kFormat}, {"adam_step", params.adam.step}, {"tensors", tensors}};
}

NetworkParams params_from_json(const nlohmann::json& j, const NetworkSpec& spec) {
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ConfigError("unknown checkpoint format");
    Rng unused(0);
    NetworkParams params = init_params(spec, unused);
    const auto& tensors = j.at("tensors");
    read_layers(tensors, "", params.layers);
    params.adam.step = j.at("adam_step").get<long>();
    if (params.adam.step > 0) {
      params.adam.first_moment = zeros_like(params);
      params.adam.second_moment = zeros_like(params);
      read_layers(tensors, "adam.m.", params.adam.first_moment);
      read_layers(tensors, "adam.v.", params.adam.second_moment);
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << params_to_json(params).dump() << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

NetworkParams load_checkpoint(const std::filesystem::path& path, const NetworkSpec& spec) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
  return params_from_json(j, spec);
}

}  // namespace resalloc::nn
