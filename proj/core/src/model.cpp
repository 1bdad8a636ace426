#include "leafrust/model.hpp"

#include <algorithm>
#include <cmath>

#include "leafrust/error.hpp"
#include "leafrust/rng.hpp"

namespace leafrust {

std::size_t ModelConfig::pooled_side() const noexcept {
  if (input_side < pool_window || pool_stride == 0) return 0;
  return (input_side - pool_window) / pool_stride + 1;
}

std::size_t ModelConfig::flattened_features() const noexcept {
  return conv2_filters * pooled_side() * pooled_side();
}

ModelConfig ModelConfig::compact() {
  ModelConfig c;
  c.conv1_filters = 4;
  c.conv2_filters = 4;
  c.dense_widths = {16, 16, 8, 2};
  return c;
}

void validate(const ModelConfig& c) {
  auto fail = [](const std::string& what) { throw ValidationError("model config: " + what); };
  if (c.input_side < 2) fail("input_side must be >= 2");
  if (c.input_channels != 1 && c.input_channels != 3) fail("input_channels must be 1 or 3");
  if (c.conv1_filters == 0 || c.conv2_filters == 0) fail("filter counts must be positive");
  if (c.conv_kernel == 0 || c.conv_kernel % 2 == 0) fail("conv_kernel must be odd");
  if (c.pool_window == 0 || c.pool_stride == 0) fail("pool window and stride must be positive");
  if (c.input_side < c.pool_window) fail("input_side smaller than pool window");
  for (auto w : c.dense_widths)
    if (w == 0) fail("dense widths must be positive");
  if (c.dense_widths[3] < 2) fail("last dense width is the class count and must be >= 2");
}

template <typename T>
std::vector<typename ModelParams<T>::Entry> ModelParams<T>::entries() {
  std::vector<Entry> e{
      {"conv1.weight", "conv1", &conv1_weight, true},
      {"conv1.bias", "conv1", &conv1_bias, true},
      {"conv2.weight", "conv2", &conv2_weight, true},
      {"conv2.bias", "conv2", &conv2_bias, true},
      {"batchnorm.gamma", "batchnorm", &bn_gamma, true},
      {"batchnorm.beta", "batchnorm", &bn_beta, true},
      {"batchnorm.running_mean", "batchnorm", &bn_running_mean, false},
      {"batchnorm.running_var", "batchnorm", &bn_running_var, false},
  };
  for (std::size_t i = 0; i < kDenseLayers; ++i) {
    const std::string layer = "dense" + std::to_string(i + 1);
    e.push_back({layer + ".weight", layer, &dense_weight[i], true});
    e.push_back({layer + ".bias", layer, &dense_bias[i], true});
  }
  return e;
}

template <typename T>
std::vector<typename ModelParams<T>::ConstEntry> ModelParams<T>::entries() const {
  auto mutable_entries = const_cast<ModelParams*>(this)->entries();
  std::vector<ConstEntry> out;
  out.reserve(mutable_entries.size());
  for (auto& m : mutable_entries) out.push_back({m.name, m.layer, m.tensor, m.trainable});
  return out;
}

template <typename T>
ModelParams<T> zero_params(const ModelConfig& c) {
  validate(c);
  ModelParams<T> p;
  p.config = c;
  const std::size_t k = c.conv_kernel;
  p.conv1_weight = Tensor<T>({c.conv1_filters, c.input_channels, k, k});
  p.conv1_bias = Tensor<T>({c.conv1_filters});
  p.conv2_weight = Tensor<T>({c.conv2_filters, c.conv1_filters, k, k});
  p.conv2_bias = Tensor<T>({c.conv2_filters});
  p.bn_gamma = Tensor<T>({c.conv2_filters});
  p.bn_beta = Tensor<T>({c.conv2_filters});
  p.bn_running_mean = Tensor<T>({c.conv2_filters});
  p.bn_running_var = Tensor<T>({c.conv2_filters});
  std::size_t fan_in = c.flattened_features();
  for (std::size_t i = 0; i < kDenseLayers; ++i) {
    p.dense_weight[i] = Tensor<T>({fan_in, c.dense_widths[i]});
    p.dense_bias[i] = Tensor<T>({c.dense_widths[i]});
    fan_in = c.dense_widths[i];
  }
  return p;
}

ModelParams<float> init_params(const ModelConfig& config, std::uint64_t seed) {
  auto p = zero_params<float>(config);
  SplitMix64 rng(derive_seed(seed, 0x1A17));
  auto he_uniform = [&](Tensor<float>& w, std::size_t fan_in) {
    const double limit = std::sqrt(6.0 / double(fan_in));
    for (auto& v : w.values()) v = static_cast<float>(rng.uniform(-limit, limit));
  };
  const std::size_t k2 = config.conv_kernel * config.conv_kernel;
  he_uniform(p.conv1_weight, config.input_channels * k2);
  he_uniform(p.conv2_weight, config.conv1_filters * k2);
  std::size_t fan_in = config.flattened_features();
  for (std::size_t i = 0; i < kDenseLayers; ++i) {
    he_uniform(p.dense_weight[i], fan_in);
    fan_in = config.dense_widths[i];
  }
  p.bn_gamma.fill(1.0f);
  p.bn_running_var.fill(1.0f);
  return p;
}

template <typename To, typename From>
ModelParams<To> params_cast(const ModelParams<From>& src) {
  ModelParams<To> dst = zero_params<To>(src.config);
  auto d = dst.entries();
  auto s = src.entries();
  for (std::size_t i = 0; i < d.size(); ++i) *d[i].tensor = tensor_cast<To>(*s[i].tensor);
  return dst;
}

void check_input_shape(const ModelConfig& c, const Shape& nchw) {
  const Shape want{c.input_channels, c.input_side, c.input_side};
  if (nchw.size() != 4 || Shape(nchw.begin() + 1, nchw.end()) != want) {
    throw ValidationError("model input shape " + shape_string(nchw) + " does not match [N, " +
                          std::to_string(c.input_channels) + ", " + std::to_string(c.input_side) +
                          ", " + std::to_string(c.input_side) + "]");
  }
}

namespace {

constexpr nn::Activation dense_activation(std::size_t layer) noexcept {
  return layer + 1 < kDenseLayers ? nn::Activation::Relu : nn::Activation::None;
}

}  // namespace

template <typename T>
Tensor<T> forward_train(ModelParams<T>& p, const Tensor<T>& input, ForwardCache<T>& cache) {
  check_input_shape(p.config, input.shape());
  cache.input = input;
  cache.conv1 = nn::conv2d_forward(input, p.conv1_weight, p.conv1_bias);
  nn::relu_inplace(cache.conv1);
  cache.conv2 = nn::conv2d_forward(cache.conv1, p.conv2_weight, p.conv2_bias);
  nn::relu_inplace(cache.conv2);
  cache.pool = nn::maxpool_forward(cache.conv2, p.config.pool_window, p.config.pool_stride);
  auto bn = nn::batchnorm_forward_train(cache.pool.output, p.bn_gamma, p.bn_beta,
                                        p.bn_running_mean, p.bn_running_var);
  cache.batchnorm = std::move(bn.cache);
  const std::size_t n = input.dim(0);
  cache.flat = std::move(bn.output).reshaped({n, p.config.flattened_features()});
  const Tensor<T>* x = &cache.flat;
  for (std::size_t i = 0; i < kDenseLayers; ++i) {
    cache.dense[i] = nn::dense_forward(*x, p.dense_weight[i], p.dense_bias[i], dense_activation(i));
    x = &cache.dense[i];
  }
  return cache.dense.back();
}

template <typename T>
Tensor<T> forward_infer(const ModelParams<T>& p, const Tensor<T>& input) {
  check_input_shape(p.config, input.shape());
  auto a = nn::conv2d_forward(input, p.conv1_weight, p.conv1_bias);
  nn::relu_inplace(a);
  a = nn::conv2d_forward(a, p.conv2_weight, p.conv2_bias);
  nn::relu_inplace(a);
  auto pooled = nn::maxpool_forward(a, p.config.pool_window, p.config.pool_stride);
  auto x = nn::batchnorm_forward_infer(pooled.output, p.bn_gamma, p.bn_beta, p.bn_running_mean,
                                       p.bn_running_var)
               .reshaped({input.dim(0), p.config.flattened_features()});
  for (std::size_t i = 0; i < kDenseLayers; ++i) {
    x = nn::dense_forward(x, p.dense_weight[i], p.dense_bias[i], dense_activation(i));
  }
  return x;
}

template <typename T>
ModelParams<T> backward(const ModelParams<T>& p, const ForwardCache<T>& cache,
                        const Tensor<T>& logits_grad) {
  ModelParams<T> g = zero_params<T>(p.config);
  Tensor<T> upstream = logits_grad;
  for (std::size_t i = kDenseLayers; i-- > 0;) {
    const Tensor<T>& in = i == 0 ? cache.flat : cache.dense[i - 1];
    auto d = nn::dense_backward(in, p.dense_weight[i], cache.dense[i], upstream, dense_activation(i));
    g.dense_weight[i] = std::move(d.weights);
    g.dense_bias[i] = std::move(d.bias);
    upstream = std::move(d.input);
  }
  upstream = std::move(upstream).reshaped(cache.pool.output.shape());
  auto bn = nn::batchnorm_backward(cache.batchnorm, p.bn_gamma, upstream);
  g.bn_gamma = std::move(bn.gamma);
  g.bn_beta = std::move(bn.beta);
  upstream = nn::maxpool_backward(cache.conv2.shape(), cache.pool.argmax, bn.input);
  nn::relu_backward_inplace(cache.conv2, upstream);
  auto c2 = nn::conv2d_backward(cache.conv1, p.conv2_weight, upstream, true);
  g.conv2_weight = std::move(c2.weights);
  g.conv2_bias = std::move(c2.bias);
  upstream = std::move(c2.input);
  nn::relu_backward_inplace(cache.conv1, upstream);
  auto c1 = nn::conv2d_backward(cache.input, p.conv1_weight, upstream, false);
  g.conv1_weight = std::move(c1.weights);
  g.conv1_bias = std::move(c1.bias);
  return g;
}

std::vector<Prediction> predict_batch(const ModelParams<float>& params, const Tensor<float>& images,
                                      std::size_t chunk) {
  check_input_shape(params.config, images.shape());
  const std::size_t n = images.dim(0);
  const std::size_t per = images.size() / std::max<std::size_t>(n, 1);
  std::vector<Prediction> out;
  out.reserve(n);
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t len = std::min(chunk, n - start);
    Shape shape = images.shape();
    shape[0] = len;
    std::vector<float> slice(images.raw() + start * per, images.raw() + (start + len) * per);
    const auto probs = nn::softmax(forward_infer(params, Tensor<float>(shape, std::move(slice))));
    const std::size_t c = probs.dim(1);
    for (std::size_t i = 0; i < len; ++i) {
      Prediction pred;
      pred.probabilities.assign(probs.raw() + i * c, probs.raw() + (i + 1) * c);
      pred.label = static_cast<std::size_t>(
          std::max_element(pred.probabilities.begin(), pred.probabilities.end()) -
          pred.probabilities.begin());
      out.push_back(std::move(pred));
    }
  }
  return out;
}

Prediction predict(const ModelParams<float>& params, const Tensor<float>& image) {
  if (image.rank() == 3) {
    Shape s{1};
    s.insert(s.end(), image.shape().begin(), image.shape().end());
    return predict_batch(params, image.reshaped(s)).front();
  }
  if (image.rank() != 4 || image.dim(0) != 1) {
    throw ValidationError("predict: expected [C, H, W] or [1, C, H, W], got " + shape_string(image.shape()));
  }
  return predict_batch(params, image).front();
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<float> zero_params(const ModelConfig&);
template ModelParams<double> zero_params(const ModelConfig&);
template ModelParams<double> params_cast(const ModelParams<float>&);
template ModelParams<float> params_cast(const ModelParams<double>&);
template Tensor<float> forward_train(ModelParams<float>&, const Tensor<float>&, ForwardCache<float>&);
template Tensor<double> forward_train(ModelParams<double>&, const Tensor<double>&, ForwardCache<double>&);
template Tensor<float> forward_infer(const ModelParams<float>&, const Tensor<float>&);
template Tensor<double> forward_infer(const ModelParams<double>&, const Tensor<double>&);
template ModelParams<float> backward(const ModelParams<float>&, const ForwardCache<float>&, const Tensor<float>&);
template ModelParams<double> backward(const ModelParams<double>&, const ForwardCache<double>&, const Tensor<double>&);

}  // namespace leafrust
