#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "leafrust/layers.hpp"
#include "leafrust/tensor.hpp"

namespace leafrust {

/// Architecture of the nine-layer classifier:
///   Conv -> Conv -> MaxPool -> BatchNorm -> Flatten -> Dense x4
/// Both convolutions and the first three dense layers are followed by ReLU.
struct ModelConfig {
  std::size_t input_side = 128;
  std::size_t input_channels = 1;
  std::size_t conv1_filters = 32;
  std::size_t conv2_filters = 64;
  std::size_t conv_kernel = 3;
  std::size_t pool_window = 2;
  std::size_t pool_stride = 2;
  std::array<std::size_t, 4> dense_widths{128, 64, 32, 2};

  std::size_t pooled_side() const noexcept;
  std::size_t flattened_features() const noexcept;
  std::size_t class_count() const noexcept { return dense_widths[3]; }

  /// Reduced widths that keep the same nine-layer topology but train in a
  /// minute or two on one CPU core at 128x128.
  static ModelConfig compact();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void validate(const ModelConfig& config);

inline constexpr std::size_t kDenseLayers = 4;

/// Learnable parameters plus batch-norm running statistics.
template <typename T>
struct ModelParams {
  ModelConfig config;
  Tensor<T> conv1_weight, conv1_bias;
  Tensor<T> conv2_weight, conv2_bias;
  Tensor<T> bn_gamma, bn_beta;
  Tensor<T> bn_running_mean, bn_running_var;
  std::array<Tensor<T>, kDenseLayers> dense_weight, dense_bias;

  struct Entry {
    std::string name;   // "dense1.weight"
    std::string layer;  // "dense1"
    Tensor<T>* tensor;
    bool trainable;
  };
  struct ConstEntry {
    std::string name;
    std::string layer;
    const Tensor<T>* tensor;
    bool trainable;
  };

  // Stable order: conv1, conv2, batchnorm, dense1..dense4.
  std::vector<Entry> entries();
  std::vector<ConstEntry> entries() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Parameters with the correct shapes, all zero (also used for gradients).
template <typename T>
ModelParams<T> zero_params(const ModelConfig& config);

/// He-uniform weights (limit sqrt(6 / fan_in)), zero biases, gamma 1,
/// beta 0, running mean 0, running variance 1. Pure function of the seed.
ModelParams<float> init_params(const ModelConfig& config, std::uint64_t seed);

template <typename To, typename From>
ModelParams<To> params_cast(const ModelParams<From>& src);

template <typename T>
struct ForwardCache {
  Tensor<T> input;
  Tensor<T> conv1;  // post-ReLU
  Tensor<T> conv2;  // post-ReLU
  nn::MaxPoolResult<T> pool;
  nn::BatchNormCache<T> batchnorm;
  Tensor<T> flat;  // batch-norm output as [N, features]
  std::array<Tensor<T>, kDenseLayers> dense;
};

// Training-mode forward pass; updates running statistics. Returns logits.
template <typename T>
Tensor<T> forward_train(ModelParams<T>& params, const Tensor<T>& input, ForwardCache<T>& cache);

// Inference-mode forward pass (running statistics). Returns logits.
template <typename T>
Tensor<T> forward_infer(const ModelParams<T>& params, const Tensor<T>& input);

// Gradients of the loss for every tensor (running-stat slots stay zero).
template <typename T>
ModelParams<T> backward(const ModelParams<T>& params, const ForwardCache<T>& cache,
                        const Tensor<T>& logits_grad);

struct Prediction {
  std::size_t label = 0;
  std::vector<double> probabilities;
};

// Accepts [C, H, W] or [1, C, H, W].
Prediction predict(const ModelParams<float>& params, const Tensor<float>& image);
// Batched inference over [N, C, H, W], processed in chunks.
std::vector<Prediction> predict_batch(const ModelParams<float>& params,
                                      const Tensor<float>& images, std::size_t chunk = 64);

void check_input_shape(const ModelConfig& config, const Shape& nchw);

}  // namespace leafrust
