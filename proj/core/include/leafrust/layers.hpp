#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "leafrust/tensor.hpp"

// Forward/backward kernels for the network layers. Every function is
// templated on the scalar type and instantiated for float (training) and
// double (gradient checking). Shape errors throw ValidationError.
namespace leafrust::nn {

// ---- convolution ---------------------------------------------------------
// Cross-correlation with stride 1 and zero "same" padding (odd kernel side).
// input [N, Cin, H, W], weights [Cout, Cin, K, K], bias [Cout].

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);

template <typename T>
struct Conv2dGrads {
  Tensor<T> input;  // empty when not requested
  Tensor<T> weights;
  Tensor<T> bias;
};

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights,
                               const Tensor<T>& upstream, bool want_input_grad = true);

// ---- elementwise ---------------------------------------------------------

template <typename T>
void relu_inplace(Tensor<T>& x) noexcept;

// Zeros upstream where the post-activation output is not positive.
template <typename T>
void relu_backward_inplace(const Tensor<T>& activated, Tensor<T>& upstream) noexcept;

// ---- max pooling ---------------------------------------------------------
// Square window, stride; output side = floor(input / stride). Ties resolve to
// the first element in row-major order within the window.

template <typename T>
struct MaxPoolResult {
  Tensor<T> output;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
};

template <typename T>
MaxPoolResult<T> maxpool_forward(const Tensor<T>& input, std::size_t window = 2,
                                 std::size_t stride = 2);

template <typename T>
Tensor<T> maxpool_backward(const Shape& input_shape, std::span<const std::uint32_t> argmax,
                           const Tensor<T>& upstream);

// ---- batch normalization -------------------------------------------------
// Per-channel over (N, H, W). Works on rank-4 [N, C, H, W] or rank-2 [N, C].

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;  // r <- m*r + (1-m)*batch

template <typename T>
struct BatchNormCache {
  Tensor<T> normalized;       // x_hat
  std::vector<T> inv_std;     // per channel
  std::vector<T> batch_mean;  // per channel
  std::vector<T> batch_var;   // per channel, biased
};

template <typename T>
struct BatchNormTrainResult {
  Tensor<T> output;
  BatchNormCache<T> cache;
};

// Normalizes with batch statistics and folds them into the running
// statistics. Requires N >= 2.
template <typename T>
BatchNormTrainResult<T> batchnorm_forward_train(const Tensor<T>& input, const Tensor<T>& gamma,
                                                const Tensor<T>& beta, Tensor<T>& running_mean,
                                                Tensor<T>& running_var);

template <typename T>
Tensor<T> batchnorm_forward_infer(const Tensor<T>& input, const Tensor<T>& gamma,
                                  const Tensor<T>& beta, const Tensor<T>& running_mean,
                                  const Tensor<T>& running_var);

template <typename T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormCache<T>& cache, const Tensor<T>& gamma,
                                     const Tensor<T>& upstream);

// ---- dense ---------------------------------------------------------------
// input [N, D], weights [D, K], bias [K].

enum class Activation { None, Relu };

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                        Activation activation);

template <typename T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

// `output` is the forward result (post-activation), used for the ReLU mask.
template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weights,
                             const Tensor<T>& output, const Tensor<T>& upstream,
                             Activation activation);

// ---- loss ----------------------------------------------------------------

template <typename T>
struct LossResult {
  double loss = 0.0;  // mean over the batch
  Tensor<T> gradient;
};

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::size_t> labels);

// Row-wise stable softmax of [N, C] logits.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

}  // namespace leafrust::nn
