#include "leafrust/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "leafrust/error.hpp"

namespace leafrust::nn {

namespace {

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
  if (shape.size() != rank) {
    throw ValidationError(std::string(what) + ": expected rank " + std::to_string(rank) +
                          ", got shape " + shape_string(shape));
  }
}

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ValidationError(std::string(what) + ": expected " + std::to_string(want) + ", got " +
                          std::to_string(got));
  }
}

// Fixed-order dot product with eight partial sums so the compiler can
// vectorize without reassociation flags.
template <typename T>
T dot(const T* __restrict a, const T* __restrict b, std::size_t n) noexcept {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

template <typename T>
T sum(const T* a, std::size_t n) noexcept {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

template <typename T>
void axpy(T alpha, const T* __restrict x, T* __restrict y, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

struct ConvDims {
  std::size_t n, cin, h, w, cout, k, pad, ph, pw;
};

template <typename T>
ConvDims conv_dims(const Tensor<T>& input, const Tensor<T>& weights) {
  require_rank(input.shape(), 4, "conv2d input");
  require_rank(weights.shape(), 4, "conv2d weights");
  const std::size_t k = weights.dim(2);
  if (weights.dim(3) != k || k % 2 == 0) {
    throw ValidationError("conv2d: kernel must be square with odd side, got " +
                          shape_string(weights.shape()));
  }
  require_dim(input.dim(1), weights.dim(1), "conv2d input channels vs weights dim 1");
  ConvDims d{input.dim(0), input.dim(1), input.dim(2), input.dim(3), weights.dim(0), k, k / 2, 0, 0};
  d.ph = d.h + 2 * d.pad;
  d.pw = d.w + 2 * d.pad;
  return d;
}

template <typename T>
void pad_sample(const Tensor<T>& input, std::size_t n, const ConvDims& d, std::vector<T>& padded) {
  padded.assign(d.cin * d.ph * d.pw, T{0});
  for (std::size_t c = 0; c < d.cin; ++c) {
    for (std::size_t y = 0; y < d.h; ++y) {
      const T* src = &input.at(n, c, y, 0);
      std::copy(src, src + d.w, padded.data() + (c * d.ph + y + d.pad) * d.pw + d.pad);
    }
  }
}

}  // namespace

// ---- convolution ---------------------------------------------------------

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  const ConvDims d = conv_dims(input, weights);
  require_dim(bias.size(), d.cout, "conv2d bias length");
  Tensor<T> out({d.n, d.cout, d.h, d.w});
  std::vector<T> padded;
  const std::size_t taps = d.cin * d.k * d.k;
  for (std::size_t n = 0; n < d.n; ++n) {
    pad_sample(input, n, d, padded);
    for (std::size_t oc = 0; oc < d.cout; ++oc) {
      const T* wk = weights.raw() + oc * taps;
      for (std::size_t y = 0; y < d.h; ++y) {
        T* orow = &out.at(n, oc, y, 0);
        std::fill(orow, orow + d.w, bias[oc]);
        for (std::size_t ic = 0; ic < d.cin; ++ic) {
          for (std::size_t ky = 0; ky < d.k; ++ky) {
            const T* irow = padded.data() + (ic * d.ph + y + ky) * d.pw;
            for (std::size_t kx = 0; kx < d.k; ++kx) {
              axpy(wk[(ic * d.k + ky) * d.k + kx], irow + kx, orow, d.w);
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights,
                               const Tensor<T>& upstream, bool want_input_grad) {
  const ConvDims d = conv_dims(input, weights);
  require_rank(upstream.shape(), 4, "conv2d upstream");
  if (upstream.shape() != Shape{d.n, d.cout, d.h, d.w}) {
    throw ValidationError("conv2d upstream shape " + shape_string(upstream.shape()) +
                          " != output shape " + shape_string({d.n, d.cout, d.h, d.w}));
  }
  Conv2dGrads<T> g;
  g.weights = Tensor<T>(weights.shape());
  g.bias = Tensor<T>({d.cout});
  if (want_input_grad) g.input = Tensor<T>(input.shape());
  const std::size_t taps = d.cin * d.k * d.k;
  const std::size_t padded_size = d.cin * d.ph * d.pw;
  std::vector<T> padded_batch(d.n * padded_size);
  {
    std::vector<T> padded;
    for (std::size_t n = 0; n < d.n; ++n) {
      pad_sample(input, n, d, padded);
      std::copy(padded.begin(), padded.end(), padded_batch.begin() + n * padded_size);
    }
  }
  // Weight gradient: per-tap row accumulators, reduced across x once at the end.
  std::vector<T> acc(taps * d.w);
  for (std::size_t oc = 0; oc < d.cout; ++oc) {
    std::fill(acc.begin(), acc.end(), T{0});
    T bsum = 0;
    for (std::size_t n = 0; n < d.n; ++n) {
      const T* pin = padded_batch.data() + n * padded_size;
      const T* gplane = &upstream.at(n, oc, 0, 0);
      for (std::size_t y = 0; y < d.h; ++y) {
        const T* grow = gplane + y * d.w;
        T rs = 0;
        for (std::size_t x = 0; x < d.w; ++x) rs += grow[x];
        bsum += rs;
        for (std::size_t ic = 0; ic < d.cin; ++ic) {
          for (std::size_t ky = 0; ky < d.k; ++ky) {
            const T* irow = pin + (ic * d.ph + y + ky) * d.pw;
            for (std::size_t kx = 0; kx < d.k; ++kx) {
              T* __restrict arow = acc.data() + ((ic * d.k + ky) * d.k + kx) * d.w;
              const T* __restrict src = irow + kx;
              for (std::size_t x = 0; x < d.w; ++x) arow[x] += grow[x] * src[x];
            }
          }
        }
      }
    }
    g.bias[oc] = bsum;
    T* gw = g.weights.raw() + oc * taps;
    for (std::size_t t = 0; t < taps; ++t) gw[t] = sum(acc.data() + t * d.w, d.w);
  }
  if (!want_input_grad) return g;
  std::vector<T> dpadded;
  for (std::size_t n = 0; n < d.n; ++n) {
    dpadded.assign(d.cin * d.ph * d.pw, T{0});
    for (std::size_t ic = 0; ic < d.cin; ++ic) {
      for (std::size_t oc = 0; oc < d.cout; ++oc) {
        const T* gplane = &upstream.at(n, oc, 0, 0);
        const T* wk = weights.raw() + oc * taps + ic * d.k * d.k;
        for (std::size_t y = 0; y < d.h; ++y) {
          const T* grow = gplane + y * d.w;
          for (std::size_t ky = 0; ky < d.k; ++ky) {
            T* drow = dpadded.data() + (ic * d.ph + y + ky) * d.pw;
            for (std::size_t kx = 0; kx < d.k; ++kx) axpy(wk[ky * d.k + kx], grow, drow + kx, d.w);
          }
        }
      }
      for (std::size_t y = 0; y < d.h; ++y) {
        const T* src = dpadded.data() + (ic * d.ph + y + d.pad) * d.pw + d.pad;
        std::copy(src, src + d.w, &g.input.at(n, ic, y, 0));
      }
    }
  }
  return g;
}

// ---- elementwise ---------------------------------------------------------

template <typename T>
void relu_inplace(Tensor<T>& x) noexcept {
  // NaN passes through so divergence stays visible downstream.
  for (auto& v : x.values()) v = v < T{0} ? T{0} : v;
}

template <typename T>
void relu_backward_inplace(const Tensor<T>& activated, Tensor<T>& upstream) noexcept {
  const auto a = activated.values();
  auto g = upstream.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = a[i] > T{0} ? g[i] : T{0};
}

// ---- max pooling ---------------------------------------------------------

template <typename T>
MaxPoolResult<T> maxpool_forward(const Tensor<T>& input, std::size_t window, std::size_t stride) {
  require_rank(input.shape(), 4, "maxpool input");
  if (window == 0 || stride == 0) throw ValidationError("maxpool: window and stride must be >= 1");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h < window || w < window) {
    throw ValidationError("maxpool: spatial size " + std::to_string(h) + "x" + std::to_string(w) +
                          " smaller than window " + std::to_string(window));
  }
  const std::size_t oh = (h - window) / stride + 1;
  const std::size_t ow = (w - window) / stride + 1;
  MaxPoolResult<T> r{Tensor<T>({n, c, oh, ow}), std::vector<std::uint32_t>(n * c * oh * ow)};
  std::size_t o = 0;
  for (std::size_t p = 0; p < n * c; ++p) {
    const std::size_t base = p * h * w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x, ++o) {
        std::size_t best = base + (y * stride) * w + x * stride;
        T best_v = input[best];
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) {
            const std::size_t idx = base + (y * stride + dy) * w + x * stride + dx;
            if (input[idx] > best_v || input[idx] != input[idx]) {
              best_v = input[idx];
              best = idx;
            }
          }
        }
        r.output[o] = best_v;
        r.argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool_backward(const Shape& input_shape, std::span<const std::uint32_t> argmax,
                           const Tensor<T>& upstream) {
  require_dim(upstream.size(), argmax.size(), "maxpool upstream length vs argmax");
  Tensor<T> g(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += upstream[i];
  return g;
}

// ---- batch normalization -------------------------------------------------

namespace {

struct BnDims {
  std::size_t n, c, plane;
};

template <typename T>
BnDims bn_dims(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta) {
  if (input.rank() != 4 && input.rank() != 2) {
    throw ValidationError("batchnorm: input must be rank 2 or 4, got " + shape_string(input.shape()));
  }
  BnDims d{input.dim(0), input.dim(1), input.rank() == 4 ? input.dim(2) * input.dim(3) : 1};
  require_dim(gamma.size(), d.c, "batchnorm gamma length");
  require_dim(beta.size(), d.c, "batchnorm beta length");
  return d;
}

}  // namespace

template <typename T>
BatchNormTrainResult<T> batchnorm_forward_train(const Tensor<T>& input, const Tensor<T>& gamma,
                                                const Tensor<T>& beta, Tensor<T>& running_mean,
                                                Tensor<T>& running_var) {
  const BnDims d = bn_dims(input, gamma, beta);
  if (d.n < 2) throw ValidationError("batchnorm: training mode needs batch size >= 2, got " + std::to_string(d.n));
  require_dim(running_mean.size(), d.c, "batchnorm running_mean length");
  require_dim(running_var.size(), d.c, "batchnorm running_var length");
  BatchNormTrainResult<T> r;
  r.output = Tensor<T>(input.shape());
  r.cache.normalized = Tensor<T>(input.shape());
  r.cache.inv_std.resize(d.c);
  r.cache.batch_mean.resize(d.c);
  r.cache.batch_var.resize(d.c);
  const double m = static_cast<double>(d.n * d.plane);
  for (std::size_t c = 0; c < d.c; ++c) {
    double sum = 0.0;
    for (std::size_t n = 0; n < d.n; ++n) {
      const T* x = input.raw() + (n * d.c + c) * d.plane;
      for (std::size_t i = 0; i < d.plane; ++i) sum += x[i];
    }
    const double mean = sum / m;
    double sq = 0.0;
    for (std::size_t n = 0; n < d.n; ++n) {
      const T* x = input.raw() + (n * d.c + c) * d.plane;
      for (std::size_t i = 0; i < d.plane; ++i) {
        const double dv = x[i] - mean;
        sq += dv * dv;
      }
    }
    const double var = sq / m;
    const double inv_std = 1.0 / std::sqrt(var + kBatchNormEpsilon);
    const T g = gamma[c];
    const T b = beta[c];
    for (std::size_t n = 0; n < d.n; ++n) {
      const std::size_t off = (n * d.c + c) * d.plane;
      for (std::size_t i = 0; i < d.plane; ++i) {
        const T xh = static_cast<T>((input[off + i] - mean) * inv_std);
        r.cache.normalized[off + i] = xh;
        r.output[off + i] = g * xh + b;
      }
    }
    r.cache.inv_std[c] = static_cast<T>(inv_std);
    r.cache.batch_mean[c] = static_cast<T>(mean);
    r.cache.batch_var[c] = static_cast<T>(var);
    running_mean[c] = static_cast<T>(kBatchNormMomentum * running_mean[c] + (1.0 - kBatchNormMomentum) * mean);
    running_var[c] = static_cast<T>(kBatchNormMomentum * running_var[c] + (1.0 - kBatchNormMomentum) * var);
  }
  return r;
}

template <typename T>
Tensor<T> batchnorm_forward_infer(const Tensor<T>& input, const Tensor<T>& gamma,
                                  const Tensor<T>& beta, const Tensor<T>& running_mean,
                                  const Tensor<T>& running_var) {
  const BnDims d = bn_dims(input, gamma, beta);
  require_dim(running_mean.size(), d.c, "batchnorm running_mean length");
  require_dim(running_var.size(), d.c, "batchnorm running_var length");
  Tensor<T> out(input.shape());
  for (std::size_t c = 0; c < d.c; ++c) {
    const double inv_std = 1.0 / std::sqrt(double(running_var[c]) + kBatchNormEpsilon);
    const T scale = static_cast<T>(gamma[c] * inv_std);
    const T shift = static_cast<T>(beta[c] - running_mean[c] * gamma[c] * inv_std);
    for (std::size_t n = 0; n < d.n; ++n) {
      const std::size_t off = (n * d.c + c) * d.plane;
      for (std::size_t i = 0; i < d.plane; ++i) out[off + i] = input[off + i] * scale + shift;
    }
  }
  return out;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormCache<T>& cache, const Tensor<T>& gamma,
                                     const Tensor<T>& upstream) {
  const auto& xh = cache.normalized;
  if (upstream.shape() != xh.shape()) {
    throw ValidationError("batchnorm upstream shape " + shape_string(upstream.shape()) +
                          " != input shape " + shape_string(xh.shape()));
  }
  const BnDims d{xh.dim(0), xh.dim(1), xh.rank() == 4 ? xh.dim(2) * xh.dim(3) : 1};
  require_dim(gamma.size(), d.c, "batchnorm gamma length");
  BatchNormGrads<T> g{Tensor<T>(xh.shape()), Tensor<T>({d.c}), Tensor<T>({d.c})};
  const double m = static_cast<double>(d.n * d.plane);
  for (std::size_t c = 0; c < d.c; ++c) {
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (std::size_t n = 0; n < d.n; ++n) {
      const std::size_t off = (n * d.c + c) * d.plane;
      for (std::size_t i = 0; i < d.plane; ++i) {
        sum_g += upstream[off + i];
        sum_gx += double(upstream[off + i]) * xh[off + i];
      }
    }
    g.gamma[c] = static_cast<T>(sum_gx);
    g.beta[c] = static_cast<T>(sum_g);
    // dx = gamma * inv_std / m * (m * g - sum(g) - x_hat * sum(g * x_hat))
    const double k = double(gamma[c]) * cache.inv_std[c] / m;
    for (std::size_t n = 0; n < d.n; ++n) {
      const std::size_t off = (n * d.c + c) * d.plane;
      for (std::size_t i = 0; i < d.plane; ++i) {
        g.input[off + i] = static_cast<T>(k * (m * upstream[off + i] - sum_g - xh[off + i] * sum_gx));
      }
    }
  }
  return g;
}

// ---- dense ---------------------------------------------------------------

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                        Activation activation) {
  require_rank(input.shape(), 2, "dense input");
  require_rank(weights.shape(), 2, "dense weights");
  const std::size_t n = input.dim(0), din = input.dim(1), k = weights.dim(1);
  require_dim(din, weights.dim(0), "dense input features vs weights dim 0");
  require_dim(bias.size(), k, "dense bias length");
  Tensor<T> out({n, k});
  for (std::size_t i = 0; i < n; ++i) std::copy(bias.raw(), bias.raw() + k, out.raw() + i * k);
  for (std::size_t j = 0; j < din; ++j) {
    const T* wrow = weights.raw() + j * k;
    for (std::size_t i = 0; i < n; ++i) axpy(input[i * din + j], wrow, out.raw() + i * k, k);
  }
  if (activation == Activation::Relu) relu_inplace(out);
  return out;
}

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weights,
                             const Tensor<T>& output, const Tensor<T>& upstream,
                             Activation activation) {
  require_rank(input.shape(), 2, "dense input");
  const std::size_t n = input.dim(0), din = input.dim(1), k = weights.dim(1);
  require_dim(din, weights.dim(0), "dense input features vs weights dim 0");
  if (upstream.shape() != Shape{n, k}) {
    throw ValidationError("dense upstream shape " + shape_string(upstream.shape()) +
                          " != output shape " + shape_string({n, k}));
  }
  Tensor<T> g = upstream;
  if (activation == Activation::Relu) relu_backward_inplace(output, g);
  DenseGrads<T> r{Tensor<T>({n, din}), Tensor<T>({din, k}), Tensor<T>({k})};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) r.bias[c] += g[i * k + c];
  }
  for (std::size_t j = 0; j < din; ++j) {
    const T* wrow = weights.raw() + j * k;
    T* dwrow = r.weights.raw() + j * k;
    for (std::size_t i = 0; i < n; ++i) {
      const T* grow = g.raw() + i * k;
      axpy(input[i * din + j], grow, dwrow, k);
      r.input[i * din + j] = dot(wrow, grow, k);
    }
  }
  return r;
}

// ---- loss ----------------------------------------------------------------

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  require_rank(logits.shape(), 2, "softmax logits");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  Tensor<T> p(logits.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = logits.raw() + i * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(double(row[j]) - mx);
    for (std::size_t j = 0; j < c; ++j) p[i * c + j] = static_cast<T>(std::exp(double(row[j]) - mx) / z);
  }
  return p;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::size_t> labels) {
  require_rank(logits.shape(), 2, "cross-entropy logits");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  require_dim(labels.size(), n, "cross-entropy label count");
  for (auto label : labels) {
    if (label >= c) {
      throw ValidationError("cross-entropy: label " + std::to_string(label) + " outside [0, " +
                            std::to_string(c) + ")");
    }
  }
  LossResult<T> r{0.0, Tensor<T>(logits.shape())};
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = logits.raw() + i * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(double(row[j]) - mx);
    const double log_z = std::log(z) + mx;
    total += log_z - double(row[labels[i]]);
    for (std::size_t j = 0; j < c; ++j) {
      const double p = std::exp(double(row[j]) - log_z);
      r.gradient[i * c + j] = static_cast<T>((p - (j == labels[i] ? 1.0 : 0.0)) / double(n));
    }
  }
  r.loss = total / double(n);
  return r;
}

#define LEAFRUST_INSTANTIATE_LAYERS(T)                                                            \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);        \
  template Conv2dGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                          bool);                                                  \
  template void relu_inplace(Tensor<T>&) noexcept;                                                \
  template void relu_backward_inplace(const Tensor<T>&, Tensor<T>&) noexcept;                     \
  template MaxPoolResult<T> maxpool_forward(const Tensor<T>&, std::size_t, std::size_t);          \
  template Tensor<T> maxpool_backward(const Shape&, std::span<const std::uint32_t>,               \
                                      const Tensor<T>&);                                          \
  template BatchNormTrainResult<T> batchnorm_forward_train(const Tensor<T>&, const Tensor<T>&,    \
                                                           const Tensor<T>&, Tensor<T>&,          \
                                                           Tensor<T>&);                           \
  template Tensor<T> batchnorm_forward_infer(const Tensor<T>&, const Tensor<T>&,                  \
                                             const Tensor<T>&, const Tensor<T>&,                  \
                                             const Tensor<T>&);                                   \
  template BatchNormGrads<T> batchnorm_backward(const BatchNormCache<T>&, const Tensor<T>&,       \
                                                const Tensor<T>&);                                \
  template Tensor<T> dense_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                   Activation);                                                   \
  template DenseGrads<T> dense_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                        const Tensor<T>&, Activation);                            \
  template Tensor<T> softmax(const Tensor<T>&);                                                   \
  template LossResult<T> softmax_cross_entropy(const Tensor<T>&, std::span<const std::size_t>);

LEAFRUST_INSTANTIATE_LAYERS(float)
LEAFRUST_INSTANTIATE_LAYERS(double)

#undef LEAFRUST_INSTANTIATE_LAYERS

}  // namespace leafrust::nn
