#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace leafrust::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<T> first_moment;
  std::vector<T> second_moment;

  explicit AdamState(std::size_t n = 0) : first_moment(n, T{0}), second_moment(n, T{0}) {}
};

// One bias-corrected Adam update; `step` is 1-based.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state,
               std::uint64_t step, const AdamConfig& config);

}  // namespace leafrust::nn
