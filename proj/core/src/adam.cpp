#include "leafrust/adam.hpp"

#include <cmath>

#include "leafrust/error.hpp"

namespace leafrust::nn {

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state,
               std::uint64_t step, const AdamConfig& config) {
  if (step == 0) throw ValidationError("adam_step: step index is 1-based");
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ValidationError("adam_step: parameter, gradient, and state sizes differ");
  }
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, double(step));
  const double c2 = 1.0 - std::pow(b2, double(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = b1 * state.first_moment[i] + (1.0 - b1) * g;
    const double v = b2 * state.second_moment[i] + (1.0 - b2) * g * g;
    state.first_moment[i] = static_cast<T>(m);
    state.second_moment[i] = static_cast<T>(v);
    const double update = config.learning_rate * (m / c1) / (std::sqrt(v / c2) + config.epsilon);
    params[i] = static_cast<T>(params[i] - update);
  }
}

template void adam_step(std::span<float>, std::span<const float>, AdamState<float>&, std::uint64_t,
                        const AdamConfig&);
template void adam_step(std::span<double>, std::span<const double>, AdamState<double>&,
                        std::uint64_t, const AdamConfig&);

}  // namespace leafrust::nn
