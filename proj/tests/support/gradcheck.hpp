#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "simstc/model.hpp"
#include "simstc/tensor.hpp"

namespace simstc::testing {

struct GradCheckReport {
  std::size_t entries = 0;
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// |analytic - numeric| / max(|numeric|, floor)
double relative_error(double analytic, double numeric, double floor);

// Compares the gradients left by backward(loss()) on every listed tensor with
// central differences of loss() at step h.
GradCheckReport check_gradients(const std::function<Tensor()>& loss,
                                const std::vector<NamedParameter>& params, double h, double floor);

}  // namespace simstc::testing
