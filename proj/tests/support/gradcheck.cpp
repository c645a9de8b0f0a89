#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace simstc::testing {

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max(std::abs(numeric), floor);
}

GradCheckReport check_gradients(const std::function<Tensor()>& loss,
                                const std::vector<NamedParameter>& params, double h, double floor) {
  for (auto p : params) p.tensor.zero_grad();
  backward(loss());
  GradCheckReport report;
  for (const auto& p : params) {
    Tensor t = p.tensor;
    const Matrix analytic = t.grad();
    for (std::size_t k = 0; k < t.value().size(); ++k) {
      double& x = t.mutable_value().data[k];
      const double saved = x;
      double plus, minus;
      {
        NoGradGuard no_grad;
        x = saved + h;
        plus = loss().item();
        x = saved - h;
        minus = loss().item();
      }
      x = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double err = relative_error(analytic.data[k], numeric, floor);
      ++report.entries;
      if (err >= report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = p.name;
        report.worst_index = k;
        report.worst_analytic = analytic.data[k];
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace simstc::testing
