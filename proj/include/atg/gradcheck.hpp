#pragma once

#include <algorithm>
#include <cmath>

#include "atg/tensor.hpp"

namespace atg {

// Compares reverse-mode gradients of a tensor-to-scalar function against
// central differences. The analytic side runs at the library's training
// precision; the numeric side re-executes f entirely in double, so f must be
// callable with both TensorT<float> and TensorT<double> arguments.
// Returns max over coordinates of
//   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
template <typename F>
double finite_diff_check(F&& f, const Tensor& x, double h) {
  if (h <= 0.0) throw ValueError("finite_diff_check: h must be positive");

  Tensor probe = x.detach();
  probe.set_requires_grad(true);
  Tensor y = f(probe);
  if (y.size() != 1)
    throw ValueError("finite_diff_check: f must return a scalar");
  backward(y);
  const std::vector<float>& analytic = probe.grad();

  DTensor xd = cast<double>(x);
  double max_err = 0.0;
  NoGradGuard no_grad;
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const double saved = xd.data()[i];
    xd.data()[i] = saved + h;
    const double fp = f(xd).item();
    xd.data()[i] = saved - h;
    const double fm = f(xd).item();
    xd.data()[i] = saved;
    const double numeric = (fp - fm) / (2.0 * h);
    const double a = static_cast<double>(analytic[i]);
    const double err =
        std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace atg
