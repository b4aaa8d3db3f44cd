#pragma once

#include <cmath>
#include <functional>

#include "symprobe/linalg.hpp"
#include "symprobe/mlp.hpp"

namespace symprobe {

inline constexpr double kFiniteDiffStep = 1e-5;

struct GradCheck {
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
  bool passed = true;
};

// Compares an analytic gradient with central differences of step h, coordinate by coordinate.
// Relative error per coordinate: |a - fd| / (|a| + |fd| + 1e-12).
template <typename Scalar>
GradCheck finite_diff_check(const VectorX<Scalar>& theta,
                            const std::function<Scalar(const VectorX<Scalar>&)>& loss,
                            const VectorX<Scalar>& analytic, double tol,
                            double h = kFiniteDiffStep) {
  if (analytic.size() != theta.size())
    throw ShapeError("finite_diff_check: gradient has " + std::to_string(analytic.size()) +
                     " entries, parameters have " + std::to_string(theta.size()));
  require_finite(analytic, "finite_diff_check analytic gradient");
  GradCheck out;
  VectorX<Scalar> probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + Scalar(h);
    const Scalar up = loss(probe);
    probe[i] = theta[i] - Scalar(h);
    const Scalar down = loss(probe);
    probe[i] = theta[i];
    if (!std::isfinite(static_cast<double>(up)) || !std::isfinite(static_cast<double>(down)))
      throw NumericError("finite_diff_check: non-finite loss at parameter " + std::to_string(i));
    const double fd = static_cast<double>(up - down) / (2.0 * h);
    const double a = static_cast<double>(analytic[i]);
    const double rel = std::abs(a - fd) / (std::abs(a) + std::abs(fd) + 1e-12);
    if (rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst_index = i;
    }
  }
  out.passed = out.max_rel_error < tol;
  return out;
}

// Loss over network parameters; writes the analytic gradient when grad is non-null.
template <typename Scalar>
using MlpLoss = std::function<Scalar(const Mlp<Scalar>&, Mlp<Scalar>* grad)>;

template <typename Scalar>
GradCheck finite_diff_check(const Mlp<Scalar>& net, const MlpLoss<Scalar>& loss, double tol,
                            double h = kFiniteDiffStep) {
  Mlp<Scalar> grad = net.zeros_like();
  const Scalar value = loss(net, &grad);
  if (!std::isfinite(static_cast<double>(value)))
    throw NumericError("finite_diff_check: non-finite loss");
  Mlp<Scalar> work = net;
  const std::function<Scalar(const VectorX<Scalar>&)> flat_loss =
      [&](const VectorX<Scalar>& theta) {
        work.assign(theta);
        return loss(work, nullptr);
      };
  return finite_diff_check<Scalar>(net.flatten(), flat_loss, grad.flatten(), tol, h);
}

}  // namespace symprobe
