#pragma once

#include <cmath>
#include <cstdint>
#include <type_traits>

#include "symprobe/linalg.hpp"

namespace symprobe {

template <typename Scalar>
struct AdamState {
  VectorX<Scalar> m;
  VectorX<Scalar> v;
  std::int64_t t = 0;
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);

  static AdamState zeros(Eigen::Index num_params, Scalar lr = Scalar(1e-3)) {
    AdamState s;
    s.m = VectorX<Scalar>::Zero(num_params);
    s.v = VectorX<Scalar>::Zero(num_params);
    s.lr = lr;
    return s;
  }

  friend bool operator==(const AdamState& a, const AdamState& b) {
    return a.t == b.t && a.lr == b.lr && a.beta1 == b.beta1 && a.beta2 == b.beta2 &&
           a.eps == b.eps && a.m.size() == b.m.size() && a.v.size() == b.v.size() &&
           a.m == b.m && a.v == b.v;
  }
};

// One bias-corrected Adam update, in place on params and state.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, std::type_identity_t<Eigen::Ref<VectorX<Scalar>>> params,
               const std::type_identity_t<Eigen::Ref<const VectorX<Scalar>>>& grads) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw ShapeError("adam_step: params " + std::to_string(params.size()) + ", grads " +
                     std::to_string(grads.size()) + ", moments " +
                     std::to_string(state.m.size()));
  require_finite(grads, "adam_step gradient");

  state.t += 1;
  state.m = state.beta1 * state.m + (Scalar(1) - state.beta1) * grads;
  state.v = state.beta2 * state.v + (Scalar(1) - state.beta2) * grads.cwiseAbs2();
  const Scalar bc1 = Scalar(1) - std::pow(state.beta1, static_cast<Scalar>(state.t));
  const Scalar bc2 = Scalar(1) - std::pow(state.beta2, static_cast<Scalar>(state.t));
  params.array() -= state.lr * (state.m.array() / bc1) /
                    ((state.v.array() / bc2).sqrt() + state.eps);
}

}  // namespace symprobe
