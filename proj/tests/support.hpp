#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "symprobe/gradcheck.hpp"
#include "symprobe/vae.hpp"

namespace symprobe::testing {

inline Matrix normal_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

inline double relu_margin(const Mlp<double>& net, const Matrix& x) {
  const auto fwd = mlp_forward(net, x);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    if (net.layers[i].activation == Activation::relu)
      margin = std::min(margin, fwd.cache.pre[i].cwiseAbs().minCoeff());
  return margin;
}

// Smallest distance of any relu pre-activation from its kink over encoder and decoder.
inline double vae_kink_margin(const VaeModel& m, const Matrix& x, const Matrix& eps) {
  const auto e = encode(m, x);
  const Matrix z = e.mu + e.sigma.cwiseProduct(eps);
  return std::min(relu_margin(m.encoder, x), relu_margin(m.decoder, z));
}

// Full VAE loss with frozen noise: analytic gradient against central differences.
inline GradCheck vae_gradient_check(const VaeModel& model, const Matrix& x, const Matrix& eps,
                                    double beta, double tol = 1e-4) {
  VaeModel grad = model.zeros_like();
  vae_loss(model, x, eps, beta, &grad);
  VaeModel work = model;
  const std::function<double(const Vector&)> loss = [&](const Vector& theta) {
    work.assign(theta);
    return vae_loss(work, x, eps, beta).total;
  };
  return finite_diff_check<double>(model.flatten(), loss, grad.flatten(), tol);
}

struct TinyVaeCase {
  VaeModel model;
  Matrix x;
  Matrix eps;
  double beta = 0.1;
};

// Random tiny VAE (input <= 4, latent <= 3, one or two hidden layers of width <= 5) with
// nonzero biases, redrawn until no relu sits within 1e-3 of its kink.
inline TinyVaeCase random_tiny_vae(Rng& rng) {
  for (;;) {
    TinyVaeCase c;
    const auto d = 1 + static_cast<Eigen::Index>(rng.below(4));
    const auto k = 1 + static_cast<Eigen::Index>(rng.below(3));
    std::vector<Eigen::Index> hidden(1 + rng.below(2));
    for (auto& h : hidden) h = 1 + static_cast<Eigen::Index>(rng.below(5));
    c.model = make_vae(d, k, hidden, rng);
    Vector theta = c.model.flatten();
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += 0.1 * rng.normal();
    c.model.assign(theta);
    const auto n = 2 + static_cast<Eigen::Index>(rng.below(5));
    c.x = normal_matrix(n, d, rng);
    c.eps = normal_matrix(n, k, rng);
    c.beta = rng.uniform(0.05, 2.0);
    if (vae_kink_margin(c.model, c.x, c.eps) >= 1e-3) return c;
  }
}

}  // namespace symprobe::testing
