#pragma once

#include "symprobe/dataset.hpp"
#include "symprobe/jacobi.hpp"
#include "symprobe/linalg.hpp"

namespace symprobe {

// Deterministic linear autoencoder z = W_enc (x - center), x_hat = center + W_dec z.
// Optimal weights are the leading principal directions of the covariance.
struct LinearVae {
  Matrix w_enc;   // k x D
  Matrix w_dec;   // D x k
  Vector center;  // D

  Matrix encode(const Matrix& x) const;
  Matrix reconstruct(const Matrix& x) const;
};

struct LinearFit {
  LinearVae model;
  double error = 0.0;        // mean squared residual per event
  Vector eigenvalues;        // all covariance eigenvalues, descending
};

// Population covariance about the column means.
Matrix covariance(const Dataset& data);
Matrix covariance(const Matrix& x);

LinearFit fit_linear_ae(const Dataset& data, Eigen::Index k);

struct Isotropy {
  bool isotropic = false;
  double max_deviation = 0.0;
};

// Max-norm distance of cov from (tr(cov)/D) * I, compared against tol.
Isotropy isotropy_check(const Matrix& cov, double tol);

}  // namespace symprobe
