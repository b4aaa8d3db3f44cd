#include "symprobe/linbase.hpp"

namespace symprobe {

Matrix LinearVae::encode(const Matrix& x) const {
  if (x.cols() != center.size())
    throw ShapeError("linear vae: input " + shape_str(x) + ", model width " +
                     std::to_string(center.size()));
  return (x.rowwise() - center.transpose()) * w_enc.transpose();
}

Matrix LinearVae::reconstruct(const Matrix& x) const {
  Matrix out = encode(x) * w_dec.transpose();
  out.rowwise() += center.transpose();
  return out;
}

Matrix covariance(const Matrix& x) {
  if (x.rows() < 2) throw ShapeError("covariance: need at least two events");
  const Matrix centered = x.rowwise() - x.colwise().mean();
  Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows());
  // Exact symmetry; the product can differ in the last bit across the diagonal.
  cov = 0.5 * (cov + cov.transpose()).eval();
  require_finite(cov, "covariance");
  return cov;
}

Matrix covariance(const Dataset& data) {
  data.validate();
  return covariance(data.features);
}

LinearFit fit_linear_ae(const Dataset& data, Eigen::Index k) {
  data.validate();
  const Eigen::Index dim = data.cols();
  if (k < 1 || k > dim)
    throw ConfigError("fit_linear_ae: k must be in [1, " + std::to_string(dim) + "], got " +
                      std::to_string(k));
  const Matrix cov = covariance(data);
  const auto eig = jacobi_eigen(cov);

  LinearFit fit;
  fit.model.center = data.features.colwise().mean().transpose();
  fit.model.w_enc = eig.vectors.leftCols(k).transpose();
  fit.model.w_dec = eig.vectors.leftCols(k);
  fit.eigenvalues = eig.values;
  const Matrix residual = data.features - fit.model.reconstruct(data.features);
  fit.error = residual.squaredNorm() / static_cast<double>(data.rows());
  return fit;
}

Isotropy isotropy_check(const Matrix& cov, double tol) {
  if (cov.rows() != cov.cols() || cov.rows() == 0)
    throw ShapeError("isotropy_check: matrix is " + shape_str(cov));
  const double level = cov.trace() / static_cast<double>(cov.rows());
  const Matrix target = level * Matrix::Identity(cov.rows(), cov.cols());
  Isotropy out;
  out.max_deviation = (cov - target).cwiseAbs().maxCoeff();
  out.isotropic = out.max_deviation <= tol;
  return out;
}

}  // namespace symprobe
