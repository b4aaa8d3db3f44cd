#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "symprobe/linalg.hpp"

namespace symprobe {

template <typename Scalar>
struct SymmetricEigen {
  VectorX<Scalar> values;   // descending
  MatrixX<Scalar> vectors;  // column k pairs with values[k]
};

// Cyclic Jacobi rotations for a real symmetric matrix. Sweeps until the off-diagonal
// Frobenius norm drops below machine precision relative to the full norm.
template <typename Scalar>
SymmetricEigen<Scalar> jacobi_eigen(const MatrixX<Scalar>& sym, double symmetry_tol = 1e-9,
                                    int max_sweeps = 100) {
  using std::abs;
  using std::sqrt;
  const Eigen::Index n = sym.rows();
  if (n != sym.cols()) throw ShapeError("jacobi_eigen: matrix is " + shape_str(sym));
  require_finite(sym, "jacobi_eigen input");
  const double scale = std::max(1.0, static_cast<double>(sym.cwiseAbs().maxCoeff()));
  if (n > 0 &&
      static_cast<double>((sym - sym.transpose()).cwiseAbs().maxCoeff()) > symmetry_tol * scale)
    throw NumericError("jacobi_eigen: matrix is not symmetric");

  MatrixX<Scalar> a = (sym + sym.transpose()) / Scalar(2);
  MatrixX<Scalar> v = MatrixX<Scalar>::Identity(n, n);
  const Scalar total = a.norm();
  const Scalar eps = Eigen::NumTraits<Scalar>::epsilon();

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Scalar off = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (sqrt(off) <= eps * total) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        // Rotation angle zeroing a(p,q); t is the smaller root of t^2 + 2 theta t - 1 = 0.
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                         (abs(theta) + sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p);
          const Scalar akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k);
          const Scalar aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = Scalar(0);
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p);
          const Scalar vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  SymmetricEigen<Scalar> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.values[k] = a(src, src);
    out.vectors.col(k) = v.col(src);
  }
  return out;
}

}  // namespace symprobe
