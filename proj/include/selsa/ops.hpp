#pragma once

#include "selsa/errors.hpp"

#include <Eigen/Dense>

#include <string>

namespace selsa {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// y = W x + b applied to every row of a row-major feature matrix.
template <typename Scalar>
struct AffineTransform {
  Matrix<Scalar> weight;  // out x in
  Vector<Scalar> bias;    // out

  AffineTransform() = default;
  AffineTransform(Eigen::Index out, Eigen::Index in)
      : weight(Matrix<Scalar>::Zero(out, in)), bias(Vector<Scalar>::Zero(out)) {}

  static AffineTransform identity(Eigen::Index dim) {
    AffineTransform t(dim, dim);
    t.weight.setIdentity();
    return t;
  }

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }

  template <typename Derived>
  Matrix<Scalar> operator()(const Eigen::MatrixBase<Derived>& x) const {
    if (x.cols() != in_dim())
      throw ConfigError("affine transform expects " + std::to_string(in_dim()) + " input columns, got " +
                        std::to_string(x.cols()));
    return (x * weight.transpose()).rowwise() + bias.transpose();
  }

  bool all_finite() const { return weight.allFinite() && bias.allFinite(); }
};

// Generalized cosine similarity between every (reference, pool) pair:
// entry (i, j) = phi(ref_i) . psi(pool_j).
template <typename DerivedR, typename DerivedP, typename Scalar = typename DerivedR::Scalar>
Matrix<Scalar> similarity_matrix(const Eigen::MatrixBase<DerivedR>& refs, const Eigen::MatrixBase<DerivedP>& pool,
                                 const AffineTransform<Scalar>& phi, const AffineTransform<Scalar>& psi) {
  if (refs.rows() == 0 || pool.rows() == 0) throw ConfigError("similarity_matrix: empty reference or pool set");
  if (phi.out_dim() != psi.out_dim())
    throw ConfigError("similarity_matrix: phi and psi output widths differ (" + std::to_string(phi.out_dim()) +
                      " vs " + std::to_string(psi.out_dim()) + ")");
  return phi(refs) * psi(pool).transpose();
}

// Row-wise softmax with max subtraction; every row of the result sums to 1.
template <typename Derived>
Matrix<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> w = s;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const Scalar m = w.row(i).maxCoeff();
    w.row(i) = (w.row(i).array() - m).exp().matrix();
    w.row(i) /= w.row(i).sum();
  }
  return w;
}

// Weighted sum of pool features: row i = sum_j w_ij pool_j.
template <typename DerivedW, typename DerivedP>
Matrix<typename DerivedW::Scalar> aggregate(const Eigen::MatrixBase<DerivedW>& w,
                                            const Eigen::MatrixBase<DerivedP>& pool) {
  if (w.cols() != pool.rows())
    throw ConfigError("aggregate: weight columns (" + std::to_string(w.cols()) + ") != pool rows (" +
                      std::to_string(pool.rows()) + ")");
  return w * pool;
}

template <typename Derived>
Matrix<typename Derived::Scalar> relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

}  // namespace selsa
