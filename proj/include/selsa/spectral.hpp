#pragma once

#include "selsa/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace selsa {

// Symmetric, non-negative proposal affinity graph with positive degrees.
template <typename Scalar>
class AffinityGraph {
 public:
  explicit AffinityGraph(Matrix<Scalar> w) : w_(std::move(w)) {
    if (w_.rows() != w_.cols()) throw ConfigError("affinity matrix must be square");
    if (w_.rows() == 0) throw PreconditionError("affinity matrix is empty");
    const Scalar scale = std::max(Scalar(1), w_.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < w_.rows(); ++i) {
      for (Eigen::Index j = 0; j < w_.cols(); ++j) {
        if (!(w_(i, j) >= 0)) throw PreconditionError("negative affinity at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        if (std::abs(w_(i, j) - w_(j, i)) > Scalar(1e-12) * scale)
          throw PreconditionError("affinity matrix not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
      if (!(w_.row(i).sum() > 0)) throw PreconditionError("node " + std::to_string(i) + " has zero degree");
    }
  }

  const Matrix<Scalar>& weights() const { return w_; }
  Eigen::Index size() const { return w_.rows(); }
  Vector<Scalar> degrees() const { return w_.rowwise().sum(); }

 private:
  Matrix<Scalar> w_;
};

// Node subset A of a graph with n nodes; A and its complement are non-empty.
class Partition {
 public:
  Partition(std::vector<Eigen::Index> members, Eigen::Index n) : n_(n), in_a_(static_cast<std::size_t>(n), false) {
    for (auto i : members) {
      if (i < 0 || i >= n) throw PreconditionError("partition index " + std::to_string(i) + " out of range");
      in_a_[static_cast<std::size_t>(i)] = true;
    }
    for (Eigen::Index i = 0; i < n; ++i) (in_a_[static_cast<std::size_t>(i)] ? a_ : complement_).push_back(i);
    if (a_.empty() || complement_.empty()) throw PreconditionError("partition side is empty");
  }

  const std::vector<Eigen::Index>& a() const { return a_; }
  const std::vector<Eigen::Index>& complement() const { return complement_; }
  bool contains(Eigen::Index i) const { return in_a_[static_cast<std::size_t>(i)]; }
  Eigen::Index size() const { return n_; }

 private:
  Eigen::Index n_;
  std::vector<bool> in_a_;
  std::vector<Eigen::Index> a_, complement_;
};

// W = exp((S + S^T)/2 - max), floored at the smallest normal value so that
// no degree underflows to zero.
template <typename Derived>
AffinityGraph<typename Derived::Scalar> to_affinity(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  if (s.rows() != s.cols())
    throw ConfigError("to_affinity: similarity matrix must be square, got " + std::to_string(s.rows()) + "x" +
                      std::to_string(s.cols()));
  Matrix<Scalar> sym = (s + s.transpose()) / Scalar(2);
  const Scalar top = sym.maxCoeff();
  Matrix<Scalar> w = (sym.array() - top).exp().cwiseMax(std::numeric_limits<Scalar>::min()).matrix();
  // exp is evaluated on identical arguments for (i,j) and (j,i), but make it exact.
  w = (w + w.transpose()) / Scalar(2);
  return AffinityGraph<Scalar>(std::move(w));
}

template <typename Scalar>
Matrix<Scalar> stochastic_matrix(const AffinityGraph<Scalar>& g) {
  return g.degrees().cwiseInverse().asDiagonal() * g.weights();
}

// Degree over total volume.
template <typename Scalar>
Vector<Scalar> stationary_distribution(const AffinityGraph<Scalar>& g) {
  Vector<Scalar> deg = g.degrees();
  return deg / deg.sum();
}

// Probability that one random-walk step starting (in stationarity) inside
// `from` lands in `to`. For symmetric W this is cut(from, to) / vol(from).
template <typename Scalar>
Scalar transition_probability(const AffinityGraph<Scalar>& g, const std::vector<Eigen::Index>& from,
                              const std::vector<Eigen::Index>& to) {
  if (from.empty() || to.empty()) throw PreconditionError("transition_probability: empty partition side");
  const Matrix<Scalar> t = stochastic_matrix(g);
  const Vector<Scalar> pi = stationary_distribution(g);
  Scalar num = 0, den = 0;
  for (auto i : from) {
    den += pi(i);
    Scalar row = 0;
    for (auto j : to) row += t(i, j);
    num += pi(i) * row;
  }
  return num / den;
}

// NCut(A, A-bar) = P(A -> A-bar) + P(A-bar -> A).
template <typename Scalar>
Scalar ncut(const AffinityGraph<Scalar>& g, const Partition& p) {
  return transition_probability(g, p.a(), p.complement()) + transition_probability(g, p.complement(), p.a());
}

}  // namespace selsa
