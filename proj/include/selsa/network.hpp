#pragma once

#include "selsa/ops.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <string_view>
#include <utility>

namespace selsa {

// FC -> SELSA -> FC -> SELSA -> classifier. Each SELSA block owns its own
// phi/psi pair; fc layers are followed by ReLU. The classifier emits
// num_classes + 1 logits, the last one being background.
//
// With residual set, each block outputs h + sum_j w_ij h_j instead of the
// pure weighted sum.
template <typename Scalar>
struct SelsaParams {
  AffineTransform<Scalar> fc1, fc2;
  AffineTransform<Scalar> phi1, psi1, phi2, psi2;
  AffineTransform<Scalar> classifier;
  bool residual = false;

  SelsaParams() = default;
  SelsaParams(Eigen::Index feature_dim, Eigen::Index sim_dim, Eigen::Index num_classes)
      : fc1(feature_dim, feature_dim),
        fc2(feature_dim, feature_dim),
        phi1(sim_dim, feature_dim),
        psi1(sim_dim, feature_dim),
        phi2(sim_dim, feature_dim),
        psi2(sim_dim, feature_dim),
        classifier(num_classes + 1, feature_dim) {}

  Eigen::Index feature_dim() const { return fc1.in_dim(); }
  Eigen::Index sim_dim() const { return phi1.out_dim(); }
  Eigen::Index num_classes() const { return classifier.out_dim() - 1; }

  // Visits every (name, transform) pair in checkpoint order.
  template <typename F>
  void for_each_transform(F&& f) {
    f(std::string_view("fc1"), fc1);
    f(std::string_view("fc2"), fc2);
    f(std::string_view("phi1"), phi1);
    f(std::string_view("psi1"), psi1);
    f(std::string_view("phi2"), phi2);
    f(std::string_view("psi2"), psi2);
    f(std::string_view("classifier"), classifier);
  }
  template <typename F>
  void for_each_transform(F&& f) const {
    const_cast<SelsaParams*>(this)->for_each_transform(
        [&](std::string_view name, AffineTransform<Scalar>& t) { f(name, static_cast<const AffineTransform<Scalar>&>(t)); });
  }

  // Throws ConfigError when tensor shapes disagree with each other.
  void validate() const {
    const auto d = feature_dim();
    const auto ds = sim_dim();
    auto check = [](const AffineTransform<Scalar>& t, Eigen::Index out, Eigen::Index in, std::string_view name) {
      if (t.weight.rows() != out || t.weight.cols() != in || t.bias.size() != out)
        throw ConfigError("parameter '" + std::string(name) + "' has shape " + std::to_string(t.weight.rows()) + "x" +
                          std::to_string(t.weight.cols()) + ", expected " + std::to_string(out) + "x" +
                          std::to_string(in));
    };
    check(fc1, d, d, "fc1");
    check(fc2, d, d, "fc2");
    check(phi1, ds, d, "phi1");
    check(psi1, ds, d, "psi1");
    check(phi2, ds, d, "phi2");
    check(psi2, ds, d, "psi2");
    check(classifier, classifier.out_dim(), d, "classifier");
  }

  bool all_finite() const {
    bool ok = true;
    for_each_transform([&](std::string_view, const AffineTransform<Scalar>& t) { ok = ok && t.all_finite(); });
    return ok;
  }

  // Hash of every parameter bit; used to detect stale forward caches.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ull ^ static_cast<std::uint64_t>(residual);
    auto mix = [&](const Scalar* p, Eigen::Index n) {
      const auto* bytes = reinterpret_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < static_cast<std::size_t>(n) * sizeof(Scalar); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
      }
    };
    for_each_transform([&](std::string_view, const AffineTransform<Scalar>& t) {
      mix(t.weight.data(), t.weight.size());
      mix(t.bias.data(), t.bias.size());
    });
    return h;
  }

  SelsaParams& operator+=(const SelsaParams& other) {
    axpy(Scalar(1), other);
    return *this;
  }

  // this += alpha * other
  void axpy(Scalar alpha, const SelsaParams& other) {
    auto dst = transforms();
    auto src = other.transforms();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i]->weight += alpha * src[i]->weight;
      dst[i]->bias += alpha * src[i]->bias;
    }
  }

  SelsaParams zeros_like() const {
    SelsaParams z = *this;
    z.for_each_transform([](std::string_view, AffineTransform<Scalar>& t) {
      t.weight.setZero();
      t.bias.setZero();
    });
    return z;
  }

 private:
  std::array<AffineTransform<Scalar>*, 7> transforms() { return {&fc1, &fc2, &phi1, &psi1, &phi2, &psi2, &classifier}; }
  std::array<const AffineTransform<Scalar>*, 7> transforms() const {
    return {&fc1, &fc2, &phi1, &psi1, &phi2, &psi2, &classifier};
  }
};

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
template <typename Scalar, typename Rng>
SelsaParams<Scalar> init_params(Eigen::Index feature_dim, Eigen::Index sim_dim, Eigen::Index num_classes, Rng& rng) {
  SelsaParams<Scalar> p(feature_dim, sim_dim, num_classes);
  p.for_each_transform([&](std::string_view, AffineTransform<Scalar>& t) {
    const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(t.in_dim()));
    std::uniform_real_distribution<Scalar> u(-bound, bound);
    for (Eigen::Index i = 0; i < t.weight.size(); ++i) t.weight.data()[i] = u(rng);
  });
  return p;
}

// Everything backward needs. Produced by network_forward, consumed exactly
// once by network_backward.
template <typename Scalar>
struct ForwardCache {
  bool aggregate = true;
  bool residual = false;
  Eigen::Index n_ref = 0;
  std::uint64_t params_fingerprint = 0;
  bool live = false;

  Matrix<Scalar> input;         // pool x d (reference rows first)
  Matrix<Scalar> z1, h1;        // fc1 pre/post activation
  Matrix<Scalar> q1, k1, a1;    // block 1 phi/psi outputs and softmax weights
  Matrix<Scalar> g1;            // block 1 aggregated features
  Matrix<Scalar> z2, h2;        // fc2 pre/post activation
  Matrix<Scalar> q2, k2, a2;    // block 2 (reference rows only for q2, a2)
  Matrix<Scalar> g2;            // block 2 aggregated reference features
  Matrix<Scalar> s1, s2;        // pre-softmax similarities
};

template <typename Scalar>
struct ForwardResult {
  Matrix<Scalar> scores;  // n_ref x (num_classes + 1)
  ForwardCache<Scalar> cache;
};

// Runs the network for the first n_ref rows of `pool`. The pool holds every
// proposal of every frame in the aggregation set, reference frame first.
// With use_selsa == false both SELSA blocks are bypassed and only the
// reference rows are used.
template <typename Scalar>
ForwardResult<Scalar> network_forward(const Matrix<Scalar>& pool, Eigen::Index n_ref, const SelsaParams<Scalar>& params,
                                      bool use_selsa = true) {
  params.validate();
  if (pool.rows() == 0) throw ConfigError("network_forward: empty aggregation pool");
  if (n_ref < 1 || n_ref > pool.rows()) throw ConfigError("network_forward: reference rows out of range");
  if (pool.cols() != params.feature_dim())
    throw ConfigError("network_forward: feature dim " + std::to_string(pool.cols()) + " != parameter dim " +
                      std::to_string(params.feature_dim()));

  ForwardResult<Scalar> out;
  auto& c = out.cache;
  c.aggregate = use_selsa;
  c.residual = params.residual;
  c.n_ref = n_ref;
  c.params_fingerprint = params.fingerprint();
  c.live = true;

  if (!use_selsa) {
    c.input = pool.topRows(n_ref);
    c.z1 = params.fc1(c.input);
    c.h1 = relu(c.z1);
    c.z2 = params.fc2(c.h1);
    c.h2 = relu(c.z2);
    out.scores = params.classifier(c.h2);
    return out;
  }

  c.input = pool;
  c.z1 = params.fc1(c.input);
  c.h1 = relu(c.z1);
  c.q1 = params.phi1(c.h1);
  c.k1 = params.psi1(c.h1);
  c.s1 = c.q1 * c.k1.transpose();
  c.a1 = softmax_rows(c.s1);
  c.g1 = aggregate(c.a1, c.h1);
  if (c.residual) c.g1 += c.h1;

  c.z2 = params.fc2(c.g1);
  c.h2 = relu(c.z2);
  c.q2 = params.phi2(c.h2.topRows(n_ref));
  c.k2 = params.psi2(c.h2);
  c.s2 = c.q2 * c.k2.transpose();
  c.a2 = softmax_rows(c.s2);
  c.g2 = aggregate(c.a2, c.h2);
  if (c.residual) c.g2 += c.h2.topRows(n_ref);

  out.scores = params.classifier(c.g2);
  return out;
}

namespace detail {

// Backprop through W = softmax_rows(S).
template <typename Scalar>
Matrix<Scalar> softmax_rows_backward(const Matrix<Scalar>& w, const Matrix<Scalar>& grad_w) {
  const Vector<Scalar> inner = (grad_w.cwiseProduct(w)).rowwise().sum();
  return w.cwiseProduct(grad_w.colwise() - inner);
}

// Backprop through y = x W^T + b; accumulates parameter grads and returns dx.
template <typename Scalar>
Matrix<Scalar> affine_backward(const AffineTransform<Scalar>& t, const Matrix<Scalar>& x, const Matrix<Scalar>& grad_y,
                               AffineTransform<Scalar>& grad_t) {
  grad_t.weight += grad_y.transpose() * x;
  grad_t.bias += grad_y.colwise().sum().transpose();
  return grad_y * t.weight;
}

template <typename Scalar>
Matrix<Scalar> relu_backward(const Matrix<Scalar>& pre, const Matrix<Scalar>& grad) {
  return (pre.array() > Scalar(0)).select(grad, Matrix<Scalar>::Zero(grad.rows(), grad.cols()));
}

}  // namespace detail

// Exact gradient of a scalar loss with d(loss)/d(scores) = grad_scores.
// The cache is invalidated; passing it twice, or with parameters that
// changed since the forward pass, throws ConfigError.
template <typename Scalar>
SelsaParams<Scalar> network_backward(ForwardCache<Scalar>&& cache, const Matrix<Scalar>& grad_scores,
                                     const SelsaParams<Scalar>& params) {
  if (!cache.live) throw ConfigError("network_backward: forward cache already consumed");
  cache.live = false;
  if (cache.params_fingerprint != params.fingerprint())
    throw ConfigError("network_backward: parameters changed since the forward pass");
  if (grad_scores.rows() != cache.n_ref || grad_scores.cols() != params.classifier.out_dim())
    throw ConfigError("network_backward: grad_scores shape mismatch");

  SelsaParams<Scalar> g = params.zeros_like();
  const auto& c = cache;

  if (!c.aggregate) {
    Matrix<Scalar> dh2 = detail::affine_backward(params.classifier, c.h2, grad_scores, g.classifier);
    Matrix<Scalar> dh1 = detail::affine_backward(params.fc2, c.h1, detail::relu_backward(c.z2, dh2), g.fc2);
    detail::affine_backward(params.fc1, c.input, detail::relu_backward(c.z1, dh1), g.fc1);
    return g;
  }

  const Eigen::Index n = c.n_ref;

  // Block 2 and classifier.
  Matrix<Scalar> dg2 = detail::affine_backward(params.classifier, c.g2, grad_scores, g.classifier);
  Matrix<Scalar> dh2 = c.a2.transpose() * dg2;
  if (c.residual) dh2.topRows(n) += dg2;
  Matrix<Scalar> ds2 = detail::softmax_rows_backward(c.a2, Matrix<Scalar>(dg2 * c.h2.transpose()));
  Matrix<Scalar> dq2 = ds2 * c.k2;
  Matrix<Scalar> dk2 = ds2.transpose() * c.q2;
  dh2.topRows(n) += detail::affine_backward(params.phi2, Matrix<Scalar>(c.h2.topRows(n)), dq2, g.phi2);
  dh2 += detail::affine_backward(params.psi2, c.h2, dk2, g.psi2);
  Matrix<Scalar> dg1 = detail::affine_backward(params.fc2, c.g1, detail::relu_backward(c.z2, dh2), g.fc2);

  // Block 1 over the whole pool.
  Matrix<Scalar> dh1 = c.a1.transpose() * dg1;
  if (c.residual) dh1 += dg1;
  Matrix<Scalar> ds1 = detail::softmax_rows_backward(c.a1, Matrix<Scalar>(dg1 * c.h1.transpose()));
  Matrix<Scalar> dq1 = ds1 * c.k1;
  Matrix<Scalar> dk1 = ds1.transpose() * c.q1;
  dh1 += detail::affine_backward(params.phi1, c.h1, dq1, g.phi1);
  dh1 += detail::affine_backward(params.psi1, c.h1, dk1, g.psi1);
  detail::affine_backward(params.fc1, c.input, detail::relu_backward(c.z1, dh1), g.fc1);
  return g;
}

}  // namespace selsa
