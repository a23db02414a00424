#include "selsa/ops.hpp"
#include "selsa/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace selsa;

namespace {

Matrix<double> gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

AffineTransform<double> random_affine(Eigen::Index out, Eigen::Index in, Rng& rng) {
  AffineTransform<double> t(out, in);
  t.weight = gaussian(out, in, rng);
  t.bias = gaussian(out, 1, rng).col(0);
  return t;
}

}  // namespace

TEST_CASE("similarity of orthogonal and parallel vectors under identity maps") {
  const auto id = AffineTransform<double>::identity(2);
  Matrix<double> ref(1, 2), pool(1, 2);
  ref << 1, 0;
  pool << 0, 1;
  CHECK(similarity_matrix(ref, pool, id, id)(0, 0) == 0.0);
  ref << 1, 2;
  pool << 1, 2;
  CHECK(similarity_matrix(ref, pool, id, id)(0, 0) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("zero phi gives an all-zero similarity matrix") {
  Rng rng = make_rng(1, 0);
  AffineTransform<double> phi(3, 4);
  const auto psi = random_affine(3, 4, rng);
  const auto s = similarity_matrix(gaussian(5, 4, rng), gaussian(7, 4, rng), phi, psi);
  CHECK(s.rows() == 5);
  CHECK(s.cols() == 7);
  CHECK(s.isZero(0));
}

TEST_CASE("similarity dimension mismatches are configuration errors") {
  Rng rng = make_rng(2, 0);
  const auto phi = random_affine(3, 4, rng);
  const auto psi4 = random_affine(4, 4, rng);
  CHECK_THROWS_AS(similarity_matrix(gaussian(2, 4, rng), gaussian(2, 4, rng), phi, psi4), ConfigError);
  CHECK_THROWS_AS(similarity_matrix(gaussian(2, 5, rng), gaussian(2, 4, rng), phi, phi), ConfigError);
  CHECK_THROWS_AS(similarity_matrix(Matrix<double>(0, 4), gaussian(2, 4, rng), phi, phi), ConfigError);
}

TEST_CASE("softmax reference values") {
  Matrix<double> single(1, 1);
  single << 123.4;
  CHECK(softmax_rows(single)(0, 0) == 1.0);

  const Matrix<double> uniform = softmax_rows(Matrix<double>(Matrix<double>::Zero(1, 3)));
  for (int j = 0; j < 3; ++j) CHECK(uniform(0, j) == doctest::Approx(1.0 / 3).epsilon(1e-15));

  Matrix<double> s(1, 3);
  s << 1, 2, 3;
  const auto w = softmax_rows(s);
  CHECK(std::abs(w(0, 0) - 0.09003) < 1e-5);
  CHECK(std::abs(w(0, 1) - 0.24473) < 1e-5);
  CHECK(std::abs(w(0, 2) - 0.66524) < 1e-5);
}

TEST_CASE("softmax survives huge magnitudes") {
  Matrix<double> s(2, 3);
  s << 1e308, 1e308, -1e308, -1e300, -1e300, -1e300;
  const auto w = softmax_rows(s);
  CHECK(w.allFinite());
  CHECK(w(0, 0) == doctest::Approx(0.5));
  CHECK(w(0, 2) == 0.0);
  CHECK(w(1, 1) == doctest::Approx(1.0 / 3));
}

TEST_CASE("softmax rows are stochastic and shift invariant") {
  Rng rng = make_rng(3, 0);
  std::uniform_real_distribution<double> shift(-50, 50);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = gaussian(1 + trial % 5, 1 + trial % 11, rng, 5.0);
    const auto w = softmax_rows(s);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      CHECK(std::abs(w.row(i).sum() - 1.0) < 1e-12);
      CHECK(w.row(i).minCoeff() >= 0.0);
    }
    Matrix<double> shifted = s;
    const Eigen::Index row = trial % s.rows();
    shifted.row(row).array() += shift(rng);
    CHECK((softmax_rows(shifted) - w).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("aggregate reference values") {
  Matrix<double> one(1, 3);
  one << 0.5, -2, 7;
  CHECK(aggregate(Matrix<double>(Matrix<double>::Ones(1, 1)), one) == one);

  Matrix<double> same(4, 2);
  same << 1.5, -3, 1.5, -3, 1.5, -3, 1.5, -3;
  const auto u = aggregate(Matrix<double>(Matrix<double>::Constant(1, 4, 0.25)), same);
  CHECK(u(0, 0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(u(0, 1) == doctest::Approx(-3).epsilon(1e-15));

  Matrix<double> w(1, 2), pool(2, 2);
  w << 0.25, 0.75;
  pool << 4, 0, 0, 4;
  const auto x = aggregate(w, pool);
  CHECK(x(0, 0) == 1.0);
  CHECK(x(0, 1) == 3.0);

  CHECK_THROWS_AS(aggregate(Matrix<double>(Matrix<double>::Ones(1, 3)), pool), ConfigError);
}

TEST_CASE("aggregated features stay inside the pool's norm ball") {
  Rng rng = make_rng(4, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pool = gaussian(1 + trial % 9, 1 + trial % 6, rng, 3.0);
    const auto w = softmax_rows(gaussian(1 + trial % 4, pool.rows(), rng, 4.0));
    const auto x = aggregate(w, pool);
    const double bound = pool.rowwise().norm().maxCoeff();
    for (Eigen::Index i = 0; i < x.rows(); ++i) CHECK(x.row(i).norm() <= bound + 1e-9);
  }
}

TEST_CASE("similarity-weighted aggregation is permutation equivariant") {
  Rng rng = make_rng(5, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index d = 2 + trial % 5, ds = 1 + trial % 4, nr = 1 + trial % 4, np = 2 + trial % 7;
    const auto phi = random_affine(ds, d, rng), psi = random_affine(ds, d, rng);
    const auto refs = gaussian(nr, d, rng), pool = gaussian(np, d, rng);
    const auto out = aggregate(softmax_rows(similarity_matrix(refs, pool, phi, psi)), pool);

    std::vector<int> pp(static_cast<std::size_t>(np)), rp(static_cast<std::size_t>(nr));
    std::iota(pp.begin(), pp.end(), 0);
    std::iota(rp.begin(), rp.end(), 0);
    std::shuffle(pp.begin(), pp.end(), rng);
    std::shuffle(rp.begin(), rp.end(), rng);
    Matrix<double> pool_p(np, d), refs_p(nr, d);
    for (Eigen::Index i = 0; i < np; ++i) pool_p.row(i) = pool.row(pp[static_cast<std::size_t>(i)]);
    for (Eigen::Index i = 0; i < nr; ++i) refs_p.row(i) = refs.row(rp[static_cast<std::size_t>(i)]);

    const auto out_p = aggregate(softmax_rows(similarity_matrix(refs_p, pool_p, phi, psi)), pool_p);
    for (Eigen::Index i = 0; i < nr; ++i)
      CHECK((out_p.row(i) - out.row(rp[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("relu clips negatives only") {
  Matrix<double> x(1, 4);
  x << -1, 0, 2, -0.5;
  Matrix<double> expected(1, 4);
  expected << 0, 0, 2, 0;
  CHECK(relu(x) == expected);
}
