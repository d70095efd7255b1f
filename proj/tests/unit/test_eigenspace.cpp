#include <random>
#include <sstream>

#include "doctest.h"
#include "mispro/eigenspace.hpp"
#include "mispro/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mispro;
using namespace mispro::pca;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index d, Eigen::Index m, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd x(d, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < d; ++i) x(i, j) = n(g) * (1.0 + static_cast<double>(i % 5));
  return x;
}

std::vector<double> col(const Eigen::MatrixXd& x, Eigen::Index j) {
  return {x.col(j).data(), x.col(j).data() + x.rows()};
}

std::vector<std::vector<double>> columns(const Eigen::MatrixXd& x) {
  std::vector<std::vector<double>> out;
  for (Eigen::Index j = 0; j < x.cols(); ++j) out.push_back(col(x, j));
  return out;
}

}  // namespace

TEST_CASE("snapshot route matches brute-force covariance eigendecomposition") {
  std::mt19937_64 g(42);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = static_cast<Eigen::Index>(2 + g() % 9);
    const auto d = static_cast<Eigen::Index>(1 + g() % 40);
    const auto x = random_matrix(d, m, 1000 + static_cast<std::uint64_t>(trial));
    const auto es = train_eigenspace(x, 1.0);
    const auto ref = oracle::jacobi(oracle::scatter(columns(x)));
    REQUIRE(es.rank() <= static_cast<std::size_t>(std::min(m - 1, d)));
    for (std::size_t k = 0; k < es.rank(); ++k)
      CHECK(std::abs(es.eigenvalues(static_cast<Eigen::Index>(k)) - ref.values[k]) <= 1e-8 * ref.values[k]);
    std::vector<std::vector<double>> ref_basis(ref.vectors.begin(), ref.vectors.begin() + static_cast<std::ptrdiff_t>(es.rank()));
    CHECK(std::asin(std::min(1.0, oracle::max_principal_angle_sin(columns(es.basis), ref_basis))) < 1e-6);
  }
}

TEST_CASE("basis is orthonormal, signed and eigenvalues descend") {
  const auto x = random_matrix(30, 9, 7);
  const auto es = train_eigenspace(x, 0.8);
  const Eigen::MatrixXd gram = es.basis.transpose() * es.basis;
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-8);
  for (Eigen::Index j = 0; j < es.basis.cols(); ++j) {
    Eigen::Index at = 0;
    es.basis.col(j).cwiseAbs().maxCoeff(&at);
    CHECK(es.basis(at, j) > 0.0);
    if (j > 0) CHECK(es.eigenvalues(j) <= es.eigenvalues(j - 1));
  }
}

TEST_CASE("variance rule picks the smallest count reaching the fraction") {
  const auto x = random_matrix(25, 10, 8);
  const auto ref = oracle::jacobi(oracle::scatter(columns(x)));
  double total = 0.0;
  for (double v : ref.values) total += std::max(0.0, v);
  for (double f : {0.3, 0.5, 0.8, 0.95, 1.0}) {
    std::size_t expect = 0;
    double acc = 0.0;
    while (acc < f * total * (1 - 1e-12)) acc += ref.values[expect++];
    CHECK(train_eigenspace(x, f).rank() == expect);
  }
}

TEST_CASE("two distinct vectors span one axis along their difference") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 3, 2, 2, 0, 4;
  const auto es = train_eigenspace(x, 0.8);
  REQUIRE(es.rank() == 1);
  const Eigen::Vector3d diff = (x.col(1) - x.col(0)).normalized();
  CHECK(std::abs(std::abs(es.basis.col(0).dot(diff)) - 1.0) < 1e-12);
}

TEST_CASE("full-variance eigenspace reconstructs its training vectors") {
  const auto x = random_matrix(50, 10, 9);
  const auto es = train_eigenspace(x, 1.0);
  for (Eigen::Index j = 0; j < x.cols(); ++j) CHECK(dfes(es, col(x, j)) < 1e-6);
}

TEST_CASE("project: mean, basis vectors and a naive oracle") {
  const auto x = random_matrix(20, 8, 10);
  const auto es = train_eigenspace(x, 0.9);
  const Eigen::VectorXd zero = project(es, as_span(es.mean));
  CHECK(zero.cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::VectorXd v = es.mean + es.basis.col(0);
  const Eigen::VectorXd e1 = project(es, as_span(v));
  CHECK(e1(0) == doctest::Approx(1.0));
  for (Eigen::Index k = 1; k < e1.size(); ++k) CHECK(std::abs(e1(k)) < 1e-12);

  const auto r = col(random_matrix(20, 1, 11), 0);
  const auto omega = project(es, r);
  for (std::size_t k = 0; k < es.rank(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < 20; ++i) s += es.basis(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * (r[i] - es.mean(static_cast<Eigen::Index>(i)));
    CHECK(std::abs(omega(static_cast<Eigen::Index>(k)) - s) < 1e-10);
  }
}

TEST_CASE("dfes: orthogonal residual and naive oracle") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 3);
  x(0, 1) = 1.0;
  x(1, 2) = 1.0;
  const auto es = train_eigenspace(x, 1.0);
  Eigen::VectorXd v = es.mean;
  v(3) += 3.0;
  CHECK(std::abs(dfes(es, as_span(v)) - 3.0) < 1e-9);

  const auto y = random_matrix(40, 10, 12);
  const auto es2 = train_eigenspace(y, 0.8);
  const auto probe = col(random_matrix(40, 1, 13), 0);
  CHECK(std::abs(dfes(es2, probe) - oracle::residual_norm(probe, col(es2.mean, 0), columns(es2.basis))) < 1e-10);
}

TEST_CASE("dies: examples and exhaustive scan") {
  Eigen::MatrixXd x(2, 3);
  x << 0, 1, 0, 0, 0, 1;
  const auto es = train_eigenspace(x, 1.0);
  REQUIRE(es.rank() == 2);
  std::vector<Projection> cs(3, Eigen::VectorXd::Zero(2));
  cs[1] << 1, 1;
  cs[2] << 2, 5;
  const auto exact = dies(es, cs[2], cs);
  CHECK(exact.distance == 0.0);
  CHECK(exact.index == 2);

  std::vector<Projection> two(2, Eigen::VectorXd::Zero(2));
  two[1] << 3, 4;
  Eigen::VectorXd t(2);
  t << 0, 0.1;
  const auto near = dies(es, t, two);
  CHECK(near.distance == doctest::Approx(0.1));
  CHECK(near.index == 0);

  // Equidistant centroids resolve to the lowest index.
  std::vector<Projection> tie(2, Eigen::VectorXd::Zero(2));
  tie[0] << 1, 0;
  tie[1] << -1, 0;
  CHECK(dies(es, Eigen::VectorXd::Zero(2), tie).index == 0);

  std::mt19937_64 g(5);
  std::normal_distribution<double> n;
  std::vector<Projection> many;
  std::vector<std::vector<double>> plain;
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd c(2);
    c << n(g), n(g);
    many.push_back(c);
    plain.push_back({c(0), c(1)});
  }
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd q(2);
    q << n(g), n(g);
    const auto got = dies(es, q, many);
    const auto [d, idx] = oracle::nearest({q(0), q(1)}, plain);
    CHECK(got.index == idx);
    CHECK(got.distance == doctest::Approx(d).epsilon(1e-12));
  }
  CHECK_THROWS_AS(dies(es, t, std::vector<Projection>{}), Error);
}

TEST_CASE("property: Pythagorean identity") {
  const auto x = random_matrix(35, 10, 14);
  const auto es = train_eigenspace(x, 0.8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = col(random_matrix(35, 1, 500 + static_cast<std::uint64_t>(trial)), 0);
    const Eigen::VectorXd phi = Eigen::Map<const Eigen::VectorXd>(v.data(), 35) - es.mean;
    const double d = dfes(es, v);
    const double lhs = phi.squaredNorm();
    const double rhs = project(es, v).squaredNorm() + d * d;
    CHECK(std::abs(lhs - rhs) <= 5e-6 * lhs);
  }
}

TEST_CASE("property: larger variance fraction never shrinks M' or grows training dfes") {
  const auto x = random_matrix(30, 10, 15);
  std::size_t prev_rank = 0;
  std::vector<double> prev(10, std::numeric_limits<double>::infinity());
  for (double f = 0.1; f <= 1.0001; f += 0.1) {
    const auto es = train_eigenspace(x, std::min(f, 1.0));
    CHECK(es.rank() >= prev_rank);
    prev_rank = es.rank();
    for (Eigen::Index j = 0; j < 10; ++j) {
      const double d = dfes(es, col(x, j));
      CHECK(d <= prev[static_cast<std::size_t>(j)] + 1e-9);
      prev[static_cast<std::size_t>(j)] = d;
    }
  }
}

TEST_CASE("property: dfes ignores components inside the subspace") {
  const auto x = random_matrix(30, 8, 16);
  const auto es = train_eigenspace(x, 0.7);
  const auto v = col(random_matrix(30, 1, 17), 0);
  Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(es.rank()), -2.0, 3.0);
  const Eigen::VectorXd moved = Eigen::Map<const Eigen::VectorXd>(v.data(), 30) + es.basis * c;
  CHECK(std::abs(dfes(es, as_span(moved)) - dfes(es, v)) < 1e-8);
}

TEST_CASE("training errors") {
  CHECK_THROWS_AS(train_eigenspace(random_matrix(5, 1, 1), 0.8), Error);
  Eigen::MatrixXd same(4, 3);
  same.colwise() = Eigen::Vector4d(1, 2, 3, 4);
  try {
    train_eigenspace(same, 0.8);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
    CHECK(std::string(e.what()).find("zero total variance") != std::string::npos);
  }
  std::vector<features::FeatureVector> vs(2);
  vs[0].values = {1, 2, 3};
  vs[1].values = {1, 2};
  CHECK_THROWS_WITH_AS(train_eigenspace(vs, 0.8), doctest::Contains("length mismatch"), Error);
  CHECK_THROWS_AS(train_eigenspace(random_matrix(5, 3, 1), 0.0), Error);
  const auto es = train_eigenspace(random_matrix(5, 3, 1), 1.0);
  CHECK_THROWS_AS(dfes(es, std::vector<double>(4, 0.0)), Error);
  CHECK_THROWS_AS(project(es, std::vector<double>(6, 0.0)), Error);
}

TEST_CASE("serialization round trip and corrupt input") {
  const auto es = train_eigenspace(random_matrix(12, 6, 18), 0.8);
  std::stringstream buf;
  write_eigenspace(buf, es);
  const auto bytes = buf.str();
  std::istringstream in(bytes);
  const auto back = read_eigenspace(in);
  CHECK(back.mean == es.mean);
  CHECK(back.basis == es.basis);
  CHECK(back.eigenvalues == es.eigenvalues);
  CHECK(back.variance_fraction == es.variance_fraction);

  std::istringstream cut(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_WITH_AS(read_eigenspace(cut), doctest::Contains("corrupt"), Error);
  auto newer = bytes;
  newer[4] = 9;
  std::istringstream nv(newer);
  CHECK_THROWS_WITH_AS(read_eigenspace(nv), doctest::Contains("version"), Error);

  const auto dir = support::temp_dir("eigenspace_io");
  save_eigenspace(es, dir / "e.bin");
  CHECK(load_eigenspace(dir / "e.bin").basis == es.basis);
}
