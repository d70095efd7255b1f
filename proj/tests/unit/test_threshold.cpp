#include <random>

#include "doctest.h"
#include "mispro/error.hpp"
#include "mispro/threshold.hpp"
#include "oracles.hpp"

using namespace mispro;
using namespace mispro::threshold;

namespace {

std::vector<double> sample(double mu, double sd, std::size_t n, std::mt19937_64& g) {
  std::normal_distribution<double> d(mu, sd);
  std::vector<double> xs(n);
  for (auto& x : xs) x = d(g);
  return xs;
}

// Error of the rule "accept iff x < t" by quadrature of the fitted densities.
double integrated_error(const ThresholdModel& m, double t) {
  const auto& a = m.accept;
  const auto& r = m.reject;
  const double hi = std::max(t, a.mean + 12.0 * a.stddev);
  const double lo = std::min(t, r.mean - 12.0 * r.stddev);
  const double h1 = a.stddev / 200.0;
  const double h2 = r.stddev / 200.0;
  const double miss = hi > t ? oracle::integrate([&](double x) { return oracle::normal_pdf(x, a.mean, a.stddev); }, t, hi, h1) : 0.0;
  const double false_accept = t > lo ? oracle::integrate([&](double x) { return oracle::normal_pdf(x, r.mean, r.stddev); }, lo, t, h2) : 0.0;
  return m.prior_accept * miss + m.prior_reject * false_accept;
}

}  // namespace

TEST_CASE("gaussian fit uses the 1/n variance") {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto g = fit_gaussian(xs);
  CHECK(g.mean == doctest::Approx(2.5));
  CHECK(g.stddev == doctest::Approx(std::sqrt(1.25)));
  CHECK_THROWS_AS(fit_gaussian(std::vector<double>{1.0}), Error);
  CHECK_THROWS_AS(fit_gaussian(std::vector<double>{2.0, 2.0, 2.0}), Error);
}

TEST_CASE("equal-variance symmetric classes split at the midpoint") {
  const std::vector<double> a{1, 3};
  const std::vector<double> b{5, 7};
  const auto m = fit_threshold(a, b);
  CHECK(m.status == ThresholdStatus::Separable);
  CHECK(m.threshold == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::abs(m.discriminant(m.threshold)) < 1e-12);
}

TEST_CASE("unequal priors shift T toward the less probable class") {
  const std::vector<double> a{1, 3};
  const std::vector<double> b{5, 7};
  const auto m = fit_threshold(a, b, {0.9, 0.1});
  CHECK(m.threshold > 4.0);
  CHECK(m.threshold < 6.0);
  CHECK(std::abs(m.discriminant(m.threshold)) < 1e-12);
}

TEST_CASE("closed-form T is optimal and its error matches quadrature") {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int separable = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double mu1 = 2.0 * u(g);
    const double mu2 = mu1 + 0.5 + 4.0 * u(g);
    const auto a = sample(mu1, 0.2 + u(g), 30, g);
    const auto b = sample(mu2, 0.2 + u(g), 40, g);
    const double p1 = 0.1 + 0.8 * u(g);
    const auto m = fit_threshold(a, b, {p1, 1.0 - p1});
    if (m.status == ThresholdStatus::Separable) ++separable;
    const double lo = std::min(m.accept.mean - 8 * m.accept.stddev, m.reject.mean - 8 * m.reject.stddev);
    const double hi = std::max(m.accept.mean + 8 * m.accept.stddev, m.reject.mean + 8 * m.reject.stddev);
    double best = 1.0;
    for (int i = 0; i <= 5000; ++i) best = std::min(best, m.error_at(lo + (hi - lo) * i / 5000.0));
    CHECK(best >= m.theoretical_error - 1e-9);
    CHECK(std::abs(integrated_error(m, m.threshold) - m.theoretical_error) < 1e-6);
  }
  CHECK(separable >= 80);
}

TEST_CASE("replicating class 1 equals the replication priors") {
  std::mt19937_64 g(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d1 = sample(1.0, 0.3, 12, g);
    const auto d2 = sample(2.5, 0.5, 45, g);
    const auto repeated = balance_by_repetition(d1, 9);
    REQUIRE(repeated.size() == 108);
    const auto via_copies = fit_threshold(repeated, d2);
    const auto via_priors = fit_threshold(d1, d2, replication_priors(d1.size(), d2.size(), 9));
    CHECK(std::abs(via_copies.threshold - via_priors.threshold) < 1e-9);
    CHECK(via_copies.prior_accept == doctest::Approx(via_priors.prior_accept).epsilon(1e-15));
  }
}

TEST_CASE("fallbacks") {
  SUBCASE("inverted means accept everything when class 1 is at least as probable") {
    const std::vector<double> a{4, 6};
    const std::vector<double> b{1, 3};
    const auto m = fit_threshold(a, b);
    CHECK(m.status == ThresholdStatus::InvertedMeans);
    CHECK(classify(m, 12.0) == Decision::Accept);
    CHECK(classify(m, -8.0) == Decision::Accept);
    const auto r = fit_threshold(a, b, {0.2, 0.8});
    CHECK(classify(r, -6.0) == Decision::Reject);
  }
  SUBCASE("no root between the means") {
    // Class 1 is so improbable that class 2 dominates everywhere between the means.
    const std::vector<double> a{-1, 1};
    const std::vector<double> b{0, 2};
    const auto m = fit_threshold(a, b, {0.01, 0.99});
    CHECK(m.status == ThresholdStatus::NonSeparable);
    const double lo = -8.0;
    const double hi = 9.0;
    for (int i = 0; i <= 1000; ++i) CHECK(m.error_at(lo + (hi - lo) * i / 1000.0) >= m.theoretical_error - 1e-9);
  }
}

TEST_CASE("classify and validation") {
  const std::vector<double> a{1, 3};
  const std::vector<double> b{5, 7};
  const auto m = fit_threshold(a, b);
  CHECK(classify(m, 3.999) == Decision::Accept);
  CHECK(classify(m, 4.0) == Decision::Reject);
  CHECK_THROWS_AS(classify(m, std::nan("")), Error);
  CHECK_THROWS_AS(fit_threshold(a, b, {0.0, 1.0}), Error);
  CHECK_THROWS_AS(fit_threshold(a, b, {0.6, 0.6}), Error);
  CHECK_THROWS_AS(balance_by_repetition(a, 0), Error);
  CHECK(threshold_status_from_string(to_string(ThresholdStatus::NonSeparable)) == ThresholdStatus::NonSeparable);
  CHECK_THROWS_AS(threshold_status_from_string("bogus"), Error);
}
