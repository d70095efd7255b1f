#include "mispro/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "mispro/error.hpp"

namespace mispro::threshold {

double Gaussian::pdf(double x) const {
  const double z = (x - mean) / stddev;
  return std::exp(-0.5 * z * z) / (stddev * std::sqrt(2.0 * std::numbers::pi));
}

double Gaussian::cdf(double x) const { return 0.5 * std::erfc(-(x - mean) / (stddev * std::numbers::sqrt2)); }

double Gaussian::sf(double x) const { return 0.5 * std::erfc((x - mean) / (stddev * std::numbers::sqrt2)); }

Gaussian fit_gaussian(std::span<const double> xs) {
  if (xs.size() < 2) throw_numerical("need at least 2 distances per class");
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) {
    if (!std::isfinite(x)) throw_numerical("non-finite distance");
    ss += (x - mean) * (x - mean);
  }
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) throw_numerical("degenerate variance: all distances in a class are equal");
  return {mean, sd};
}

std::string_view to_string(ThresholdStatus s) {
  switch (s) {
    case ThresholdStatus::Separable: return "separable";
    case ThresholdStatus::NonSeparable: return "non-separable";
    case ThresholdStatus::InvertedMeans: return "inverted-means";
  }
  return "separable";
}

ThresholdStatus threshold_status_from_string(std::string_view s) {
  if (s == "separable") return ThresholdStatus::Separable;
  if (s == "non-separable") return ThresholdStatus::NonSeparable;
  if (s == "inverted-means") return ThresholdStatus::InvertedMeans;
  throw_data("unknown threshold status '" + std::string(s) + "'");
}

double ThresholdModel::discriminant(double x) const {
  return accept.pdf(x) * prior_accept - reject.pdf(x) * prior_reject;
}

double ThresholdModel::error_at(double t) const {
  return prior_accept * accept.sf(t) + prior_reject * reject.cdf(t);
}

Priors empirical_priors(std::size_t n_accept, std::size_t n_reject) {
  const double total = static_cast<double>(n_accept + n_reject);
  return {static_cast<double>(n_accept) / total, static_cast<double>(n_reject) / total};
}

Priors replication_priors(std::size_t n_accept, std::size_t n_reject, int factor) {
  if (factor < 1) throw_usage("replication factor must be >= 1");
  return empirical_priors(n_accept * static_cast<std::size_t>(factor), n_reject);
}

namespace {

// Roots of log(p1 P1) - log(p2 P2) = 0, a quadratic a x^2 + b x + c.
std::vector<double> discriminant_roots(const Gaussian& g1, const Gaussian& g2, double p1, double p2) {
  const double v1 = g1.stddev * g1.stddev;
  const double v2 = g2.stddev * g2.stddev;
  const double a = 0.5 / v2 - 0.5 / v1;
  const double b = g1.mean / v1 - g2.mean / v2;
  const double c = 0.5 * g2.mean * g2.mean / v2 - 0.5 * g1.mean * g1.mean / v1 + std::log(p1 / p2) +
                   std::log(g2.stddev / g1.stddev);
  if (a == 0.0) {
    if (b == 0.0) return {};
    return {-c / b};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {};
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + std::copysign(sq, b));
  std::vector<double> roots;
  if (q != 0.0) roots.push_back(c / q);
  roots.push_back(q / a);
  std::sort(roots.begin(), roots.end());
  return roots;
}

// Bounds standing in for "reject everything" and "accept everything": mu -/+ 8 sigma of both classes.
double grid_low(const ThresholdModel& m) {
  return std::min(m.accept.mean - 8.0 * m.accept.stddev, m.reject.mean - 8.0 * m.reject.stddev);
}

double grid_high(const ThresholdModel& m) {
  return std::max(m.accept.mean + 8.0 * m.accept.stddev, m.reject.mean + 8.0 * m.reject.stddev);
}

}  // namespace

ThresholdModel fit_threshold(std::span<const double> accept_side, std::span<const double> reject_side) {
  return fit_threshold(accept_side, reject_side, empirical_priors(accept_side.size(), reject_side.size()));
}

ThresholdModel fit_threshold(std::span<const double> accept_side, std::span<const double> reject_side, Priors priors) {
  if (!(priors.accept > 0.0 && priors.accept < 1.0 && priors.reject > 0.0 && priors.reject < 1.0) ||
      std::abs(priors.accept + priors.reject - 1.0) > 1e-12)
    throw_usage("priors must lie in (0, 1) and sum to 1");
  ThresholdModel m;
  m.accept = fit_gaussian(accept_side);
  m.reject = fit_gaussian(reject_side);
  m.prior_accept = priors.accept;
  m.prior_reject = priors.reject;

  if (m.accept.mean >= m.reject.mean) {
    // The distance orders the classes the wrong way round, so the best rule is a constant one:
    // accept everything unless class 2 is more probable.
    m.status = ThresholdStatus::InvertedMeans;
    m.threshold = priors.accept >= priors.reject ? grid_high(m) : grid_low(m);
  } else {
    // The error of "accept iff x < t" is stationary only where g(t) = 0, so its minimum over t
    // lies at a discriminant root or at one of the two constant rules. Ties go to the largest t.
    const auto roots = discriminant_roots(m.accept, m.reject, priors.accept, priors.reject);
    std::vector<double> candidates{grid_low(m)};
    for (double r : roots)
      if (r > grid_low(m) && r < grid_high(m)) candidates.push_back(r);
    candidates.push_back(grid_high(m));
    double best_err = std::numeric_limits<double>::infinity();
    for (double t : candidates) {
      const double err = m.error_at(t);
      if (err <= best_err + 1e-12) best_err = std::min(err, best_err), m.threshold = t;
    }
    const bool between = m.threshold > m.accept.mean && m.threshold < m.reject.mean &&
                         std::find(roots.begin(), roots.end(), m.threshold) != roots.end();
    m.status = between ? ThresholdStatus::Separable : ThresholdStatus::NonSeparable;
  }
  m.theoretical_error = m.error_at(m.threshold);
  return m;
}

std::vector<double> balance_by_repetition(std::span<const double> d1, int factor) {
  if (factor < 1) throw_usage("replication factor must be >= 1");
  std::vector<double> out;
  out.reserve(d1.size() * static_cast<std::size_t>(factor));
  for (int i = 0; i < factor; ++i) out.insert(out.end(), d1.begin(), d1.end());
  return out;
}

Decision classify(const ThresholdModel& model, double d) {
  if (!std::isfinite(d)) throw_numerical("classify: non-finite distance");
  return d < model.threshold ? Decision::Accept : Decision::Reject;
}

}  // namespace mispro::threshold
