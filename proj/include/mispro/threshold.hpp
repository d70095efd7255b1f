#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace mispro::threshold {

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;

  double pdf(double x) const;
  /// P(X <= x)
  double cdf(double x) const;
  /// P(X > x)
  double sf(double x) const;
};

/// Mean and maximum-likelihood (1/n) standard deviation.
Gaussian fit_gaussian(std::span<const double> xs);

enum class ThresholdStatus {
  Separable,     ///< T is the discriminant root between the class means
  NonSeparable,  ///< the best single threshold is not a root between the means (another root or a constant rule)
  InvertedMeans, ///< class 1 mean exceeds class 2 mean; T accepts all (or rejects all if P(w2) > P(w1))
};

std::string_view to_string(ThresholdStatus s);
ThresholdStatus threshold_status_from_string(std::string_view s);

/// Class 1 is the accept side (small distances), class 2 the reject side.
struct ThresholdModel {
  Gaussian accept;
  Gaussian reject;
  double prior_accept = 0.5;
  double prior_reject = 0.5;
  double threshold = 0.0;
  double theoretical_error = 0.0;
  ThresholdStatus status = ThresholdStatus::Separable;

  /// g(x) = p(x|w1)P(w1) - p(x|w2)P(w2)
  double discriminant(double x) const;
  /// P(error) when deciding class 1 iff x < t.
  double error_at(double t) const;
};

struct Priors {
  double accept = 0.5;
  double reject = 0.5;
};

/// Priors proportional to class sizes.
Priors empirical_priors(std::size_t n_accept, std::size_t n_reject);

/// Priors equivalent to repeating every class-1 value `factor` times.
Priors replication_priors(std::size_t n_accept, std::size_t n_reject, int factor);

/// Fits one Gaussian per class and places T at the Bayes decision boundary g(T) = 0
/// between the means, or wherever the fitted error of a single threshold is lowest when that
/// root is not the best rule. Priors default to the empirical class frequencies.
ThresholdModel fit_threshold(std::span<const double> accept_side, std::span<const double> reject_side);
ThresholdModel fit_threshold(std::span<const double> accept_side, std::span<const double> reject_side, Priors priors);

/// d1 concatenated with itself `factor` times.
std::vector<double> balance_by_repetition(std::span<const double> d1, int factor);

enum class Decision { Accept, Reject };

/// Accept iff d < T.
Decision classify(const ThresholdModel& model, double d);

}  // namespace mispro::threshold
