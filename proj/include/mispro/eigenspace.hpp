#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>

#include <Eigen/Dense>

#include "mispro/features.hpp"

namespace mispro::pca {

/// Mean plus column-orthonormal basis of the leading principal directions.
/// Eigenvalues are those of A A^T (A = mean-shifted training columns), descending.
struct Eigenspace {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;  // D x M'
  Eigen::VectorXd eigenvalues;
  double variance_fraction = 0.8;

  std::size_t dimension() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t rank() const { return static_cast<std::size_t>(basis.cols()); }
};

/// Coordinates of a mean-shifted vector in the basis (length M').
using Projection = Eigen::VectorXd;

/// Eigenvalues below this fraction of the largest are dropped before the variance cut.
inline constexpr double kRelativeEigenvalueFloor = 1e-12;

/// Snapshot PCA over the columns of `data` (D x M): eigenvectors of the M x M Gram matrix
/// mapped back to D-space. Keeps the smallest M' whose eigenvalue sum reaches
/// `variance_fraction` of the total. Each basis column is signed so its largest-magnitude
/// entry is positive.
Eigenspace train_eigenspace(const Eigen::MatrixXd& data, double variance_fraction);
Eigenspace train_eigenspace(std::span<const features::FeatureVector> vectors, double variance_fraction);

Projection project(const Eigenspace& es, std::span<const double> v);

/// Distance from eigenspace: || (v - mean) - U U^T (v - mean) ||.
double dfes(const Eigenspace& es, std::span<const double> v);

struct WithinDistance {
  double distance = 0.0;
  std::size_t index = 0;
};

/// Distance within eigenspace: nearest centroid to `omega`, ties to the lowest index.
WithinDistance dies(const Eigenspace& es, const Projection& omega, std::span<const Projection> centroids);

inline std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// Binary form: "MSPE", version, JSON descriptor (D, M', variance fraction, order), then
/// mean, basis (column-major) and eigenvalues as little-endian doubles.
void write_eigenspace(std::ostream& out, const Eigenspace& es);
Eigenspace read_eigenspace(std::istream& in);
void save_eigenspace(const Eigenspace& es, const std::filesystem::path& path);
Eigenspace load_eigenspace(const std::filesystem::path& path);

}  // namespace mispro::pca
