#include "mispro/eigenspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "binio.hpp"
#include "json.hpp"
#include "mispro/error.hpp"

namespace mispro::pca {

namespace {

constexpr std::uint32_t kEigenspaceVersion = 1;

void check_length(const Eigenspace& es, std::size_t n) {
  if (n != es.dimension())
    throw_data("vector length " + std::to_string(n) + " does not match eigenspace dimension " +
               std::to_string(es.dimension()));
}

// Two passes of modified Gram-Schmidt.
void orthonormalize(Eigen::MatrixXd& u) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) u.col(j) -= u.col(i).dot(u.col(j)) * u.col(i);
      const double norm = u.col(j).norm();
      if (!(norm > 0.0)) throw_numerical("eigenspace basis collapsed during orthonormalization");
      u.col(j) /= norm;
    }
  }
}

}  // namespace

Eigenspace train_eigenspace(const Eigen::MatrixXd& data, double variance_fraction) {
  if (!(variance_fraction > 0.0 && variance_fraction <= 1.0))
    throw_usage("variance fraction must be in (0, 1]");
  if (data.cols() < 2) throw_data("eigenspace training needs at least 2 vectors");
  if (data.rows() < 1) throw_data("eigenspace training needs non-empty vectors");
  if (!data.allFinite()) throw_data("eigenspace training data contains non-finite values");

  Eigenspace es;
  es.variance_fraction = variance_fraction;
  es.mean = data.rowwise().mean();
  const Eigen::MatrixXd a = data.colwise() - es.mean;

  const Eigen::MatrixXd gram = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw_numerical("Gram matrix eigendecomposition failed");
  const Eigen::Index m = gram.rows();
  const Eigen::VectorXd ascending = solver.eigenvalues();
  const double largest = ascending(m - 1);
  if (!(largest > 0.0)) throw_numerical("zero total variance: all training vectors are identical");

  std::vector<Eigen::Index> kept;
  double total = 0.0;
  for (Eigen::Index i = m - 1; i >= 0; --i) {
    const double lambda = std::max(0.0, ascending(i));
    if (lambda <= kRelativeEigenvalueFloor * largest) break;
    kept.push_back(i);
    total += lambda;
  }
  std::size_t rank = 0;
  double captured = 0.0;
  while (rank < kept.size()) {
    captured += ascending(kept[rank]);
    ++rank;
    if (captured >= variance_fraction * total * (1.0 - 1e-12)) break;
  }

  es.eigenvalues.resize(static_cast<Eigen::Index>(rank));
  es.basis.resize(a.rows(), static_cast<Eigen::Index>(rank));
  for (std::size_t j = 0; j < rank; ++j) {
    const double lambda = ascending(kept[j]);
    es.eigenvalues(static_cast<Eigen::Index>(j)) = lambda;
    es.basis.col(static_cast<Eigen::Index>(j)) = a * solver.eigenvectors().col(kept[j]) / std::sqrt(lambda);
  }
  orthonormalize(es.basis);
  for (Eigen::Index j = 0; j < es.basis.cols(); ++j) {
    Eigen::Index at = 0;
    es.basis.col(j).cwiseAbs().maxCoeff(&at);
    if (es.basis(at, j) < 0.0) es.basis.col(j) *= -1.0;
  }
  return es;
}

Eigenspace train_eigenspace(std::span<const features::FeatureVector> vectors, double variance_fraction) {
  if (vectors.size() < 2) throw_data("eigenspace training needs at least 2 vectors");
  const std::size_t d = vectors.front().size();
  Eigen::MatrixXd data(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    if (vectors[j].size() != d)
      throw_data("feature vector length mismatch: " + std::to_string(vectors[j].size()) + " vs " + std::to_string(d));
    data.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(vectors[j].values.data(), static_cast<Eigen::Index>(d));
  }
  return train_eigenspace(data, variance_fraction);
}

Projection project(const Eigenspace& es, std::span<const double> v) {
  check_length(es, v.size());
  const Eigen::Map<const Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
  return es.basis.transpose() * (x - es.mean);
}

double dfes(const Eigenspace& es, std::span<const double> v) {
  check_length(es, v.size());
  const Eigen::Map<const Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
  const Eigen::VectorXd phi = x - es.mean;
  const Eigen::VectorXd omega = es.basis.transpose() * phi;
  return (phi - es.basis * omega).norm();
}

WithinDistance dies(const Eigenspace& es, const Projection& omega, std::span<const Projection> centroids) {
  if (centroids.empty()) throw_data("dies: empty centroid list");
  if (static_cast<std::size_t>(omega.size()) != es.rank()) throw_data("dies: projection length does not match rank");
  WithinDistance best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    if (static_cast<std::size_t>(centroids[k].size()) != es.rank()) throw_data("dies: centroid length does not match rank");
    const double d = (omega - centroids[k]).norm();
    if (d < best.distance) best = {d, k};
  }
  return best;
}

void write_eigenspace(std::ostream& out, const Eigenspace& es) {
  out.write("MSPE", 4);
  detail::put_u32(out, kEigenspaceVersion);
  const nlohmann::json desc = {{"dimension", es.dimension()},
                               {"rank", es.rank()},
                               {"variance_fraction", es.variance_fraction},
                               {"order", "frame-major"}};
  detail::put_string(out, desc.dump());
  detail::put_doubles(out, es.mean.data(), es.dimension());
  detail::put_doubles(out, es.basis.data(), es.dimension() * es.rank());
  detail::put_doubles(out, es.eigenvalues.data(), es.rank());
}

Eigenspace read_eigenspace(std::istream& in) {
  char magic[4];
  detail::get_exact(in, magic, 4);
  if (std::memcmp(magic, "MSPE", 4) != 0) throw_data("corrupt file: bad eigenspace magic");
  const auto version = detail::get_u32(in);
  if (version != kEigenspaceVersion)
    throw_data("unsupported eigenspace format version " + std::to_string(version));
  nlohmann::json desc;
  try {
    desc = nlohmann::json::parse(detail::get_string(in));
  } catch (const nlohmann::json::exception&) {
    throw_data("corrupt file: bad eigenspace descriptor");
  }
  Eigenspace es;
  std::size_t d = 0;
  std::size_t rank = 0;
  try {
    d = desc.at("dimension").get<std::size_t>();
    rank = desc.at("rank").get<std::size_t>();
    es.variance_fraction = desc.at("variance_fraction").get<double>();
    if (desc.at("order").get<std::string>() != "frame-major") throw_data("unsupported vectorization order");
  } catch (const nlohmann::json::exception&) {
    throw_data("corrupt file: incomplete eigenspace descriptor");
  }
  if (d > (1u << 28) || rank > d) throw_data("corrupt file: implausible eigenspace shape");
  es.mean.resize(static_cast<Eigen::Index>(d));
  es.basis.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(rank));
  es.eigenvalues.resize(static_cast<Eigen::Index>(rank));
  detail::get_doubles(in, es.mean.data(), d);
  detail::get_doubles(in, es.basis.data(), d * rank);
  detail::get_doubles(in, es.eigenvalues.data(), rank);
  return es;
}

void save_eigenspace(const Eigenspace& es, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write " + path.string());
  write_eigenspace(out, es);
}

Eigenspace load_eigenspace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open " + path.string());
  return read_eigenspace(in);
}

}  // namespace mispro::pca
