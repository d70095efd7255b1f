#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace mispro::detail {

/// Real-input DFT of a fixed length backed by FFTW. Plans are shared per length and
/// created under a lock; transforms may run concurrently.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// out.size() must equal bins().
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Unnormalized inverse: forward followed by inverse scales by size().
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

 private:
  std::size_t n_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace mispro::detail
