#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>

namespace pactomo {

/// In-place complex 3D FFT over a fixed buffer size (FFTW_ESTIMATE plans,
/// so results are reproducible run to run). Unnormalized in both directions.
class Fft3 {
 public:
  explicit Fft3(std::array<std::size_t, 3> dims);
  ~Fft3();
  Fft3(const Fft3&) = delete;
  Fft3& operator=(const Fft3&) = delete;
  Fft3(Fft3&&) noexcept;
  Fft3& operator=(Fft3&&) noexcept;

  std::size_t size() const { return dims_[0] * dims_[1] * dims_[2]; }
  const std::array<std::size_t, 3>& dims() const { return dims_; }

  /// Sign -1 kernel exp(-2 pi i n k / N).
  void forward(std::span<std::complex<double>> data) const;
  /// Sign +1 kernel; caller divides by size() for the inverse.
  void backward(std::span<std::complex<double>> data) const;

 private:
  std::array<std::size_t, 3> dims_;
  void* forward_plan_ = nullptr;
  void* backward_plan_ = nullptr;
};

/// Unnormalized 1D complex FFT (forward sign -1) on a buffer of length n.
void fft1d(std::span<std::complex<double>> data, bool inverse);

}  // namespace pactomo
