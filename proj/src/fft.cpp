#include "pactomo/fft.hpp"

#include "pactomo/error.hpp"

#include <fftw3.h>

#include <mutex>
#include <utility>
#include <vector>

namespace pactomo {

namespace {

// FFTW planning is not thread safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

Fft3::Fft3(std::array<std::size_t, 3> dims) : dims_(dims) {
  std::vector<std::complex<double>> scratch(size());
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_3d(int(dims[0]), int(dims[1]), int(dims[2]), as_fftw(scratch.data()),
                                   as_fftw(scratch.data()), FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  backward_plan_ = fftw_plan_dft_3d(int(dims[0]), int(dims[1]), int(dims[2]), as_fftw(scratch.data()),
                                    as_fftw(scratch.data()), FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!forward_plan_ || !backward_plan_) throw Error(ErrorCategory::precondition, "Fft3: planning failed");
}

Fft3::~Fft3() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (backward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
}

Fft3::Fft3(Fft3&& other) noexcept
    : dims_(other.dims_),
      forward_plan_(std::exchange(other.forward_plan_, nullptr)),
      backward_plan_(std::exchange(other.backward_plan_, nullptr)) {}

Fft3& Fft3::operator=(Fft3&& other) noexcept {
  std::swap(dims_, other.dims_);
  std::swap(forward_plan_, other.forward_plan_);
  std::swap(backward_plan_, other.backward_plan_);
  return *this;
}

void Fft3::forward(std::span<std::complex<double>> data) const {
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), as_fftw(data.data()), as_fftw(data.data()));
}

void Fft3::backward(std::span<std::complex<double>> data) const {
  fftw_execute_dft(static_cast<fftw_plan>(backward_plan_), as_fftw(data.data()), as_fftw(data.data()));
}

void fft1d(std::span<std::complex<double>> data, bool inverse) {
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(int(data.size()), as_fftw(data.data()), as_fftw(data.data()),
                            inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace pactomo
