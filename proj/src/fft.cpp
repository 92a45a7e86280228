#include "vpl/fft.hpp"

#include <fftw3.h>

#include <functional>
#include <mutex>
#include <numeric>
#include <utility>

#include "vpl/error.hpp"

namespace vpl {

namespace {

// The FFTW planner is not re-entrant; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t product(const std::vector<int>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

RealFft::RealFft(std::vector<int> shape, int howmany) : shape_(std::move(shape)), howmany_(howmany) {
  if (shape_.empty() || howmany_ < 1) throw ParameterError("RealFft: empty shape or batch");
  points_ = product(shape_);
  modes_ = points_ / static_cast<std::size_t>(shape_.back()) * (shape_.back() / 2 + 1);
  real_size_ = points_ * howmany_;
  spectrum_size_ = modes_ * howmany_;

  std::lock_guard lock(planner_mutex());
  real_ = static_cast<double*>(fftw_malloc(sizeof(double) * real_size_));
  spectrum_ = static_cast<Complex*>(fftw_malloc(sizeof(Complex) * spectrum_size_));
  auto* out = reinterpret_cast<fftw_complex*>(spectrum_);
  const int rank = static_cast<int>(shape_.size());
  forward_plan_ = fftw_plan_many_dft_r2c(rank, shape_.data(), howmany_, real_, nullptr, howmany_, 1, out,
                                         nullptr, howmany_, 1, FFTW_ESTIMATE);
  backward_plan_ = fftw_plan_many_dft_c2r(rank, shape_.data(), howmany_, out, nullptr, howmany_, 1, real_,
                                          nullptr, howmany_, 1, FFTW_ESTIMATE);
  if (!forward_plan_ || !backward_plan_) {
    release();
    throw Error("RealFft: FFTW planning failed");
  }
}

RealFft::~RealFft() { release(); }

RealFft::RealFft(RealFft&& other) noexcept
    : shape_(std::move(other.shape_)),
      howmany_(other.howmany_),
      points_(other.points_),
      modes_(other.modes_),
      real_size_(other.real_size_),
      spectrum_size_(other.spectrum_size_),
      real_(std::exchange(other.real_, nullptr)),
      spectrum_(std::exchange(other.spectrum_, nullptr)),
      forward_plan_(std::exchange(other.forward_plan_, nullptr)),
      backward_plan_(std::exchange(other.backward_plan_, nullptr)) {}

RealFft& RealFft::operator=(RealFft&& other) noexcept {
  if (this != &other) {
    release();
    shape_ = std::move(other.shape_);
    howmany_ = other.howmany_;
    points_ = other.points_;
    modes_ = other.modes_;
    real_size_ = other.real_size_;
    spectrum_size_ = other.spectrum_size_;
    real_ = std::exchange(other.real_, nullptr);
    spectrum_ = std::exchange(other.spectrum_, nullptr);
    forward_plan_ = std::exchange(other.forward_plan_, nullptr);
    backward_plan_ = std::exchange(other.backward_plan_, nullptr);
  }
  return *this;
}

void RealFft::release() noexcept {
  if (!real_ && !spectrum_ && !forward_plan_ && !backward_plan_) return;
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (backward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
  fftw_free(real_);
  fftw_free(spectrum_);
  forward_plan_ = backward_plan_ = nullptr;
  real_ = nullptr;
  spectrum_ = nullptr;
}

void RealFft::forward() { fftw_execute(static_cast<fftw_plan>(forward_plan_)); }

// c2r destroys its input; callers treat the spectrum as scratch afterwards.
void RealFft::backward() { fftw_execute(static_cast<fftw_plan>(backward_plan_)); }

ComplexFft::ComplexFft(std::vector<int> shape) : shape_(std::move(shape)) {
  size_ = product(shape_);
  std::lock_guard lock(planner_mutex());
  data_ = static_cast<Complex*>(fftw_malloc(sizeof(Complex) * size_));
  auto* d = reinterpret_cast<fftw_complex*>(data_);
  const int rank = static_cast<int>(shape_.size());
  forward_plan_ = fftw_plan_dft(rank, shape_.data(), d, d, FFTW_FORWARD, FFTW_ESTIMATE);
  backward_plan_ = fftw_plan_dft(rank, shape_.data(), d, d, FFTW_BACKWARD, FFTW_ESTIMATE);
}

ComplexFft::~ComplexFft() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (backward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
  fftw_free(data_);
}

void ComplexFft::forward() { fftw_execute(static_cast<fftw_plan>(forward_plan_)); }
void ComplexFft::backward() { fftw_execute(static_cast<fftw_plan>(backward_plan_)); }

}  // namespace vpl
