#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vpl {

using Complex = std::complex<double>;

/// Owning RAII wrapper around a pair of FFTW real<->complex plans.
///
/// Transforms a row-major array of `shape`, batched `howmany` times with the
/// batch index fastest (element (i, b) at i*howmany + b), in both the real and
/// the half-complex layout. This matches the x-major phase-space layout when
/// the batch runs over velocity nodes.
///
/// backward() is unnormalized: forward then backward multiplies by size().
/// Plans are built with FFTW_ESTIMATE, so two objects of the same shape run
/// bit-identical arithmetic.
class RealFft {
 public:
  explicit RealFft(std::vector<int> shape, int howmany = 1);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&& other) noexcept;
  RealFft& operator=(RealFft&& other) noexcept;

  std::span<double> real() { return {real_, real_size_}; }
  std::span<Complex> spectrum() { return {spectrum_, spectrum_size_}; }
  std::span<const double> real() const { return {real_, real_size_}; }
  std::span<const Complex> spectrum() const { return {spectrum_, spectrum_size_}; }

  void forward();
  void backward();

  const std::vector<int>& shape() const { return shape_; }
  int howmany() const { return howmany_; }
  /// Number of real points per batch member.
  std::size_t points() const { return points_; }
  /// Number of half-spectrum modes per batch member.
  std::size_t modes() const { return modes_; }

 private:
  void release() noexcept;

  std::vector<int> shape_;
  int howmany_ = 1;
  std::size_t points_ = 0;
  std::size_t modes_ = 0;
  std::size_t real_size_ = 0;
  std::size_t spectrum_size_ = 0;
  double* real_ = nullptr;
  Complex* spectrum_ = nullptr;
  void* forward_plan_ = nullptr;
  void* backward_plan_ = nullptr;
};

/// Plain complex DFT, used for the public full-spectrum transforms.
class ComplexFft {
 public:
  explicit ComplexFft(std::vector<int> shape);
  ~ComplexFft();
  ComplexFft(const ComplexFft&) = delete;
  ComplexFft& operator=(const ComplexFft&) = delete;

  std::span<Complex> data() { return {data_, size_}; }
  void forward();
  void backward();

 private:
  std::vector<int> shape_;
  std::size_t size_ = 0;
  Complex* data_ = nullptr;
  void* forward_plan_ = nullptr;
  void* backward_plan_ = nullptr;
};

/// Signed mode number of DFT index `idx` on an axis of `n` points:
/// 0..n/2 map to themselves, the rest to idx - n.
inline int signed_mode(int idx, int n) { return idx <= n / 2 ? idx : idx - n; }

}  // namespace vpl
