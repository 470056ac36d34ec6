#pragma once

#include <complex>
#include <span>
#include <vector>

namespace jsm {

using Spectrum = std::vector<std::complex<double>>;

/// Real-input 2D DFT of a fixed height x width grid (FFTW r2c/c2r).
///
/// The spectrum holds height * (width/2 + 1) bins, row-major. inverse()
/// returns the normalized transform, so inverse(forward(x)) == x.
/// Not safe for concurrent use of a single instance.
class RealFft2d {
 public:
  RealFft2d(int width, int height);
  ~RealFft2d();
  RealFft2d(const RealFft2d&) = delete;
  RealFft2d& operator=(const RealFft2d&) = delete;
  RealFft2d(RealFft2d&& other) noexcept;
  RealFft2d& operator=(RealFft2d&& other) noexcept;

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t spectrum_size() const { return static_cast<std::size_t>(height_) * (width_ / 2 + 1); }

  Spectrum forward(std::span<const double> real);
  std::vector<double> inverse(std::span<const std::complex<double>> spectrum);

 private:
  void release();

  int width_ = 0;
  int height_ = 0;
  double* real_ = nullptr;
  void* complex_ = nullptr;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
};

}  // namespace jsm
