#include "jsm/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace jsm {

RealFft2d::RealFft2d(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("FFT size must be positive");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  real_ = fftw_alloc_real(n);
  auto* cplx = fftw_alloc_complex(spectrum_size());
  complex_ = cplx;
  // FFTW_ESTIMATE keeps plans (and therefore results) independent of timing.
  plan_fwd_ = fftw_plan_dft_r2c_2d(height, width, real_, cplx, FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_c2r_2d(height, width, cplx, real_, FFTW_ESTIMATE);
  if (!real_ || !cplx || !plan_fwd_ || !plan_inv_) {
    release();
    throw std::runtime_error("FFTW plan creation failed");
  }
}

RealFft2d::~RealFft2d() { release(); }

RealFft2d::RealFft2d(RealFft2d&& other) noexcept
    : width_(other.width_),
      height_(other.height_),
      real_(std::exchange(other.real_, nullptr)),
      complex_(std::exchange(other.complex_, nullptr)),
      plan_fwd_(std::exchange(other.plan_fwd_, nullptr)),
      plan_inv_(std::exchange(other.plan_inv_, nullptr)) {}

RealFft2d& RealFft2d::operator=(RealFft2d&& other) noexcept {
  if (this != &other) {
    release();
    width_ = other.width_;
    height_ = other.height_;
    real_ = std::exchange(other.real_, nullptr);
    complex_ = std::exchange(other.complex_, nullptr);
    plan_fwd_ = std::exchange(other.plan_fwd_, nullptr);
    plan_inv_ = std::exchange(other.plan_inv_, nullptr);
  }
  return *this;
}

void RealFft2d::release() {
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_inv_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  if (real_) fftw_free(real_);
  if (complex_) fftw_free(complex_);
  plan_fwd_ = plan_inv_ = nullptr;
  real_ = nullptr;
  complex_ = nullptr;
}

Spectrum RealFft2d::forward(std::span<const double> real) {
  const std::size_t n = static_cast<std::size_t>(width_) * height_;
  if (real.size() != n) throw std::invalid_argument("FFT input size mismatch");
  std::copy(real.begin(), real.end(), real_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  const auto* c = static_cast<const fftw_complex*>(complex_);
  Spectrum out(spectrum_size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {c[i][0], c[i][1]};
  return out;
}

std::vector<double> RealFft2d::inverse(std::span<const std::complex<double>> spectrum) {
  if (spectrum.size() != spectrum_size()) throw std::invalid_argument("FFT spectrum size mismatch");
  auto* c = static_cast<fftw_complex*>(complex_);
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    c[i][0] = spectrum[i].real();
    c[i][1] = spectrum[i].imag();
  }
  // c2r destroys its input; the buffer is refilled on every call.
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  const std::size_t n = static_cast<std::size_t>(width_) * height_;
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = real_[i] * scale;
  return out;
}

}  // namespace jsm
