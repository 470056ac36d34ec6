#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace jsm {

/// Raised on unreadable/unwritable files and malformed image data.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a solver iterate stops being finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major grid of real intensities on the 0-255 scale.
///
/// Values may leave [0,255] while a solver is running; only save_image
/// clamps. Every public operation in the library keeps values finite.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);
  Image(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int row, int col) {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  double operator()(int row, int col) const {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool all_finite() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Reads 8-bit PGM (P2/P5) or 8-bit gray / 24-bit RGB PNG. RGB input is
/// reduced to luminance.
Image load_image(const std::filesystem::path& path);

/// Clamps to [0,255], rounds half-up, writes PNG if the extension is .png,
/// binary PGM otherwise.
void save_image(const Image& img, const std::filesystem::path& path);

/// BT.601 luma.
inline double luminance_of(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

/// Peak signal-to-noise ratio for peak 255. Identical images give +inf.
double psnr(const Image& a, const Image& b);

/// Mean squared difference; throws std::invalid_argument on shape mismatch.
double mse(const Image& a, const Image& b);

/// Elementwise clamp to [lo, hi].
Image clamped(const Image& img, double lo = 0.0, double hi = 255.0);

}  // namespace jsm
