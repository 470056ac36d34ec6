#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "jsm/fft.hpp"
#include "jsm/image.hpp"

namespace jsm {

/// Diagonal 0/1 sampling operator. keep[i] == 1 marks an observed pixel.
struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> keep;

  std::size_t size() const { return keep.size(); }
  std::size_t kept() const;
  bool same_shape(const Image& img) const { return width == img.width() && height == img.height(); }
  friend bool operator==(const PixelMask&, const PixelMask&) = default;
};

/// Square, odd-sized, nonnegative convolution kernel with unit mass.
struct BlurKernel {
  int size = 1;
  std::vector<double> weights;  // row-major size*size

  double at(int row, int col) const { return weights[static_cast<std::size_t>(row) * size + col]; }
  static BlurKernel identity() { return BlurKernel{1, {1.0}}; }
};

enum class KernelKind { Uniform9, Uniform19, Gaussian25_1p6, Motion20_45 };

/// CLI names: uniform9 | uniform19 | gaussian25 | motion20.
KernelKind parse_kernel_kind(std::string_view name);
std::string to_string(KernelKind kind);

struct NoiseSpec {
  double gaussian_sigma = 0.0;
  double impulse_density = 0.0;
  std::uint64_t seed = 0;
};

/// Derives an independent stream seed from a base seed (SplitMix64 step).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Exactly round(ratio * N) observed pixels picked by a seeded shuffle.
PixelMask make_random_mask(int width, int height, double ratio, std::uint64_t seed);

/// keep = (value >= threshold). Throws if nothing is kept.
PixelMask mask_from_image(const Image& img, double threshold = 128.0);

/// Mask as a 255/0 image (the on-disk mask convention).
Image mask_to_image(const PixelMask& mask);

/// Observed pixels copied, killed pixels set to 0.
Image apply_mask(const Image& img, const PixelMask& mask);

BlurKernel make_kernel(KernelKind kind);

/// Zero-padded kernel with its center moved to index (0,0), the periodic
/// layout whose DFT is the operator's frequency response.
std::vector<double> centered_psf(const BlurKernel& k, int width, int height);

/// Periodic convolution computed in the frequency domain.
Image circular_convolve(const Image& img, const BlurKernel& k);

/// Adds i.i.d. N(0, sigma^2) samples; no clamping.
Image add_gaussian_noise(const Image& img, double sigma, std::uint64_t seed);

/// Pixel indices and salt(true)/pepper(false) polarity chosen by
/// add_salt_pepper for the same (N, r, seed).
struct ImpulseSites {
  std::vector<std::size_t> index;
  std::vector<bool> salt;
};
ImpulseSites salt_pepper_sites(std::size_t n, double density, std::uint64_t seed);

/// Sets exactly round(r * N) seeded pixels to 0 or 255.
Image add_salt_pepper(const Image& img, double density, std::uint64_t seed);

/// Adaptive median impulse detector. Flagged pixels get keep = 0.
PixelMask adaptive_median_detect(const Image& img, int max_window = 39);

}  // namespace jsm
