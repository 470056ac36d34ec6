#include "jsm/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace jsm {

std::size_t PixelMask::kept() const {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{1}));
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "uniform9") return KernelKind::Uniform9;
  if (name == "uniform19") return KernelKind::Uniform19;
  if (name == "gaussian25") return KernelKind::Gaussian25_1p6;
  if (name == "motion20") return KernelKind::Motion20_45;
  throw std::invalid_argument("unknown kernel '" + std::string(name) +
                              "' (expected uniform9|uniform19|gaussian25|motion20)");
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Uniform9: return "uniform9";
    case KernelKind::Uniform19: return "uniform19";
    case KernelKind::Gaussian25_1p6: return "gaussian25";
    case KernelKind::Motion20_45: return "motion20";
  }
  return "?";
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

void require_same_shape(const Image& img, const PixelMask& m) {
  if (!m.same_shape(img)) throw std::invalid_argument("mask and image dimensions differ");
}

BlurKernel uniform_kernel(int size) {
  const double w = 1.0 / (static_cast<double>(size) * size);
  return BlurKernel{size, std::vector<double>(static_cast<std::size_t>(size) * size, w)};
}

// fspecial('gaussian', size, sigma), including its eps*max cutoff.
BlurKernel gaussian_kernel(int size, double sigma) {
  const int half = size / 2;
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double y = r - half, x = c - half;
      w[static_cast<std::size_t>(r) * size + c] = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
    }
  const double cutoff = std::numeric_limits<double>::epsilon() * *std::max_element(w.begin(), w.end());
  for (double& v : w)
    if (v < cutoff) v = 0.0;
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return BlurKernel{size, std::move(w)};
}

// fspecial('motion', len, theta): a one-pixel-wide line with linear
// coverage falloff, built on a half grid and unfolded by point symmetry.
BlurKernel motion_kernel(double len, double theta_deg) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double line_width = 1.0;
  const double half = (len - 1.0) / 2.0;
  const double phi = std::fmod(theta_deg, 180.0) / 180.0 * M_PI;
  const double cphi = std::cos(phi), sphi = std::sin(phi);
  const int xsign = cphi > 0 ? 1 : (cphi < 0 ? -1 : 0);
  const int sx = static_cast<int>(std::trunc(half * cphi + line_width * xsign - len * eps));
  const int sy = static_cast<int>(std::trunc(half * sphi + line_width - len * eps));
  const int cols = std::abs(sx) + 1;
  const int rows = sy + 1;
  const int step = xsign == 0 ? 1 : xsign;

  std::vector<double> d(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double x = c * step, y = r;
      double dist = y * cphi - x * sphi;
      const double rad = std::hypot(x, y);
      if (rad >= half && std::abs(dist) <= line_width) {
        const double along = half - std::abs((x + dist * sphi) / cphi);
        dist = std::sqrt(dist * dist + along * along);
      }
      d[static_cast<std::size_t>(r) * cols + c] = std::max(0.0, line_width + eps - std::abs(dist));
    }

  // rot90(d, 2) in the top-left quadrant, d in the bottom-right; they share
  // the center cell.
  const int hr = 2 * rows - 1, hc = 2 * cols - 1;
  std::vector<double> h(static_cast<std::size_t>(hr) * hc, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      h[static_cast<std::size_t>(r) * hc + c] = d[static_cast<std::size_t>(rows - 1 - r) * cols + (cols - 1 - c)];
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      h[static_cast<std::size_t>(r + rows - 1) * hc + (c + cols - 1)] = d[static_cast<std::size_t>(r) * cols + c];
  if (cphi > 0) {
    for (int r = 0; r < hr / 2; ++r)
      std::swap_ranges(h.begin() + static_cast<std::ptrdiff_t>(r) * hc, h.begin() + static_cast<std::ptrdiff_t>(r + 1) * hc,
                       h.begin() + static_cast<std::ptrdiff_t>(hr - 1 - r) * hc);
  }

  // Embed in the smallest odd square.
  const int size = std::max(hr, hc);
  std::vector<double> w(static_cast<std::size_t>(size) * size, 0.0);
  const int r0 = (size - hr) / 2, c0 = (size - hc) / 2;
  for (int r = 0; r < hr; ++r)
    for (int c = 0; c < hc; ++c) w[static_cast<std::size_t>(r + r0) * size + (c + c0)] = h[static_cast<std::size_t>(r) * hc + c];
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return BlurKernel{size, std::move(w)};
}

}  // namespace

PixelMask make_random_mask(int width, int height, double ratio, std::uint64_t seed) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("mask dimensions must be positive");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("ratio must lie in (0,1]");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  const auto keep_count = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  if (keep_count == 0) throw std::invalid_argument("ratio * N rounds to zero observed pixels");

  std::mt19937_64 rng(seed);
  const auto order = shuffled_indices(n, rng);
  PixelMask m{width, height, std::vector<std::uint8_t>(n, 0)};
  for (std::size_t i = 0; i < keep_count; ++i) m.keep[order[i]] = 1;
  return m;
}

PixelMask mask_from_image(const Image& img, double threshold) {
  PixelMask m{img.width(), img.height(), std::vector<std::uint8_t>(img.size(), 0)};
  for (std::size_t i = 0; i < img.size(); ++i) m.keep[i] = img[i] >= threshold ? 1 : 0;
  if (m.kept() == 0) throw std::invalid_argument("mask keeps no pixels");
  return m;
}

Image mask_to_image(const PixelMask& mask) {
  Image out(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask.keep[i] ? 255.0 : 0.0;
  return out;
}

Image apply_mask(const Image& img, const PixelMask& mask) {
  require_same_shape(img, mask);
  Image out = img;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!mask.keep[i]) out[i] = 0.0;
  return out;
}

BlurKernel make_kernel(KernelKind kind) {
  switch (kind) {
    case KernelKind::Uniform9: return uniform_kernel(9);
    case KernelKind::Uniform19: return uniform_kernel(19);
    case KernelKind::Gaussian25_1p6: return gaussian_kernel(25, 1.6);
    case KernelKind::Motion20_45: return motion_kernel(20.0, 45.0);
  }
  throw std::invalid_argument("unknown kernel kind");
}

std::vector<double> centered_psf(const BlurKernel& k, int width, int height) {
  std::vector<double> psf(static_cast<std::size_t>(width) * height, 0.0);
  const int c = k.size / 2;
  for (int r = 0; r < k.size; ++r)
    for (int q = 0; q < k.size; ++q) {
      const int rr = ((r - c) % height + height) % height;
      const int cc = ((q - c) % width + width) % width;
      psf[static_cast<std::size_t>(rr) * width + cc] += k.at(r, q);
    }
  return psf;
}

Image circular_convolve(const Image& img, const BlurKernel& k) {
  RealFft2d fft(img.width(), img.height());
  const Spectrum response = fft.forward(centered_psf(k, img.width(), img.height()));
  Spectrum s = fft.forward(img.data());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= response[i];
  return Image(img.width(), img.height(), fft.inverse(s));
}

Image add_gaussian_noise(const Image& img, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be nonnegative");
  if (sigma == 0.0) return img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Image out = img;
  for (double& v : out.data()) v += normal(rng);
  return out;
}

ImpulseSites salt_pepper_sites(std::size_t n, double density, std::uint64_t seed) {
  if (!(density >= 0.0 && density < 1.0)) throw std::invalid_argument("impulse density must lie in [0,1)");
  const auto count = static_cast<std::size_t>(std::llround(density * static_cast<double>(n)));
  std::mt19937_64 rng(seed);
  auto order = shuffled_indices(n, rng);
  std::bernoulli_distribution coin(0.5);
  ImpulseSites sites;
  sites.index.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  sites.salt.reserve(count);
  for (std::size_t i = 0; i < count; ++i) sites.salt.push_back(coin(rng));
  return sites;
}

Image add_salt_pepper(const Image& img, double density, std::uint64_t seed) {
  const auto sites = salt_pepper_sites(img.size(), density, seed);
  Image out = img;
  for (std::size_t i = 0; i < sites.index.size(); ++i) out[sites.index[i]] = sites.salt[i] ? 255.0 : 0.0;
  return out;
}

PixelMask adaptive_median_detect(const Image& img, int max_window) {
  if (max_window < 3 || max_window % 2 == 0) throw std::invalid_argument("max_window must be odd and >= 3");
  const int w = img.width(), h = img.height();
  PixelMask m{w, h, std::vector<std::uint8_t>(img.size(), 1)};
  std::vector<double> win;
  win.reserve(static_cast<std::size_t>(max_window) * max_window);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double v = img(r, c);
      bool impulse = true;
      for (int size = 3; size <= max_window; size += 2) {
        const int half = size / 2;
        const int r0 = std::max(0, r - half), r1 = std::min(h - 1, r + half);
        const int c0 = std::max(0, c - half), c1 = std::min(w - 1, c + half);
        win.clear();
        for (int rr = r0; rr <= r1; ++rr)
          for (int cc = c0; cc <= c1; ++cc) win.push_back(img(rr, cc));
        const auto mid = win.begin() + static_cast<std::ptrdiff_t>((win.size() - 1) / 2);
        std::nth_element(win.begin(), mid, win.end());
        const double med = *mid;
        const double lo = *std::min_element(win.begin(), win.end());
        const double hi = *std::max_element(win.begin(), win.end());
        if (lo < med && med < hi) {
          impulse = !(lo < v && v < hi);
          break;
        }
        // The whole image already fits in the window; growing changes nothing.
        if (r0 == 0 && c0 == 0 && r1 == h - 1 && c1 == w - 1) break;
      }
      if (impulse) m.keep[static_cast<std::size_t>(r) * w + c] = 0;
    }
  return m;
}

}  // namespace jsm
