#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jsm/degrade.hpp"
#include "oracles.hpp"

using jsm::Image;
using jsm::KernelKind;

namespace {

const KernelKind kAllKernels[] = {KernelKind::Uniform9, KernelKind::Uniform19, KernelKind::Gaussian25_1p6,
                                  KernelKind::Motion20_45};

}  // namespace

TEST_CASE("random mask keeps exactly round(ratio N) pixels") {
  const auto full = jsm::make_random_mask(5, 7, 1.0, 3);
  CHECK(full.kept() == 35);
  for (std::uint64_t seed = 0; seed < 50; ++seed) CHECK(jsm::make_random_mask(4, 4, 0.25, seed).kept() == 4);
  for (double ratio : {0.2, 0.3, 0.5, 0.8, 0.123})
    CHECK(jsm::make_random_mask(33, 17, ratio, 9).kept() == static_cast<std::size_t>(std::llround(ratio * 33 * 17)));
  CHECK(jsm::make_random_mask(20, 20, 0.3, 11) == jsm::make_random_mask(20, 20, 0.3, 11));
  CHECK_FALSE(jsm::make_random_mask(20, 20, 0.3, 11) == jsm::make_random_mask(20, 20, 0.3, 12));
  CHECK_THROWS(jsm::make_random_mask(4, 4, 0.01, 1));
  CHECK_THROWS(jsm::make_random_mask(4, 4, 1.5, 1));
}

TEST_CASE("mask_from_image thresholds at >= threshold") {
  CHECK(jsm::mask_from_image(Image(3, 3, 255.0), 128).kept() == 9);
  CHECK_THROWS(jsm::mask_from_image(Image(3, 3, 0.0), 128));
  Image checker(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) checker(r, c) = (r + c) % 2 ? 255.0 : 0.0;
  const auto m = jsm::mask_from_image(checker, 128);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(m.keep[i] == (checker[i] == 255.0));
  CHECK(jsm::mask_to_image(m) == checker);
  CHECK(jsm::mask_from_image(Image(1, 1, 128.0), 128).kept() == 1);
}

TEST_CASE("apply_mask zero-fills killed pixels") {
  const Image img = oracle::random_image(6, 5, 1);
  CHECK(jsm::apply_mask(img, jsm::make_random_mask(6, 5, 1.0, 0)) == img);
  jsm::PixelMask m{2, 2, {1, 1, 1, 0}};
  const Image out = jsm::apply_mask(Image(2, 2, 100.0), m);
  CHECK(out == Image(2, 2, std::vector<double>{100, 100, 100, 0}));
  const auto r = jsm::make_random_mask(6, 5, 0.5, 4);
  CHECK(jsm::apply_mask(jsm::apply_mask(img, r), r) == jsm::apply_mask(img, r));
  CHECK_THROWS(jsm::apply_mask(Image(3, 3), m));
}

TEST_CASE("kernels are nonnegative with unit mass") {
  for (KernelKind k : kAllKernels) {
    const auto ker = jsm::make_kernel(k);
    CHECK(ker.size % 2 == 1);
    CHECK(ker.weights.size() == static_cast<std::size_t>(ker.size * ker.size));
    CHECK(std::accumulate(ker.weights.begin(), ker.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*std::min_element(ker.weights.begin(), ker.weights.end()) >= 0.0);
    CHECK(jsm::parse_kernel_kind(jsm::to_string(k)) == k);
  }
  CHECK_THROWS(jsm::parse_kernel_kind("box"));
  CHECK(jsm::make_kernel(KernelKind::Uniform9).at(4, 4) == doctest::Approx(1.0 / 81).epsilon(1e-15));
  CHECK(jsm::make_kernel(KernelKind::Uniform19).at(0, 18) == doctest::Approx(1.0 / 361).epsilon(1e-15));
}

TEST_CASE("Gaussian kernel is isotropic and matches direct normalization") {
  const auto g = jsm::make_kernel(KernelKind::Gaussian25_1p6);
  REQUIRE(g.size == 25);
  for (int r = 0; r < 25; ++r)
    for (int c = 0; c < 25; ++c) {
      CHECK(g.at(r, c) == doctest::Approx(g.at(c, r)).epsilon(1e-15));
      CHECK(g.at(r, c) == doctest::Approx(g.at(24 - r, c)).epsilon(1e-15));
      CHECK(g.at(r, c) == doctest::Approx(g.at(r, 24 - c)).epsilon(1e-15));
    }
  double sum = 0.0;
  for (int y = -12; y <= 12; ++y)
    for (int x = -12; x <= 12; ++x) sum += std::exp(-(x * x + y * y) / (2 * 1.6 * 1.6));
  CHECK(g.at(12, 12) == doctest::Approx(1.0 / sum).epsilon(1e-12));
}

TEST_CASE("motion kernel is a 45 degree line") {
  const auto m = jsm::make_kernel(KernelKind::Motion20_45);
  CHECK(m.size == 15);
  // Symmetric about the center and concentrated on the anti-diagonal.
  double diag = 0.0;
  for (int r = 0; r < m.size; ++r) {
    diag += m.at(r, m.size - 1 - r);
    for (int c = 0; c < m.size; ++c) CHECK(m.at(r, c) == doctest::Approx(m.at(m.size - 1 - r, m.size - 1 - c)).epsilon(1e-15));
  }
  CHECK(diag > 0.6);
  CHECK(m.at(0, 0) == 0.0);
  CHECK(m.at(m.size - 1, m.size - 1) == 0.0);
}

TEST_CASE("circular convolution matches the spatial oracle") {
  const Image img = oracle::random_image(13, 11, 5);
  CHECK(oracle::max_abs_diff(jsm::circular_convolve(img, jsm::BlurKernel::identity()), img) < 1e-10);
  for (KernelKind k : kAllKernels) {
    const auto ker = jsm::make_kernel(k);
    CHECK(oracle::max_abs_diff(jsm::circular_convolve(Image(16, 16, 77.0), ker), Image(16, 16, 77.0)) < 1e-9);
    const Image x = oracle::random_image(16, 16, 21);
    CHECK(oracle::max_abs_diff(jsm::circular_convolve(x, ker), oracle::spatial_circular_convolve(x, ker)) < 1e-9);
  }
  const Image small = oracle::random_image(8, 8, 8);
  const auto u9 = jsm::make_kernel(KernelKind::Uniform9);
  CHECK(oracle::max_abs_diff(jsm::circular_convolve(small, u9), oracle::spatial_circular_convolve(small, u9)) < 1e-9);
}

TEST_CASE("blurring an impulse reproduces the kernel centered on it") {
  const auto ker = jsm::make_kernel(KernelKind::Motion20_45);
  Image delta(32, 32);
  delta(16, 16) = 1.0;
  const Image out = jsm::circular_convolve(delta, ker);
  const int c = ker.size / 2;
  for (int r = 0; r < ker.size; ++r)
    for (int q = 0; q < ker.size; ++q) CHECK(std::abs(out(16 - c + r, 16 - c + q) - ker.at(r, q)) < 1e-12);
}

TEST_CASE("circular convolution is linear") {
  const auto ker = jsm::make_kernel(KernelKind::Gaussian25_1p6);
  const Image x = oracle::random_image(32, 24, 1), y = oracle::random_image(32, 24, 2);
  Image combo(32, 24);
  for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = 2.5 * x[i] - 0.75 * y[i];
  const Image cx = jsm::circular_convolve(x, ker), cy = jsm::circular_convolve(y, ker);
  Image expect(32, 24);
  for (std::size_t i = 0; i < expect.size(); ++i) expect[i] = 2.5 * cx[i] - 0.75 * cy[i];
  CHECK(oracle::max_abs_diff(jsm::circular_convolve(combo, ker), expect) < 1e-9);
}

TEST_CASE("gaussian noise") {
  const Image clean = oracle::pattern_image(256, 256);
  CHECK(jsm::add_gaussian_noise(clean, 0.0, 1) == clean);
  CHECK(jsm::add_gaussian_noise(clean, 3.0, 1) == jsm::add_gaussian_noise(clean, 3.0, 1));
  const Image noisy = jsm::add_gaussian_noise(clean, 10.0, 42);
  double mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double d = noisy[i] - clean[i];
    mean += d;
    sq += d * d;
  }
  mean /= clean.size();
  const double sd = std::sqrt(sq / clean.size() - mean * mean);
  CHECK(sd == doctest::Approx(10.0).epsilon(0.03));
  CHECK_THROWS(jsm::add_gaussian_noise(clean, -1.0, 1));
}

TEST_CASE("salt and pepper") {
  const Image clean = oracle::pattern_image(64, 48);
  CHECK(jsm::add_salt_pepper(clean, 0.0, 5) == clean);
  for (double r : {0.1, 0.4, 0.5, 0.77}) {
    const Image noisy = jsm::add_salt_pepper(clean, r, 5);
    const auto sites = jsm::salt_pepper_sites(clean.size(), r, 5);
    CHECK(sites.index.size() == static_cast<std::size_t>(std::llround(r * clean.size())));
    std::vector<char> hit(clean.size(), 0);
    for (std::size_t k = 0; k < sites.index.size(); ++k) {
      const std::size_t i = sites.index[k];
      hit[i] = 1;
      CHECK(noisy[i] == (sites.salt[k] ? 255.0 : 0.0));
    }
    for (std::size_t i = 0; i < clean.size(); ++i)
      if (!hit[i]) CHECK(noisy[i] == clean[i]);
  }
  CHECK_THROWS(jsm::add_salt_pepper(clean, 1.0, 1));
}

TEST_CASE("derive_seed gives distinct streams") {
  CHECK(jsm::derive_seed(1, 0) != jsm::derive_seed(1, 1));
  CHECK(jsm::derive_seed(1, 0) != jsm::derive_seed(2, 0));
  CHECK(jsm::derive_seed(7, 3) == jsm::derive_seed(7, 3));
}

TEST_CASE("adaptive median: isolated impulse and degenerate images") {
  // Flat neighbourhoods never reach min < med < max and are flagged once the
  // window passes its cap, so the impulse sits on a ramp instead.
  Image img(15, 15);
  for (int r = 0; r < 15; ++r)
    for (int c = 0; c < 15; ++c) img(r, c) = 20.0 + 4.0 * c + 0.5 * r;
  img(7, 7) = 255.0;
  const auto m = jsm::adaptive_median_detect(img, 39);
  for (int r = 1; r < 14; ++r)
    for (int c = 1; c < 14; ++c) CHECK(m.keep[r * 15 + c] == (r == 7 && c == 7 ? 0 : 1));
  const auto flat = jsm::adaptive_median_detect(Image(15, 15, 50.0), 3);
  CHECK(flat.kept() == 0);
  const auto zero = jsm::adaptive_median_detect(Image(9, 9, 0.0), 39);
  CHECK(zero.kept() == 0);
}

TEST_CASE("adaptive median: no false positives inside a strictly monotone ramp") {
  // Clipped border windows of a ramp place the corner pixels at the window
  // extremes, so only pixels whose 3x3 window is unclipped are asserted.
  Image ramp(32, 32);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) ramp(r, c) = 10.0 + 3.0 * c + 0.5 * r;
  const auto m = jsm::adaptive_median_detect(ramp, 39);
  for (int r = 1; r < 31; ++r)
    for (int c = 1; c < 31; ++c) CHECK(m.keep[r * 32 + c] == 1);
}

TEST_CASE("adaptive median recall and precision at r = 0.5") {
  // Textured stand-in for a natural image; values stay inside (0, 255).
  Image clean = oracle::pattern_image(128, 128);
  for (double& v : clean.data()) v = std::clamp(v, 5.0, 250.0);
  const double r = 0.5;
  const Image noisy = jsm::add_salt_pepper(clean, r, 77);
  const auto sites = jsm::salt_pepper_sites(clean.size(), r, 77);
  const auto m = jsm::adaptive_median_detect(noisy, 39);
  std::vector<char> corrupted(clean.size(), 0);
  for (auto i : sites.index) corrupted[i] = 1;
  std::size_t hits = 0, flagged = 0, true_flags = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (corrupted[i] && !m.keep[i]) ++hits;
    if (!m.keep[i]) {
      ++flagged;
      if (corrupted[i]) ++true_flags;
    }
  }
  CHECK(static_cast<double>(hits) / sites.index.size() >= 0.99);
  CHECK(static_cast<double>(true_flags) / flagged >= 0.95);
}
