#include <doctest.h>

#include <cmath>
#include <sstream>

#include "jsm/solver.hpp"
#include "oracles.hpp"

using jsm::Image;

namespace {

std::vector<double> flat(const Image& img) { return {img.data().begin(), img.data().end()}; }

struct Splitting {
  Image w, x, b, c;
};

Splitting random_splitting(int w, int h, std::uint64_t seed) {
  return {oracle::random_image(w, h, seed), oracle::random_image(w, h, seed + 1),
          oracle::random_image(w, h, seed + 2, -20, 20), oracle::random_image(w, h, seed + 3, -20, 20)};
}

std::vector<double> qprime(const Splitting& s, const jsm::SolverParams& p) {
  std::vector<double> q(s.w.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = p.mu1 * (s.w[i] + s.b[i]) + p.mu2 * (s.x[i] + s.c[i]);
  return q;
}

oracle::Matrix dense_blur(const jsm::BlurKernel& k, int w, int h) {
  return oracle::dense_matrix(static_cast<std::size_t>(w) * h, [&](const std::vector<double>& e) {
    return flat(oracle::spatial_circular_convolve(Image(w, h, e), k));
  });
}

}  // namespace

TEST_CASE("default parameters") {
  const auto p = jsm::default_params(2.5e-3, 7);
  CHECK(p.mu1 == doctest::Approx(3.5e-4).epsilon(1e-12));
  CHECK(p.mu2 == doctest::Approx(2.15e-3).epsilon(1e-12));
  CHECK(p.tau == doctest::Approx(3.5e-3).epsilon(1e-12));
  CHECK(p.lambda == doctest::Approx(2.15e-2).epsilon(1e-12));
  CHECK(p.gamma() == doctest::Approx(10.0));
  CHECK(p.alpha() == doctest::Approx(10.0));
  CHECK(p.max_iters == 7);
  CHECK_NOTHROW(p.validate());
  auto bad = p;
  bad.mu1 = 1.0;
  CHECK_THROWS(bad.validate());
  CHECK_THROWS(jsm::default_params(0.0, 5));
  CHECK_THROWS(jsm::default_params(1e-3, -1).validate());
}

TEST_CASE("inpainting u-step equals the dense solve") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto mask = jsm::make_random_mask(6, 6, 0.2 + 0.006 * s, s);
    const Image y = jsm::apply_mask(oracle::random_image(6, 6, 1000 + s), mask);
    const auto sp = random_splitting(6, 6, 2000 + 4 * s);
    const auto p = jsm::default_params(std::pow(10.0, -4.0 + 0.04 * s), 1);
    const auto h = oracle::dense_matrix(36, [&](const std::vector<double>& e) {
      std::vector<double> out(e.size());
      for (std::size_t i = 0; i < e.size(); ++i) out[i] = mask.keep[i] ? e[i] : 0.0;
      return out;
    });
    const auto expect = oracle::dense_u_step(h, flat(y), qprime(sp, p), p.mu_tilde);
    const Image got = jsm::u_step_inpaint(y, mask, sp.w, sp.x, sp.b, sp.c, p);
    for (std::size_t i = 0; i < expect.size(); ++i)
      CHECK(std::abs(got[i] - expect[i]) <= 1e-9 * std::max(1.0, std::abs(expect[i])));
  }
}

TEST_CASE("deblurring u-step equals the dense solve") {
  using jsm::KernelKind;
  struct Case {
    KernelKind kind;
    int size;
  };
  for (const Case& cs : {Case{KernelKind::Uniform9, 16}, Case{KernelKind::Uniform19, 16},
                         Case{KernelKind::Gaussian25_1p6, 16}, Case{KernelKind::Motion20_45, 16},
                         Case{KernelKind::Uniform9, 8}}) {
    CAPTURE(jsm::to_string(cs.kind));
    CAPTURE(cs.size);
    const auto k = jsm::make_kernel(cs.kind);
    const auto h = dense_blur(k, cs.size, cs.size);
    for (double mu : {1e-3, 5e-2}) {
      const Image y = oracle::random_image(cs.size, cs.size, 31);
      const auto sp = random_splitting(cs.size, cs.size, 40);
      const auto p = jsm::default_params(mu, 1);
      const auto expect = oracle::dense_u_step(h, flat(y), qprime(sp, p), p.mu_tilde);
      const Image got = jsm::u_step_deblur(y, k, sp.w, sp.x, sp.b, sp.c, p);
      double scale = 0.0;
      for (double v : expect) scale = std::max(scale, std::abs(v));
      CHECK(oracle::max_abs_diff(flat(got), expect) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("identity kernel reduces to the identity u-step") {
  const Image y = oracle::random_image(12, 10, 3);
  const auto sp = random_splitting(12, 10, 9);
  const auto p = jsm::default_params(2e-3, 1);
  const Image got = jsm::u_step_deblur(y, jsm::BlurKernel::identity(), sp.w, sp.x, sp.b, sp.c, p);
  const auto q = qprime(sp, p);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(got[i] == doctest::Approx((y[i] + q[i]) / (1.0 + p.mu_tilde)));
}

TEST_CASE("run with zero iterations returns the clamped observation") {
  Image y = oracle::random_image(20, 20, 2, -30, 290);
  const auto mask = jsm::make_random_mask(20, 20, 0.5, 1);
  const auto res = jsm::run({y, mask}, jsm::default_params(1e-3, 0));
  CHECK(res.iterations == 0);
  CHECK(res.telemetry.empty());
  CHECK(res.restored == jsm::clamped(y));
}

TEST_CASE("run: telemetry, finiteness and determinism") {
  const Image truth = oracle::pattern_image(48, 40);
  const auto mask = jsm::make_random_mask(48, 40, 0.5, 3);
  const jsm::Observation obs{jsm::apply_mask(truth, mask), mask};
  auto p = jsm::default_params(2.5e-3, 5, jsm::NlsmParams{4, 2, 12, 4});
  const auto a = jsm::run(obs, p, &truth);
  const auto b = jsm::run(obs, p, &truth);
  CHECK(a.restored == b.restored);
  REQUIRE(a.telemetry.size() == 5);
  for (std::size_t i = 0; i < a.telemetry.size(); ++i) {
    CHECK(a.telemetry[i].iter == static_cast<int>(i) + 1);
    REQUIRE(a.telemetry[i].psnr_db.has_value());
    CHECK(std::isfinite(*a.telemetry[i].psnr_db));
    CHECK(*a.telemetry[i].psnr_db == *b.telemetry[i].psnr_db);
    CHECK(std::isfinite(a.telemetry[i].var_e));
  }
  for (double v : a.restored.data()) CHECK((v >= 0.0 && v <= 255.0));
  CHECK(*a.telemetry.back().psnr_db > jsm::psnr(obs.y, truth));

  const auto no_truth = jsm::run(obs, p);
  CHECK(no_truth.restored == a.restored);
  CHECK_FALSE(no_truth.telemetry[0].psnr_db.has_value());

  std::ostringstream csv;
  jsm::write_telemetry_csv(csv, a.telemetry);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "iter,psnr_db,var_e,var_theta,residual_uw,residual_ux");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 5);
}

TEST_CASE("step-wise API matches run") {
  const Image truth = oracle::pattern_image(32, 32);
  const auto k = jsm::make_kernel(jsm::KernelKind::Uniform9);
  const jsm::Observation obs{jsm::circular_convolve(truth, k), k};
  const auto p = jsm::default_params(2e-3, 3, jsm::NlsmParams{4, 2, 12, 4});
  auto s = jsm::initial_state(obs);
  CHECK(s.u == obs.y);
  CHECK(s.w == Image(32, 32));
  for (int i = 0; i < 3; ++i) s = jsm::sbi_step(std::move(s), obs, p);
  CHECK(s.k == 3);
  CHECK(jsm::clamped(s.u) == jsm::run(obs, p).restored);
}

TEST_CASE("tolerance stops the run early") {
  const Image truth = oracle::pattern_image(32, 32);
  const auto mask = jsm::make_random_mask(32, 32, 0.6, 2);
  auto p = jsm::default_params(2.5e-3, 200, jsm::NlsmParams{4, 2, 12, 4});
  p.tol = 1e-2;
  const auto res = jsm::run({jsm::apply_mask(truth, mask), mask}, p);
  CHECK(res.iterations < 200);
  CHECK(res.iterations >= 1);
}

TEST_CASE("zero nonlocal weight leaves a TV-only solver") {
  const Image truth = oracle::pattern_image(32, 32);
  const auto mask = jsm::make_random_mask(32, 32, 0.5, 4);
  auto p = jsm::default_params(2.5e-3, 10);
  p.lambda = 0.0;
  const auto res = jsm::run({jsm::apply_mask(truth, mask), mask}, p, &truth);
  CHECK(std::isfinite(*res.telemetry.back().psnr_db));
  CHECK(res.telemetry.back().residual_ux == 0.0);
}

TEST_CASE("solver rejects inconsistent inputs") {
  const auto mask = jsm::make_random_mask(8, 8, 0.5, 1);
  CHECK_THROWS(jsm::Solver({Image(9, 8), mask}, jsm::default_params(1e-3, 1)));
}
