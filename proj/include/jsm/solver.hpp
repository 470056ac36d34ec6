#pragma once

#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "jsm/degrade.hpp"
#include "jsm/image.hpp"
#include "jsm/lsm.hpp"
#include "jsm/nlsm.hpp"

namespace jsm {

struct IdentityOp {};

/// H in y = Hx + n: identity, 0/1 sampling mask, or circular blur.
using DegradationOperator = std::variant<IdentityOp, PixelMask, BlurKernel>;

struct Observation {
  Image y;
  DegradationOperator op;
};

struct SolverParams {
  double mu_tilde = 1.0;
  double mu1 = 0.14;
  double mu2 = 0.86;
  double tau = 1.4;
  double lambda = 8.6;
  int max_iters = 100;
  int lsm_inner_iters = 10;
  NlsmParams nlsm;
  ThresholdRule threshold_rule = ThresholdRule::SqrtTwoRho;
  /// Stop early once ||u_k+1 - u_k|| / ||u_k|| < tol. 0 disables.
  double tol = 0.0;
  /// Record var_e / var_theta each iteration (one extra transform pass).
  bool diagnostics = true;

  double gamma() const { return tau / mu1; }
  double alpha() const { return lambda / mu2; }
  void validate() const;
};

/// mu1 = 0.14 mu~, mu2 = 0.86 mu~, tau = 10 mu1, lambda = 10 mu2.
SolverParams default_params(double mu_tilde, int max_iters, const NlsmParams& nlsm = {});

struct IterationRecord {
  int iter = 0;
  std::optional<double> psnr_db;
  double var_e = 0.0;
  double var_theta = 0.0;
  double residual_uw = 0.0;  // ||u - w||_2
  double residual_ux = 0.0;  // ||u - x||_2
};

struct SolverState {
  Image u, w, x, b, c;
  TvDual dual;
  int k = 0;
  std::vector<IterationRecord> telemetry;
};

/// u(0) = y, everything else zero. A non-empty `initial` replaces u(0) and
/// also seeds w(0) = x(0), so the first u-step is pulled toward it.
SolverState initial_state(const Observation& obs, const Image* initial = nullptr);

/// Closed-form u-step for a sampling mask: observed pixels q/(1+mu~),
/// missing pixels q/mu~, with q = H^T y + mu1 (w+b) + mu2 (x+c).
Image u_step_inpaint(const Image& y, const PixelMask& mask, const Image& w, const Image& x, const Image& b,
                     const Image& c, const SolverParams& params);

/// Precomputed frequency response of a blur operator on a fixed grid.
class BlurOperator {
 public:
  BlurOperator(const BlurKernel& kernel, int width, int height);
  /// (H^T H + mu~ I)^{-1} q with q = H^T y + qprime, H^T y applied as
  /// correlation (conjugate response).
  Image solve(const Image& y, const Image& qprime, double mu_tilde);

 private:
  int width_, height_;
  RealFft2d fft_;
  Spectrum response_;
};

Image u_step_deblur(const Image& y, const BlurKernel& kernel, const Image& w, const Image& x, const Image& b,
                    const Image& c, const SolverParams& params);

/// Reusable solver for one observation (caches the blur response).
class Solver {
 public:
  Solver(Observation obs, SolverParams params);

  const Observation& observation() const { return obs_; }
  const SolverParams& params() const { return params_; }

  /// One full split-Bregman iteration; appends a telemetry record.
  void step(SolverState& state, const Image* truth = nullptr);

 private:
  Image u_step(const SolverState& s);

  Observation obs_;
  SolverParams params_;
  std::optional<BlurOperator> blur_;
};

SolverState sbi_step(SolverState state, const Observation& obs, const SolverParams& params,
                     const Image* truth = nullptr);

struct RunResult {
  Image restored;  // final u clamped to [0,255]
  std::vector<IterationRecord> telemetry;
  int iterations = 0;
};

/// Runs up to params.max_iters iterations. Throws NumericalError naming the
/// iteration and buffer if any iterate becomes non-finite.
RunResult run(const Observation& obs, const SolverParams& params, const Image* truth = nullptr,
              const Image* initial = nullptr);

/// iter,psnr_db,var_e,var_theta,residual_uw,residual_ux
void write_telemetry_csv(std::ostream& os, const std::vector<IterationRecord>& telemetry);

}  // namespace jsm
