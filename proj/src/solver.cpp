#include "jsm/solver.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

namespace jsm {

void SolverParams::validate() const {
  if (!(mu_tilde > 0.0 && mu1 > 0.0 && mu2 > 0.0)) throw std::invalid_argument("mu parameters must be positive");
  if (std::abs(mu1 + mu2 - mu_tilde) > 1e-12 * std::max(1.0, mu_tilde))
    throw std::invalid_argument("mu1 + mu2 must equal mu_tilde");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
  if (lsm_inner_iters < 1) throw std::invalid_argument("lsm_inner_iters must be positive");
  if (tol < 0.0) throw std::invalid_argument("tol must be nonnegative");
  nlsm.validate();
}

SolverParams default_params(double mu_tilde, int max_iters, const NlsmParams& nlsm) {
  if (!(mu_tilde > 0.0)) throw std::invalid_argument("mu_tilde must be positive");
  SolverParams p;
  p.mu_tilde = mu_tilde;
  p.mu1 = 0.14 * mu_tilde;
  p.mu2 = mu_tilde - p.mu1;
  p.tau = 10.0 * p.mu1;
  p.lambda = 10.0 * p.mu2;
  p.max_iters = max_iters;
  p.nlsm = nlsm;
  return p;
}

namespace {

// mu1 (w + b) + mu2 (x + c)
Image splitting_term(const Image& w, const Image& x, const Image& b, const Image& c, const SolverParams& p) {
  Image q(w.width(), w.height());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = p.mu1 * (w[i] + b[i]) + p.mu2 * (x[i] + c[i]);
  return q;
}

double norm_diff(const Image& a, const Image& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

void require_finite(const Image& img, const char* name, int iter) {
  if (!img.all_finite())
    throw NumericalError("non-finite value in " + std::string(name) + " at iteration " + std::to_string(iter));
}

}  // namespace

SolverState initial_state(const Observation& obs, const Image* initial) {
  const int w = obs.y.width(), h = obs.y.height();
  SolverState s;
  s.u = obs.y;
  s.w = Image(w, h);
  s.x = Image(w, h);
  s.b = Image(w, h);
  s.c = Image(w, h);
  if (initial && !initial->empty()) {
    if (!initial->same_shape(obs.y)) throw std::invalid_argument("initial estimate has the wrong size");
    s.u = *initial;
    s.w = *initial;
    s.x = *initial;
  }
  return s;
}

Image u_step_inpaint(const Image& y, const PixelMask& mask, const Image& w, const Image& x, const Image& b,
                     const Image& c, const SolverParams& params) {
  if (!mask.same_shape(y)) throw std::invalid_argument("mask does not match observation");
  Image u = splitting_term(w, x, b, c, params);
  const double observed = 1.0 / (1.0 + params.mu_tilde);
  const double missing = 1.0 / params.mu_tilde;
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = mask.keep[i] ? (u[i] + y[i]) * observed : u[i] * missing;
  return u;
}

BlurOperator::BlurOperator(const BlurKernel& kernel, int width, int height)
    : width_(width), height_(height), fft_(width, height) {
  response_ = fft_.forward(centered_psf(kernel, width, height));
}

Image BlurOperator::solve(const Image& y, const Image& qprime, double mu_tilde) {
  if (y.width() != width_ || y.height() != height_ || !qprime.same_shape(y))
    throw std::invalid_argument("blur operator size mismatch");
  const Spectrum ys = fft_.forward(y.data());
  Spectrum qs = fft_.forward(qprime.data());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const auto d = response_[i];
    qs[i] = (std::conj(d) * ys[i] + qs[i]) / (std::norm(d) + mu_tilde);
  }
  return Image(width_, height_, fft_.inverse(qs));
}

Image u_step_deblur(const Image& y, const BlurKernel& kernel, const Image& w, const Image& x, const Image& b,
                    const Image& c, const SolverParams& params) {
  BlurOperator op(kernel, y.width(), y.height());
  return op.solve(y, splitting_term(w, x, b, c, params), params.mu_tilde);
}

Solver::Solver(Observation obs, SolverParams params) : obs_(std::move(obs)), params_(std::move(params)) {
  params_.validate();
  if (const auto* k = std::get_if<BlurKernel>(&obs_.op)) blur_.emplace(*k, obs_.y.width(), obs_.y.height());
  if (const auto* m = std::get_if<PixelMask>(&obs_.op); m && !m->same_shape(obs_.y))
    throw std::invalid_argument("mask does not match observation");
}

Image Solver::u_step(const SolverState& s) {
  if (blur_) return blur_->solve(obs_.y, splitting_term(s.w, s.x, s.b, s.c, params_), params_.mu_tilde);
  if (const auto* m = std::get_if<PixelMask>(&obs_.op)) return u_step_inpaint(obs_.y, *m, s.w, s.x, s.b, s.c, params_);
  Image u = splitting_term(s.w, s.x, s.b, s.c, params_);
  const double scale = 1.0 / (1.0 + params_.mu_tilde);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = (u[i] + obs_.y[i]) * scale;
  return u;
}

void Solver::step(SolverState& s, const Image* truth) {
  s.u = u_step(s);

  Image p = s.u;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= s.b[i];
  s.w = prox_lsm(p, params_.gamma(), params_.lsm_inner_iters, &s.dual);

  Image r = s.u;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= s.c[i];
  IterationRecord rec;
  if (params_.lambda > 0.0) {
    auto prox = prox_nlsm_detailed(r, params_.alpha(), params_.nlsm, params_.threshold_rule);
    s.x = std::move(prox.x);
    if (params_.diagnostics) {
      const auto diag = variance_diagnostic(s.x, r, prox.plan);
      rec.var_e = diag.var_e;
      rec.var_theta = diag.var_theta;
    }
  } else {
    // Zero nonlocal weight: the prox is the identity.
    s.x = std::move(r);
  }

  for (std::size_t i = 0; i < s.u.size(); ++i) {
    s.b[i] -= s.u[i] - s.w[i];
    s.c[i] -= s.u[i] - s.x[i];
  }
  ++s.k;

  rec.iter = s.k;
  if (truth) rec.psnr_db = psnr(clamped(s.u), *truth);
  rec.residual_uw = norm_diff(s.u, s.w);
  rec.residual_ux = norm_diff(s.u, s.x);
  s.telemetry.push_back(rec);
}

SolverState sbi_step(SolverState state, const Observation& obs, const SolverParams& params, const Image* truth) {
  Solver solver(obs, params);
  solver.step(state, truth);
  return state;
}

RunResult run(const Observation& obs, const SolverParams& params, const Image* truth, const Image* initial) {
  Solver solver(obs, params);
  SolverState s = initial_state(obs, initial);
  for (int it = 0; it < params.max_iters; ++it) {
    const Image prev = s.u;
    solver.step(s, truth);
    require_finite(s.u, "u", s.k);
    require_finite(s.w, "w", s.k);
    require_finite(s.x, "x", s.k);
    require_finite(s.b, "b", s.k);
    require_finite(s.c, "c", s.k);
    if (params.tol > 0.0) {
      double ref = 0.0;
      for (double v : prev.data()) ref += v * v;
      if (norm_diff(s.u, prev) < params.tol * std::sqrt(ref)) break;
    }
  }
  return {clamped(s.u), std::move(s.telemetry), s.k};
}

void write_telemetry_csv(std::ostream& os, const std::vector<IterationRecord>& telemetry) {
  os << "iter,psnr_db,var_e,var_theta,residual_uw,residual_ux\n";
  std::ostringstream line;
  for (const auto& r : telemetry) {
    line.str("");
    line << std::setprecision(10) << r.iter << ',';
    if (r.psnr_db) line << *r.psnr_db;
    line << ',' << r.var_e << ',' << r.var_theta << ',' << r.residual_uw << ',' << r.residual_ux << '\n';
    os << line.str();
  }
}

}  // namespace jsm
