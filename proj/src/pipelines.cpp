#include "jsm/pipelines.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace jsm {

Task parse_task(const std::string& name) {
  if (name == "inpaint") return Task::Inpaint;
  if (name == "text") return Task::TextRemoval;
  if (name == "deblur") return Task::Deblur;
  if (name == "mixed") return Task::MixedNoise;
  throw std::invalid_argument("unknown task '" + name + "' (expected inpaint|text|deblur|mixed)");
}

std::string to_string(Task task) {
  switch (task) {
    case Task::Inpaint: return "inpaint";
    case Task::TextRemoval: return "text";
    case Task::Deblur: return "deblur";
    case Task::MixedNoise: return "mixed";
  }
  return "?";
}

void ExperimentSpec::validate() const {
  switch (task) {
    case Task::Inpaint:
      if (!ratio) throw std::invalid_argument("inpaint requires a sampling ratio");
      if (!(*ratio > 0.0 && *ratio <= 1.0)) throw std::invalid_argument("ratio must lie in (0,1]");
      break;
    case Task::TextRemoval:
      if (!mask_path) throw std::invalid_argument("text removal requires a mask path");
      break;
    case Task::Deblur:
      if (!kernel || !sigma) throw std::invalid_argument("deblur requires a kernel and sigma");
      if (*sigma < 0.0) throw std::invalid_argument("sigma must be nonnegative");
      break;
    case Task::MixedNoise:
      if (!sigma || !impulse_r) throw std::invalid_argument("mixed noise requires sigma and impulse density");
      if (*sigma < 0.0) throw std::invalid_argument("sigma must be nonnegative");
      if (!(*impulse_r >= 0.0 && *impulse_r < 1.0)) throw std::invalid_argument("impulse density must lie in [0,1)");
      break;
  }
  if (!(mu_tilde > 0.0)) throw std::invalid_argument("mu_tilde must be positive");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
}

double default_mu_tilde(Task task) {
  switch (task) {
    case Task::Inpaint: return 2.5e-3;
    case Task::TextRemoval: return 2.5e-3;
    case Task::Deblur: return 2e-3;
    case Task::MixedNoise: return 1e-1;
  }
  return 2.5e-3;
}

ThresholdRule default_threshold_rule(Task task) {
  switch (task) {
    case Task::Inpaint:
    case Task::TextRemoval:
    case Task::MixedNoise: return ThresholdRule::SqrtTwoRho;
    case Task::Deblur: return ThresholdRule::SqrtTwoAlpha;
  }
  return ThresholdRule::SqrtTwoRho;
}

double bsnr_to_sigma(const Image& blurred, double bsnr_db) {
  if (!std::isfinite(bsnr_db)) return 0.0;
  double mean = 0.0;
  for (double v : blurred.data()) mean += v;
  mean /= static_cast<double>(blurred.size());
  double var = 0.0;
  for (double v : blurred.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(blurred.size());
  return std::sqrt(var / std::pow(10.0, bsnr_db / 10.0));
}

SolverParams solver_params_for(const ExperimentSpec& spec) {
  SolverParams p = default_params(spec.mu_tilde, spec.max_iters, spec.solver.nlsm);
  p.lsm_inner_iters = spec.solver.lsm_inner_iters;
  p.threshold_rule = spec.solver.threshold_rule;
  p.tol = spec.solver.tol;
  p.diagnostics = spec.solver.diagnostics;
  if (spec.tv_only) p.lambda = 0.0;
  return p;
}

Degradation degrade(const ExperimentSpec& spec, const Image& clean) {
  spec.validate();
  Degradation d;
  switch (spec.task) {
    case Task::Inpaint:
      d.mask = make_random_mask(clean.width(), clean.height(), *spec.ratio, spec.seed);
      d.observed = apply_mask(clean, *d.mask);
      break;
    case Task::TextRemoval: {
      const Image mask_img = load_image(*spec.mask_path);
      if (!mask_img.same_shape(clean)) throw std::invalid_argument("text mask dimensions do not match the image");
      d.mask = mask_from_image(mask_img, 128.0);
      d.observed = apply_mask(clean, *d.mask);
      break;
    }
    case Task::Deblur: {
      const BlurKernel k = make_kernel(*spec.kernel);
      d.observed = add_gaussian_noise(circular_convolve(clean, k), *spec.sigma, derive_seed(spec.seed, 0));
      d.op = k;
      return d;
    }
    case Task::MixedNoise:
      d.observed = add_salt_pepper(add_gaussian_noise(clean, *spec.sigma, derive_seed(spec.seed, 0)),
                                   *spec.impulse_r, derive_seed(spec.seed, 1));
      d.mask = adaptive_median_detect(d.observed, spec.amf_max_window);
      if (d.mask->kept() == 0) throw std::runtime_error("impulse detector flagged every pixel");
      break;
  }
  d.op = *d.mask;
  return d;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const Image& clean) {
  const auto start = std::chrono::steady_clock::now();
  Degradation d = degrade(spec, clean);
  ExperimentResult res;
  res.clean = clean;
  res.degraded = std::move(d.observed);
  res.psnr_degraded = psnr(res.degraded, clean);
  auto out = run(Observation{res.degraded, std::move(d.op)}, solver_params_for(spec), &clean);
  res.restored = std::move(out.restored);
  res.telemetry = std::move(out.telemetry);
  res.psnr_restored = psnr(res.restored, clean);
  res.mask = std::move(d.mask);
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

namespace {

ExperimentResult run_as(Task task, const ExperimentSpec& spec, const Image& clean) {
  if (spec.task != task) throw std::invalid_argument("spec task is " + to_string(spec.task) + ", expected " + to_string(task));
  return run_experiment(spec, clean);
}

}  // namespace

ExperimentResult run_inpaint(const ExperimentSpec& spec, const Image& clean) { return run_as(Task::Inpaint, spec, clean); }
ExperimentResult run_text_removal(const ExperimentSpec& spec, const Image& clean) {
  return run_as(Task::TextRemoval, spec, clean);
}
ExperimentResult run_deblur(const ExperimentSpec& spec, const Image& clean) { return run_as(Task::Deblur, spec, clean); }
ExperimentResult run_mixed_noise(const ExperimentSpec& spec, const Image& clean) {
  return run_as(Task::MixedNoise, spec, clean);
}

ExperimentResult run_experiment(const ExperimentSpec& spec) { return run_experiment(spec, load_image(spec.input)); }

std::string summary_json(const ExperimentSpec& spec, const ExperimentResult& result) {
  nlohmann::ordered_json params;
  params["mu_tilde"] = spec.mu_tilde;
  params["max_iters"] = spec.max_iters;
  params["seed"] = spec.seed;
  if (spec.ratio) params["ratio"] = *spec.ratio;
  if (spec.mask_path) params["mask"] = spec.mask_path->string();
  if (spec.kernel) params["kernel"] = to_string(*spec.kernel);
  if (spec.sigma) params["sigma"] = *spec.sigma;
  if (spec.impulse_r) params["impulse_r"] = *spec.impulse_r;
  params["block"] = spec.solver.nlsm.block;
  params["stride"] = spec.solver.nlsm.stride;
  params["window"] = spec.solver.nlsm.window;
  params["group_size"] = spec.solver.nlsm.group_size;
  params["lsm_iters"] = spec.solver.lsm_inner_iters;
  params["threshold_rule"] = to_string(spec.solver.threshold_rule);
  if (spec.tv_only) params["tv_only"] = true;

  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
  nlohmann::ordered_json j;
  j["task"] = to_string(spec.task);
  j["image"] = spec.input.filename().string();
  j["params"] = params;
  j["psnr_degraded"] = finite_or_null(result.psnr_degraded);
  j["psnr_restored"] = finite_or_null(result.psnr_restored);
  j["wall_seconds"] = result.wall_seconds;
  return j.dump();
}

}  // namespace jsm
