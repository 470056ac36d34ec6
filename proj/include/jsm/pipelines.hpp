#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jsm/degrade.hpp"
#include "jsm/solver.hpp"

namespace jsm {

enum class Task { Inpaint, TextRemoval, Deblur, MixedNoise };

Task parse_task(const std::string& name);
std::string to_string(Task task);

/// One end-to-end experiment on a clean image.
struct ExperimentSpec {
  Task task = Task::Inpaint;
  std::filesystem::path input;
  std::optional<double> ratio;                 // Inpaint
  std::optional<std::filesystem::path> mask_path;  // TextRemoval
  std::optional<KernelKind> kernel;            // Deblur
  std::optional<double> sigma;                 // Deblur, MixedNoise
  std::optional<double> impulse_r;             // MixedNoise
  std::uint64_t seed = 0;
  double mu_tilde = 2.5e-3;
  int max_iters = 100;
  int amf_max_window = 39;
  /// Drop the nonlocal term (lambda = 0), leaving a TV-only solver.
  bool tv_only = false;
  /// Overrides for the solver; mu_tilde and max_iters above win.
  SolverParams solver = default_params(2.5e-3, 100);

  void validate() const;
};

struct ExperimentResult {
  Image clean;
  Image degraded;
  Image restored;
  std::optional<PixelMask> mask;
  std::vector<IterationRecord> telemetry;
  double psnr_degraded = 0.0;
  double psnr_restored = 0.0;
  double wall_seconds = 0.0;
};

/// A synthetic observation and the operator that produced it.
struct Degradation {
  Image observed;
  std::optional<PixelMask> mask;
  DegradationOperator op;
};

/// Applies the spec's degradation to a clean image. Inpaint and text removal
/// zero-fill missing pixels; mixed noise keeps the noisy image and carries
/// the impulse detector's mask.
Degradation degrade(const ExperimentSpec& spec, const Image& clean);

/// Per-task mu~ used by bench and acceptance runs.
double default_mu_tilde(Task task);

/// Per-task NLSM threshold rule: sqrt(2 alpha) for deblurring, the published
/// sqrt(2 rho) everywhere else.
ThresholdRule default_threshold_rule(Task task);

/// sqrt(Var(blurred) / 10^(bsnr/10)), Var taken about the mean.
double bsnr_to_sigma(const Image& blurred, double bsnr_db);

/// Solver parameters for a spec: default_params(mu_tilde, max_iters) with
/// the spec's NLSM/LSM/threshold overrides carried over.
SolverParams solver_params_for(const ExperimentSpec& spec);

ExperimentResult run_inpaint(const ExperimentSpec& spec, const Image& clean);
ExperimentResult run_text_removal(const ExperimentSpec& spec, const Image& clean);
ExperimentResult run_deblur(const ExperimentSpec& spec, const Image& clean);
ExperimentResult run_mixed_noise(const ExperimentSpec& spec, const Image& clean);

/// Loads spec.input and dispatches on spec.task.
ExperimentResult run_experiment(const ExperimentSpec& spec);
ExperimentResult run_experiment(const ExperimentSpec& spec, const Image& clean);

/// {task, image, params, psnr_degraded, psnr_restored, wall_seconds} on one line.
std::string summary_json(const ExperimentSpec& spec, const ExperimentResult& result);

}  // namespace jsm
