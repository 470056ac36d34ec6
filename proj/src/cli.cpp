#include "jsm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "jsm/pipelines.hpp"

namespace fs = std::filesystem;

namespace jsm::cli {

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string fmt_psnr(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fmt_real(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

nlohmann::ordered_json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json();
}

// Expands `--config FILE` into flags. Keys already given on the command line
// win; "true"/"false" values toggle bare flags.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::optional<fs::path> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config requires a path");
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (!config) return out;

  std::set<std::string> given;
  for (const auto& a : out)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));

  std::ifstream in(*config);
  if (!in) throw IoError("cannot read config file " + config->string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(config->string() + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw UsageError(config->string() + ":" + std::to_string(lineno) + ": empty key");
    if (given.count(key)) continue;
    if (value == "false") continue;
    out.push_back("--" + key);
    if (value != "true") out.push_back(value);
  }
  return out;
}

struct SolverFlags {
  NlsmParams nlsm;
  int lsm_iters = 10;
  double tol = 0.0;
  std::string threshold_rule = "auto";
  bool tv_only = false;
};

void add_solver_flags(CLI::App* app, SolverFlags& f) {
  app->add_option("--block", f.nlsm.block, "Block side length")->capture_default_str();
  app->add_option("--stride", f.nlsm.stride, "Reference block stride")->capture_default_str();
  app->add_option("--window", f.nlsm.window, "Search window side length")->capture_default_str();
  app->add_option("--group-size", f.nlsm.group_size, "Blocks per group")->capture_default_str();
  app->add_option("--lsm-iters", f.lsm_iters, "FISTA iterations per TV prox")->capture_default_str();
  app->add_option("--tol", f.tol, "Relative change stopping tolerance (0 = off)")->capture_default_str();
  app->add_option("--threshold-rule", f.threshold_rule, "auto | sqrt2rho | sqrt2alpha | rho (auto picks per task)")->capture_default_str();
  app->add_flag("--tv-only", f.tv_only, "Drop the nonlocal term");
}

void apply_solver_flags(const SolverFlags& f, ExperimentSpec& spec) {
  spec.solver.nlsm = f.nlsm;
  spec.solver.lsm_inner_iters = f.lsm_iters;
  spec.solver.tol = f.tol;
  spec.solver.threshold_rule =
      f.threshold_rule == "auto" ? default_threshold_rule(spec.task) : parse_threshold_rule(f.threshold_rule);
  spec.tv_only = f.tv_only;
}

fs::path sibling(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

void write_telemetry(const fs::path& path, const std::vector<IterationRecord>& telemetry) {
  std::ostringstream os;
  write_telemetry_csv(os, telemetry);
  write_text(path, os.str());
}

// degrade ------------------------------------------------------------------

struct DegradeFlags {
  std::string in, out, task, mask, kernel, mask_out;
  double ratio = 0.0, sigma = 0.0, impulse_r = 0.0;
  std::uint64_t seed = 0;
};

int cmd_degrade(const DegradeFlags& f, const CLI::App& app, std::ostream& out) {
  ExperimentSpec spec;
  spec.task = parse_task(f.task);
  spec.input = f.in;
  spec.seed = f.seed;
  if (app.count("--ratio")) spec.ratio = f.ratio;
  if (app.count("--mask")) spec.mask_path = f.mask;
  if (app.count("--kernel")) spec.kernel = parse_kernel_kind(f.kernel);
  if (app.count("--sigma")) spec.sigma = f.sigma;
  if (app.count("--impulse-r")) spec.impulse_r = f.impulse_r;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const Image clean = load_image(spec.input);
  const Degradation d = degrade(spec, clean);
  save_image(d.observed, f.out);
  if (d.mask && spec.task != Task::TextRemoval) {
    const fs::path mask_path = f.mask_out.empty() ? sibling(f.out, "_mask.png") : fs::path(f.mask_out);
    save_image(mask_to_image(*d.mask), mask_path);
    out << "mask " << mask_path.string() << " keeps " << d.mask->kept() << " of " << d.mask->size() << "\n";
  }
  out << "degraded PSNR " << fmt_psnr(psnr(d.observed, clean)) << " dB\n";
  return kOk;
}

// restore ------------------------------------------------------------------

struct RestoreFlags {
  std::string in, out, mask, kernel, truth, telemetry, summary;
  double sigma = 0.0;
  double mu_tilde = 0.0;
  int iters = 0;
  SolverFlags solver;
};

int cmd_restore(const RestoreFlags& f, const CLI::App& app, std::ostream& out) {
  const bool has_mask = app.count("--mask") > 0;
  const bool has_kernel = app.count("--kernel") > 0;
  if (has_mask == has_kernel) throw UsageError("restore needs exactly one of --mask or --kernel");
  if (!(f.mu_tilde > 0.0)) throw UsageError("--mu-tilde must be positive");
  if (f.iters < 0) throw UsageError("--iters must be nonnegative");

  ExperimentSpec spec;
  spec.task = has_mask ? Task::Inpaint : Task::Deblur;
  spec.mu_tilde = f.mu_tilde;
  spec.max_iters = f.iters;
  apply_solver_flags(f.solver, spec);
  SolverParams params;
  try {
    params = solver_params_for(spec);
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto start = std::chrono::steady_clock::now();
  const Image y = load_image(f.in);
  Observation obs{y, IdentityOp{}};
  std::string task;
  if (has_mask) {
    const Image m = load_image(f.mask);
    if (!m.same_shape(y)) throw UsageError("mask dimensions do not match the input");
    obs.op = mask_from_image(m, 128.0);
    task = "inpaint";
  } else {
    obs.op = make_kernel(parse_kernel_kind(f.kernel));
    task = "deblur";
  }
  std::optional<Image> truth;
  if (!f.truth.empty()) {
    truth = load_image(f.truth);
    if (!truth->same_shape(y)) throw UsageError("truth dimensions do not match the input");
  }

  const RunResult res = run(obs, params, truth ? &*truth : nullptr);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  save_image(res.restored, f.out);
  write_telemetry(f.telemetry.empty() ? sibling(f.out, "_telemetry.csv") : fs::path(f.telemetry), res.telemetry);

  nlohmann::ordered_json p;
  p["mu_tilde"] = f.mu_tilde;
  p["max_iters"] = f.iters;
  p["iterations"] = res.iterations;
  if (has_mask) p["mask"] = f.mask;
  if (has_kernel) p["kernel"] = f.kernel;
  if (app.count("--sigma")) p["sigma"] = f.sigma;
  p["block"] = params.nlsm.block;
  p["stride"] = params.nlsm.stride;
  p["window"] = params.nlsm.window;
  p["group_size"] = params.nlsm.group_size;
  p["lsm_iters"] = params.lsm_inner_iters;
  p["threshold_rule"] = to_string(params.threshold_rule);
  if (spec.tv_only) p["tv_only"] = true;
  p["tol"] = params.tol;
  nlohmann::ordered_json j;
  j["task"] = task;
  j["image"] = fs::path(f.in).filename().string();
  j["params"] = p;
  j["psnr_degraded"] = truth ? finite_or_null(psnr(y, *truth)) : nlohmann::ordered_json();
  j["psnr_restored"] = truth ? finite_or_null(psnr(res.restored, *truth)) : nlohmann::ordered_json();
  j["wall_seconds"] = wall;
  const std::string line = j.dump();
  write_text(f.summary.empty() ? sibling(f.out, "_summary.json") : fs::path(f.summary), line + "\n");
  out << line << "\n";
  return kOk;
}

// bench --------------------------------------------------------------------

struct Setting {
  std::string label;
  int iters = 0;
  std::function<void(ExperimentSpec&)> apply;
};

std::vector<Setting> suite_settings(Task task) {
  std::vector<Setting> s;
  switch (task) {
    case Task::Inpaint: {
      const std::pair<double, int> rows[] = {{0.2, 400}, {0.3, 350}, {0.5, 250}, {0.8, 100}};
      for (auto [ratio, iters] : rows)
        s.push_back({"ratio=" + std::to_string(static_cast<int>(std::lround(ratio * 100))) + "%", iters,
                     [ratio](ExperimentSpec& e) { e.ratio = ratio; }});
      break;
    }
    case Task::TextRemoval:
      s.push_back({"text", 250, [](ExperimentSpec&) {}});
      break;
    case Task::Deblur:
      for (KernelKind k : {KernelKind::Uniform9, KernelKind::Gaussian25_1p6, KernelKind::Motion20_45})
        s.push_back({to_string(k) + " sigma=0.5", 300, [k](ExperimentSpec& e) {
                       e.kernel = k;
                       e.sigma = 0.5;
                     }});
      break;
    case Task::MixedNoise:
      for (double r : {0.4, 0.5})
        s.push_back({"r=" + std::to_string(static_cast<int>(std::lround(r * 100))) + "% sigma=10", 300,
                     [r](ExperimentSpec& e) {
                       e.sigma = 10.0;
                       e.impulse_r = r;
                     }});
      break;
  }
  return s;
}

std::vector<double> parse_sweep(const std::string& text) {
  const std::string prefix = "mu_tilde=";
  if (text.rfind(prefix, 0) != 0) throw UsageError("--sweep expects mu_tilde=a,b,c");
  std::vector<double> values;
  std::stringstream ss(text.substr(prefix.size()));
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !(v > 0.0)) throw UsageError("bad mu_tilde value '" + item + "'");
    values.push_back(v);
  }
  if (values.empty()) throw UsageError("--sweep lists no values");
  return values;
}

std::string safe_label(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-') c = '_';
  return s;
}

struct BenchFlags {
  std::string suite, images, out, masks, sweep;
  int iters = -1;
  std::uint64_t seed = 0;
  SolverFlags solver;
};

struct BenchRow {
  std::string image;
  std::size_t setting = 0;
  std::string label;
  double mu_tilde = 0.0;
  double degraded = 0.0;
  double restored = 0.0;
};

int cmd_bench(const BenchFlags& f, std::ostream& out) {
  const Task task = parse_task(f.suite);
  if (!fs::is_directory(f.images)) throw IoError("image directory " + f.images + " does not exist");
  std::vector<fs::path> images;
  for (const auto& entry : fs::directory_iterator(f.images)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".pgm") images.push_back(entry.path());
  }
  if (images.empty()) throw UsageError("no .png/.pgm images in " + f.images);
  std::sort(images.begin(), images.end());

  const bool sweeping = !f.sweep.empty();
  const std::vector<double> mus = sweeping ? parse_sweep(f.sweep) : std::vector<double>{default_mu_tilde(task)};
  const fs::path masks = f.masks.empty() ? fs::path(f.images) / "masks" : fs::path(f.masks);
  const fs::path root = fs::path(f.out) / to_string(task);
  fs::create_directories(root);

  std::vector<BenchRow> rows;
  const auto settings = suite_settings(task);
  for (const auto& img_path : images) {
    const Image clean = load_image(img_path);
    for (std::size_t si = 0; si < settings.size(); ++si) {
      for (double mu : mus) {
        ExperimentSpec spec;
        spec.task = task;
        spec.input = img_path;
        spec.seed = f.seed;
        spec.mu_tilde = mu;
        spec.max_iters = f.iters >= 0 ? f.iters : settings[si].iters;
        apply_solver_flags(f.solver, spec);
        settings[si].apply(spec);
        if (task == Task::TextRemoval)
          spec.mask_path =
              masks / ("text_" + std::to_string(clean.width()) + "x" + std::to_string(clean.height()) + ".png");

        const ExperimentResult res = run_experiment(spec, clean);
        std::string dir = img_path.stem().string() + "_" + safe_label(settings[si].label);
        if (sweeping) dir += "_mu" + fmt_real(mu);
        const fs::path run_dir = root / dir;
        fs::create_directories(run_dir);
        save_image(res.degraded, run_dir / "degraded.png");
        save_image(res.restored, run_dir / "restored.png");
        if (res.mask) save_image(mask_to_image(*res.mask), run_dir / "mask.png");
        write_telemetry(run_dir / "telemetry.csv", res.telemetry);
        write_text(run_dir / "summary.json", summary_json(spec, res) + "\n");
        rows.push_back({img_path.filename().string(), si, settings[si].label, mu, res.psnr_degraded, res.psnr_restored});
        out << img_path.filename().string() << " " << settings[si].label << (sweeping ? " mu_tilde=" + fmt_real(mu) : "")
            << ": " << fmt_psnr(res.psnr_degraded) << " -> " << fmt_psnr(res.psnr_restored) << " dB\n";
      }
    }
  }

  std::sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tie(a.image, a.setting, a.mu_tilde) < std::tie(b.image, b.setting, b.mu_tilde);
  });
  std::ostringstream md, csv;
  md << "| Image | Setting |" << (sweeping ? " mu_tilde |" : "") << " Degraded PSNR | Restored PSNR |\n";
  md << "|---|---|" << (sweeping ? "---|" : "") << "---|---|\n";
  csv << "Image,Setting," << (sweeping ? "mu_tilde," : "") << "Degraded PSNR,Restored PSNR\n";
  for (const auto& r : rows) {
    md << "| " << r.image << " | " << r.label << " |" << (sweeping ? " " + fmt_real(r.mu_tilde) + " |" : "") << " "
       << fmt_psnr(r.degraded) << " | " << fmt_psnr(r.restored) << " |\n";
    csv << r.image << "," << r.label << "," << (sweeping ? fmt_real(r.mu_tilde) + "," : "") << fmt_psnr(r.degraded)
        << "," << fmt_psnr(r.restored) << "\n";
  }
  write_text(fs::path(f.out) / (to_string(task) + ".md"), md.str());
  write_text(fs::path(f.out) / (to_string(task) + ".csv"), csv.str());
  return kOk;
}

// metrics ------------------------------------------------------------------

int cmd_metrics(const std::string& a, const std::string& b, std::ostream& out) {
  const Image ia = load_image(a);
  const Image ib = load_image(b);
  if (!ia.same_shape(ib)) throw UsageError("image dimensions differ");
  out << fmt_psnr(psnr(ia, ib)) << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image restoration with joint local/nonlocal statistical modeling", "jsm"};
  app.require_subcommand(1);

  DegradeFlags df;
  auto* degrade_cmd = app.add_subcommand("degrade", "Synthesize a degraded observation");
  degrade_cmd->add_option("--in", df.in, "Clean input image")->required();
  degrade_cmd->add_option("--out", df.out, "Degraded output image")->required();
  degrade_cmd->add_option("--task", df.task, "inpaint | text | deblur | mixed")->required();
  degrade_cmd->add_option("--ratio", df.ratio, "Fraction of pixels kept (inpaint)");
  degrade_cmd->add_option("--mask", df.mask, "Text mask image, 255 = keep (text)");
  degrade_cmd->add_option("--kernel", df.kernel, "uniform9 | uniform19 | gaussian25 | motion20 (deblur)");
  degrade_cmd->add_option("--sigma", df.sigma, "Gaussian noise standard deviation (deblur, mixed)");
  degrade_cmd->add_option("--impulse-r", df.impulse_r, "Salt-and-pepper density (mixed)");
  degrade_cmd->add_option("--seed", df.seed, "Random seed")->capture_default_str();
  degrade_cmd->add_option("--mask-out", df.mask_out, "Where to write the generated mask");

  RestoreFlags rf;
  auto* restore_cmd = app.add_subcommand("restore", "Restore a degraded image");
  restore_cmd->add_option("--in", rf.in, "Degraded input image")->required();
  restore_cmd->add_option("--out", rf.out, "Restored output image")->required();
  restore_cmd->add_option("--mask", rf.mask, "Sampling mask image, 255 = observed");
  restore_cmd->add_option("--kernel", rf.kernel, "Blur kernel name");
  restore_cmd->add_option("--sigma", rf.sigma, "Noise level of the observation (recorded only)");
  restore_cmd->add_option("--mu-tilde", rf.mu_tilde, "Penalty parameter mu~")->required();
  restore_cmd->add_option("--iters", rf.iters, "Maximum iterations")->required();
  restore_cmd->add_option("--truth", rf.truth, "Clean image for PSNR telemetry");
  restore_cmd->add_option("--telemetry", rf.telemetry, "Telemetry CSV path");
  restore_cmd->add_option("--summary", rf.summary, "JSON summary path");
  add_solver_flags(restore_cmd, rf.solver);

  BenchFlags bf;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite over a directory of images");
  bench_cmd->add_option("--suite", bf.suite, "inpaint | text | deblur | mixed")->required();
  bench_cmd->add_option("--images", bf.images, "Directory of clean images")->required();
  bench_cmd->add_option("--out", bf.out, "Output directory")->required();
  bench_cmd->add_option("--masks", bf.masks, "Directory holding text_WxH.png masks");
  bench_cmd->add_option("--iters", bf.iters, "Override the per-setting iteration counts");
  bench_cmd->add_option("--sweep", bf.sweep, "mu_tilde=a,b,c");
  bench_cmd->add_option("--seed", bf.seed, "Random seed")->capture_default_str();
  add_solver_flags(bench_cmd, bf.solver);

  std::string metric_a, metric_b;
  auto* metrics_cmd = app.add_subcommand("metrics", "PSNR between two images");
  metrics_cmd->add_option("--a", metric_a, "First image")->required();
  metrics_cmd->add_option("--b", metric_b, "Second image")->required();

  try {
    std::vector<std::string> args = merge_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);

    if (*degrade_cmd) return cmd_degrade(df, *degrade_cmd, out);
    if (*restore_cmd) return cmd_restore(rf, *restore_cmd, out);
    if (*bench_cmd) return cmd_bench(bf, out);
    if (*metrics_cmd) return cmd_metrics(metric_a, metric_b, out);
    return kUsage;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto chosen = app.get_subcommands();
    err << (chosen.empty() ? app.help() : chosen.front()->help());
    return kUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
}

}  // namespace jsm::cli
