#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mdepth/evaluate.hpp"
#include "mdepth/gradcheck.hpp"
#include "mdepth/io.hpp"
#include "mdepth/patchkernel.hpp"
#include "mdepth/pipeline.hpp"
#include "mdepth/synth.hpp"

namespace fs = std::filesystem;
using namespace mdepth;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataFailure = 2, kNumericFailure = 3 };

int default_threads() {
  if (const char* env = std::getenv("MDEPTH_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    warn(std::string("ignoring MDEPTH_THREADS='") + env + "'");
  }
  return 1;
}

std::string extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::Text: return "txt";
    case ReportFormat::Csv: return "csv";
    case ReportFormat::KeyValue: return "kv";
  }
  return "txt";
}

struct EvalArgs {
  std::string manifest;
  std::string align = "none";
  std::string out;
  std::string format = "txt";
  int jobs = 0;
};

int cmd_eval(const EvalArgs& a) {
  EvalOptions opt;
  opt.align = parse_alignment(a.align);
  opt.jobs = a.jobs > 0 ? a.jobs : default_threads();
  const auto fmt = parse_report_format(a.format);
  const auto manifest = read_manifest(a.manifest);
  const auto report = evaluate_manifest(manifest, opt);

  if (!a.out.empty()) {
    fs::create_directories(a.out);
    std::ofstream per(fs::path(a.out) / ("per_image." + extension(fmt)), std::ios::binary);
    write_per_image(per, report, fmt);
    std::ofstream sum(fs::path(a.out) / ("summary." + extension(fmt)), std::ios::binary);
    write_summary(sum, report, fmt);
    if (!per || !sum) throw Error("eval: cannot write reports to " + a.out);
  }
  write_summary(std::cout, report, fmt);
  for (const auto& f : report.failures) std::cerr << "failed: " << f << "\n";
  if (!report.failures.empty()) {
    std::cerr << report.failures.size() << " of " << manifest.records.size()
              << " records failed\n";
    return kDataFailure;
  }
  return kOk;
}

struct LossArgs {
  std::string pred, gt, rgb, camera, sigma, config, grad_out;
  std::uint64_t seed = 0;
  bool grad = false;
  int threads = 0;
  std::vector<double> lambda;
  std::optional<double> alpha, beta, gamma;
  std::optional<int> patches;
};

int cmd_loss(const LossArgs& a) {
  LossConfig cfg;
  if (!a.config.empty()) {
    const auto bytes = read_file(a.config);
    cfg = parse_loss_config(std::string(bytes.begin(), bytes.end()));
  }
  if (!a.lambda.empty()) {
    if (a.lambda.size() != 3) throw UsageError("--lambda takes three values");
    cfg.weights.lambda = {a.lambda[0], a.lambda[1], a.lambda[2]};
  }
  if (a.alpha) cfg.weights.alpha = *a.alpha;
  if (a.beta) cfg.weights.beta = *a.beta;
  if (a.gamma) cfg.weights.gamma = *a.gamma;
  if (a.patches) cfg.patches.count = *a.patches;

  LossInputs in;
  in.pred = read_depth(a.pred);
  in.gt = read_depth(a.gt);
  in.rgb = read_rgb(a.rgb);
  if (!a.camera.empty()) in.camera = read_camera(a.camera);
  if (!a.sigma.empty()) in.sigma = read_scalar_grid(a.sigma);

  const auto& w = cfg.weights;
  std::printf("weights lambda=(%s,%s,%s) alpha=%s beta=%s gamma=%s\n",
              format_number(w.lambda[0]).c_str(), format_number(w.lambda[1]).c_str(),
              format_number(w.lambda[2]).c_str(), format_number(w.alpha).c_str(),
              format_number(w.beta).c_str(), format_number(w.gamma).c_str());

  const auto result = compute_losses(in, cfg, a.seed, a.threads > 0 ? a.threads : default_threads());
  std::printf("patches %zu\n", result.patch_count);
  for (const auto& c : result.components) {
    std::printf("%-15s %s weight=%s", c.name.c_str(), format_number(c.value).c_str(),
                format_number(c.weight).c_str());
    if (!c.note.empty()) std::printf(" skipped: %s", c.note.c_str());
    std::printf("\n");
  }
  std::printf("%-15s %s\n", "total", format_number(result.total.value).c_str());

  if (a.grad || !a.grad_out.empty()) {
    for (const auto& [name, g] : result.total.grads) {
      double sq = 0.0;
      for (double v : g.storage()) sq += v * v;
      std::printf("grad %-10s l2=%s\n", name.c_str(), format_number(std::sqrt(sq)).c_str());
      if (!a.grad_out.empty()) {
        fs::create_directories(a.grad_out);
        write_scalar_grid(g, fs::path(a.grad_out) / ("grad_" + name + ".dkf"));
      }
    }
  }
  return std::isfinite(result.total.value) ? kOk : kNumericFailure;
}

int cmd_gradcheck(const GradcheckConfig& cfg) {
  bool ok = true;
  for (const auto& e : run_gradcheck(cfg)) {
    std::printf("%-15s max_rel_error=%.3e instances=%d %s\n", e.loss.c_str(), e.max_rel_error,
                e.instances, e.passed ? "PASS" : "FAIL");
    ok &= e.passed;
  }
  return ok ? kOk : kNumericFailure;
}

int cmd_synth(const SynthOptions& opt, const std::string& out) {
  const auto manifest = write_synthetic_dataset(out, opt);
  std::printf("wrote %zu scenes to %s (max_depth %s)\n", manifest.records.size(), out.c_str(),
              format_number(manifest.max_depth).c_str());
  return kOk;
}

int cmd_bench(BenchConfig cfg, const std::string& out) {
  for (auto& t : cfg.threads) t = resolve_threads(t);
  const auto rows = bench_kernel(cfg);
  if (out.empty()) {
    write_bench_report(std::cout, rows);
  } else {
    std::ofstream os(out, std::ios::binary);
    write_bench_report(os, rows);
    if (!os) throw Error("bench: cannot write " + out);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metric depth geometry, loss and evaluation tools"};
  app.require_subcommand(1);

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a prediction set listed in a manifest");
  e->add_option("--manifest", eval.manifest, "Manifest TSV")->required()->check(CLI::ExistingFile);
  e->add_option("--align", eval.align, "none | median | ssi")
      ->check(CLI::IsMember({"none", "median", "ssi"}));
  e->add_option("--out", eval.out, "Directory for per-image and summary reports");
  e->add_option("--format", eval.format, "txt | csv | kv")->check(CLI::IsMember({"txt", "csv", "kv"}));
  e->add_option("--jobs", eval.jobs, "Parallel records (default: MDEPTH_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  LossArgs loss;
  auto* l = app.add_subcommand("loss", "Print the training loss breakdown for one image");
  l->add_option("--pred", loss.pred, "Predicted depth")->required()->check(CLI::ExistingFile);
  l->add_option("--gt", loss.gt, "Ground-truth depth")->required()->check(CLI::ExistingFile);
  l->add_option("--rgb", loss.rgb, "RGB image (PNG)")->required()->check(CLI::ExistingFile);
  l->add_option("--camera", loss.camera, "Camera JSON")->check(CLI::ExistingFile);
  l->add_option("--sigma", loss.sigma, "Uncertainty grid (RAWF32)")->check(CLI::ExistingFile);
  l->add_option("--config", loss.config, "Loss config JSON")->check(CLI::ExistingFile);
  l->add_option("--seed", loss.seed, "Patch selection and view sampling seed");
  l->add_flag("--grad", loss.grad, "Print gradient norms");
  l->add_option("--grad-out", loss.grad_out, "Write gradients as RAWF32 into this directory");
  l->add_option("--threads", loss.threads, "Patch kernel threads")->check(CLI::PositiveNumber);
  l->add_option("--lambda", loss.lambda, "Override lambda (theta phi z_log)")->expected(3);
  l->add_option("--alpha", loss.alpha, "Override consistency weight");
  l->add_option("--beta", loss.beta, "Override edge-guided SSI weight");
  l->add_option("--gamma", loss.gamma, "Override uncertainty weight");
  l->add_option("--patches", loss.patches, "Override patch count")->check(CLI::NonNegativeNumber);

  GradcheckConfig gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of every loss gradient");
  g->add_option("--seed", gc.seed);
  g->add_option("--tol", gc.tolerance)->check(CLI::PositiveNumber);
  g->add_option("--step", gc.step)->check(CLI::PositiveNumber);
  g->add_option("--instances", gc.instances)->check(CLI::PositiveNumber);
  g->add_flag("--flip-sign", gc.flip_sign, "Negate analytic gradients (should fail)");

  SynthOptions so;
  std::string synth_out;
  bool no_sigma = false;
  auto* s = app.add_subcommand("synth", "Render a synthetic evaluation dataset");
  s->add_option("--scenes", so.scenes)->check(CLI::PositiveNumber);
  s->add_option("--out", synth_out)->required();
  s->add_option("--seed", so.seed);
  s->add_option("--width", so.width)->check(CLI::PositiveNumber);
  s->add_option("--height", so.height)->check(CLI::PositiveNumber);
  s->add_option("--pred-scale", so.pred_scale, "Predictions are pred-scale * GT")
      ->check(CLI::PositiveNumber);
  s->add_flag("--no-uncertainty", no_sigma, "Do not write uncertainty maps");

  BenchConfig bc;
  bc.threads = {0};
  std::string bench_out;
  auto* b = app.add_subcommand("bench", "Time the patch kernel");
  b->add_option("--sizes", bc.sizes, "Patch sizes")->check(CLI::PositiveNumber);
  b->add_option("--counts", bc.counts, "Patch counts")->check(CLI::NonNegativeNumber);
  b->add_option("--threads", bc.threads, "Thread counts (0 = default)");
  b->add_option("--repeats", bc.repeats)->check(CLI::PositiveNumber);
  b->add_option("--grid", bc.grid_width, "Square grid side")->check(CLI::PositiveNumber);
  b->add_option("--seed", bc.seed);
  b->add_option("--out", bench_out, "CSV output (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*e) return cmd_eval(eval);
    if (*l) return cmd_loss(loss);
    if (*g) return cmd_gradcheck(gc);
    if (*s) {
      so.write_uncertainty = !no_sigma;
      return cmd_synth(so, synth_out);
    }
    if (*b) {
      bc.grid_height = bc.grid_width;
      return cmd_bench(bc, bench_out);
    }
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kUsage;
  } catch (const DomainError& err) {
    std::cerr << "numeric error: " << err.what() << "\n";
    return kNumericFailure;
  } catch (const DegenerateInputError& err) {
    std::cerr << "numeric error: " << err.what() << "\n";
    return kNumericFailure;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kDataFailure;
  }
  return kUsage;
}
