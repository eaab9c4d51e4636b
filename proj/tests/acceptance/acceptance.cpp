// One PASS/FAIL/SKIP line per acceptance criterion.
// Exit status: 0 all pass, 1 any failure, 77 nothing failed but something skipped.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mdepth/augment.hpp"
#include "mdepth/geometry.hpp"
#include "mdepth/gradcheck.hpp"
#include "mdepth/io.hpp"
#include "mdepth/losses.hpp"
#include "mdepth/metrics.hpp"
#include "mdepth/patchkernel.hpp"
#include "mdepth/synth.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace mdepth;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

// Collects failed checks; the first few are reported.
class Tally {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (messages_.size() < 3) messages_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failures_ == 0; }
  std::string detail() const {
    std::string out;
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    for (const auto& m : messages_) out += (out.empty() ? "" : "; ") + m;
    if (failures_ > messages_.size()) {
      out += "; +" + std::to_string(failures_ - messages_.size()) + " more";
    }
    return out;
  }

 private:
  std::size_t failures_ = 0;
  std::vector<std::string> messages_;
  std::vector<std::string> notes_;
};

struct Outcome {
  Status status = Status::Pass;
  std::string detail;
};

Outcome from(const Tally& t) { return {t.ok() ? Status::Pass : Status::Fail, t.detail()}; }

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

double rel(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + MDEPTH_CLI + "' " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

double kv_number(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) return std::nan("");
  return std::strtod(it->second.c_str(), nullptr);
}

Outcome check_constants() {
  Tally t;
  Rng rng(101);
  for (int i = 0; i < 1000; ++i) {
    const IntrinsicsResiduals r{uniform(rng, 0.2, 3.0), uniform(rng, 0.2, 3.0),
                                uniform(rng, 0.5, 1.5), uniform(rng, 0.5, 1.5)};
    const int w = 1 + static_cast<int>(uniform_index(rng, 4000));
    const int h = 1 + static_cast<int>(uniform_index(rng, 4000));
    const auto K = intrinsics_from_residuals(r, w, h);
    t.expect(K.fx == r.dfx * w / 2.0 && K.fy == r.dfy * h / 2.0 && K.cx == r.dcx * w / 2.0 &&
                 K.cy == r.dcy * h / 2.0,
             "residual intrinsics not exact");
  }

  const LossWeights w;
  t.expect(w.lambda == std::array<double, 3>{1.0, 1.0, 0.15}, "lambda default");
  t.expect(w.alpha == 0.1 && w.beta == 1.0 && w.gamma == 0.1, "alpha/beta/gamma defaults");

  test::TempDir dir("acc_constants");
  SynthOptions so;
  so.scenes = 1;
  so.width = 48;
  so.height = 36;
  const auto m = write_synthetic_dataset(dir.path(), so);
  const auto& rec = m.records[0];
  const auto echo = run_cli("loss --pred " + q(rec.pred) + " --gt " + q(rec.gt) + " --rgb " +
                            q(rec.rgb));
  t.expect(echo.code == 0 &&
               echo.out.find("weights lambda=(1,1,0.15) alpha=0.1 beta=1 gamma=0.1") !=
                   std::string::npos,
           "CLI does not echo the default weights");

  const auto enc = sine_encode(homogeneous_rays({40.0, 40.0, 16.0, 12.0, 32, 24}));
  t.expect(RayEncoding::channel_count() == 128 && enc.channels.size() == 32u * 24u * 128u,
           "sine encoding is not 128 channels");

  double smin = 1e9, smax = 0, tmax = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto a = sample_augmentation(rng, 640, 480, 448, 336);
    smin = std::min(smin, a.scale);
    smax = std::max(smax, a.scale);
    tmax = std::max({tmax, std::abs(a.tx), std::abs(a.ty)});
  }
  t.expect(smin >= 0.25 && smax <= 4.0, "scale outside 2^[-2,2]");
  t.expect(tmax <= 0.1, "translation outside [-0.1,0.1]");
  double pmin = 1e12, pmax = 0, rmin = 1e9, rmax = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto s = sample_training_shape(rng);
    const double px = static_cast<double>(s.width) * s.height;
    const double r = static_cast<double>(s.width) / s.height;
    pmin = std::min(pmin, px);
    pmax = std::max(pmax, px);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  t.expect(pmin >= 0.2e6 && pmax <= 0.6e6, "training shape outside 0.2-0.6 MP");
  t.expect(rmin >= 0.5 && rmax <= 2.0, "training aspect outside [1/2,2]");
  t.note("scale [" + num(smin) + "," + num(smax) + "], |t|<=" + num(tmax) + ", MP [" +
         num(pmin / 1e6) + "," + num(pmax / 1e6) + "], ratio [" + num(rmin) + "," + num(rmax) +
         "]");
  return from(t);
}

Outcome check_geometry() {
  Tally t;
  Rng rng(202);
  double worst_ray = 0, worst_pt = 0;
  for (int i = 0; i < 100000; ++i) {
    // Forward hemisphere, away from the poles of the elevation chart.
    const Eigen::Vector3d dir =
        Eigen::Vector3d(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 0.05, 2)).normalized();
    const auto ang = ray_to_angles(dir);
    const auto back = angles_to_ray(ang.x(), ang.y());
    worst_ray = std::max(worst_ray, (back - dir).norm());
    const auto ang2 = ray_to_angles(back);
    worst_ray = std::max({worst_ray, rel(ang2.x(), ang.x()), rel(ang2.y(), ang.y())});
  }
  // (angles, depth) -> points -> (angles, depth) on random cameras.
  std::size_t samples = 0;
  while (samples < 100000) {
    const int w = 40, h = 30;
    const Intrinsics K{uniform(rng, 20, 80), uniform(rng, 20, 80), uniform(rng, 10, 30),
                       uniform(rng, 8, 22), w, h};
    const auto angles = camera_angles(K);
    DepthMap depth(w, h, 0.0, true);
    for (auto& v : depth.values.storage()) v = uniform(rng, 0.1, 100.0);
    const auto cloud = backproject(angles, depth);
    const auto ad = project_to_angles_depth(cloud);
    for (std::size_t k = 0; k < cloud.size(); ++k) {
      const auto p = static_cast<std::size_t>(cloud.pixel_index[k]);
      worst_pt = std::max({worst_pt, rel(ad.theta[k], angles.theta[p]),
                           rel(ad.phi[k], angles.phi[p]), rel(ad.depth[k], depth.values[p])});
    }
    samples += cloud.size();
  }
  t.expect(worst_ray <= 1e-9, "ray/angle roundtrip " + num(worst_ray));
  t.expect(worst_pt <= 1e-9, "point roundtrip " + num(worst_pt));
  double worst_fov = 0;
  for (int i = 0; i < 20; ++i) {
    const Intrinsics K{uniform(rng, 100, 600), uniform(rng, 100, 600), uniform(rng, 100, 220),
                       uniform(rng, 80, 160), 320, 240};
    for (double k : {2.0, 4.0}) worst_fov = std::max(worst_fov, angles_fov_check(K, K.scaled(k)));
  }
  t.expect(worst_fov <= 1e-6, "fov invariance " + num(worst_fov) + " rad");
  t.note("rays " + num(worst_ray) + ", points " + num(worst_pt) + ", fov " + num(worst_fov) +
         " rad");
  return from(t);
}

Outcome check_silog() {
  Tally t;
  Rng rng(303);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 199));
    auto p = test::random_grid(rng, n, 1, -3, 3);
    auto g = test::random_grid(rng, n, 1, -3, 3);
    const ValidityMask mask(n, 1, 1);
    double s1 = 0, s2 = 0;
    for (int k = 0; k < n; ++k) {
      const double d = p[k] - g[k];
      s1 += d;
      s2 += d * d;
    }
    const double mean = s1 / n, mean_sq = s2 / n;
    const double expected = mean_sq - 0.85 * mean * mean;
    const double got = lambda_mse_channel(p, g, mask, 0.15, false).value;
    worst = std::max(worst, std::abs(got - expected));
  }
  t.expect(worst <= 1e-12, "max |diff| " + num(worst));
  t.note("max |diff| " + num(worst));
  return from(t);
}

Outcome check_gradients() {
  Tally t;
  GradcheckConfig cfg;
  cfg.tolerance = 1e-4;
  cfg.step = 1e-5;
  cfg.instances = 50;
  for (const auto& e : run_gradcheck(cfg)) {
    t.note(e.loss + " " + num(e.max_rel_error));
    t.expect(e.passed && e.instances == 50 && e.max_rel_error <= 1e-4, e.loss + " failed");
  }
  return from(t);
}

Outcome check_eg_ssi() {
  Tally t;
  Rng rng(404);
  // Disjoint 8x8 patches, each with its own positive affine map of the prediction.
  double worst_affine = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int side = 64;
    auto pred = test::random_grid(rng, side, side, 0.05, 1.0);
    const auto gt = test::random_grid(rng, side, side, 0.05, 1.0);
    const auto mask = test::random_mask(rng, side, side, 0.9);
    PatchSet set;
    for (int y = 0; y < side; y += 8) {
      for (int x = 0; x < side; x += 8) set.entries.push_back({x + 4, y + 4, 8});
    }
    const auto plan = make_plan(set, side, side);
    const auto before = run_patch_loss(plan, pred, gt, mask, 1, {}, false);
    for (const auto& p : set.entries) {
      const double a = uniform(rng, 0.1, 10.0), b = uniform(rng, -5.0, 5.0);
      for (int y = p.y0(); y < p.y0() + p.size; ++y) {
        for (int x = p.x0(); x < p.x0() + p.size; ++x) pred(x, y) = a * pred(x, y) + b;
      }
    }
    const auto after = run_patch_loss(plan, pred, gt, mask, 1, {}, false);
    for (std::size_t k = 0; k < before.per_patch.size(); ++k) {
      if (std::isnan(before.per_patch[k])) continue;
      worst_affine = std::max(worst_affine, std::abs(before.per_patch[k] - after.per_patch[k]));
    }
  }
  t.expect(worst_affine <= 1e-9, "affine invariance " + num(worst_affine));

  double worst_self = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = test::random_grid(rng, 48, 48, 0.05, 1.0);
    Grid<Eigen::Vector3d> rgb(48, 48);
    for (auto& c : rgb.storage()) c = Eigen::Vector3d::Constant(uniform01(rng));
    const auto patches = select_patches(rgb, trial);
    const auto v = eg_ssi_loss(g, g, ValidityMask(48, 48, 1), patches);
    worst_self = std::max(worst_self, std::abs(v.value));
  }
  t.expect(worst_self <= 1e-12, "identical maps " + num(worst_self));

  // Strong texture edges on a smooth surface: no depth discontinuity is implied.
  SceneSpec s;
  s.camera = {150.0, 150.0, 80.0, 60.0, 160, 120};
  s.planes.push_back({Eigen::Vector3d(0.2, -0.1, 1.0).normalized(), 4.0});
  s.texture = Texture::Checker;
  const auto r = render(s);
  const auto patches = select_patches(r.rgb, 7);
  const auto inv = r.depth.inverse();
  const auto v = eg_ssi_loss(inv, inv, r.depth.mask, patches);
  t.expect(patches.size() > 0 && std::abs(v.value) <= 1e-12,
           "checker plane EG-SSI " + num(v.value));
  t.note("affine " + num(worst_affine) + ", self " + num(worst_self) + ", checker plane " +
         num(v.value) + " over " + std::to_string(patches.size()) + " patches");
  return from(t);
}

Outcome check_consistency() {
  Tally t;
  Rng rng(505);
  const Intrinsics K{60.0, 60.0, 32.0, 24.0, 64, 48};
  double worst = 0;
  bool stop_grad = true, live_grad = true;
  int evaluated = 0, skipped = 0;
  // Random similarity augmentations on fronto-parallel planes.
  for (int i = 0; i < 50; ++i) {
    SceneSpec s;
    s.camera = K;
    s.planes.push_back({{0, 0, 1}, uniform(rng, 1.0, 20.0)});
    const auto a1 = sample_augmentation(rng, 64, 48, 48, 36);
    const auto a2 = sample_augmentation(rng, 64, 48, 48, 36);
    const auto pair = render_pair(s, a1, a2);
    const auto warp = compose_warp(a1, a2);
    try {
      const auto l = consistency_loss(pair.view1.depth, pair.view2.depth, warp);
      worst = std::max(worst, l.value);
      for (double g : l.grad("z2").storage()) stop_grad &= g == 0.0;
      ++evaluated;
    } catch (const DegenerateInputError&) {
      ++skipped;  // the two crops do not overlap
    }
  }
  // Integer shifts on scenes with spheres and occlusions.
  for (int i = 0; i < 50; ++i) {
    const auto s = random_scene(rng, K);
    const auto a1 = GeomAugmentation::translation(
        64, 48, std::round(uniform(rng, -6, 6)), std::round(uniform(rng, -6, 6)));
    const auto a2 = GeomAugmentation::translation(
        64, 48, std::round(uniform(rng, -6, 6)), std::round(uniform(rng, -6, 6)));
    const auto pair = render_pair(s, a1, a2);
    const auto l = consistency_loss(pair.view1.depth, pair.view2.depth, compose_warp(a1, a2));
    worst = std::max(worst, l.value);
    for (double g : l.grad("z2").storage()) stop_grad &= g == 0.0;
    ++evaluated;
    // A perturbed first view must still receive gradient.
    DepthMap z1 = pair.view1.depth;
    for (auto& v : z1.values.storage()) v *= 1.01;
    const auto lp = consistency_loss(z1, pair.view2.depth, compose_warp(a1, a2));
    double norm = 0;
    for (double g : lp.grad("z1").storage()) norm += std::abs(g);
    live_grad &= norm > 0;
  }
  t.expect(worst <= 1e-9, "consistency " + num(worst));
  t.expect(stop_grad, "gradient reaches the second view");
  t.expect(live_grad, "no gradient on the first view");
  t.expect(evaluated >= 80, "only " + std::to_string(evaluated) + " overlapping pairs");
  t.note("max loss " + num(worst) + " over " + std::to_string(evaluated) + " pairs (" +
         std::to_string(skipped) + " without overlap)");
  return from(t);
}

DepthMap random_depth(Rng& rng, int w, int h) {
  return DepthMap::from_values(test::random_grid(rng, w, h, 1.0, 10.0));
}

DepthMap blocky_depth(Rng& rng, int w, int h) {
  DepthMap d(w, h, 1.0, true);
  const int bx = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(w - 1)));
  const int by = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(h - 1)));
  const double levels[4] = {uniform(rng, 1, 3), uniform(rng, 1, 3), uniform(rng, 1, 3),
                            uniform(rng, 1, 3)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) d.values(x, y) = levels[(x >= bx) + 2 * (y >= by)] * uniform(rng, 0.97, 1.03);
  }
  return d;
}

Outcome check_metric_oracles() {
  Tally t;
  Rng rng(606);
  int mismatches[4] = {0, 0, 0, 0};
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 10 + static_cast<int>(uniform_index(rng, 7));
    const int h = 10 + static_cast<int>(uniform_index(rng, 7));
    const auto g = random_depth(rng, w, h);
    DepthMap p = g;
    for (auto& v : p.values.storage()) v *= std::exp(normal(rng, 0.0, 0.3));
    Grid<double> s(w, h);
    for (auto& v : s.storage()) v = std::round(uniform(rng, 0, 8)) / 8;
    const auto r = ause(p, g, s);
    const auto o = oracle::ause(p, g, s);
    const bool nause_ok = std::isnan(o.nause) ? std::isnan(r.nause) : bit_equal(r.nause, o.nause);
    mismatches[0] += !(bit_equal(r.ause, o.ause) && nause_ok);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + uniform_index(rng, 254);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = std::round(uniform(rng, 0, 10));
      b[i] = uniform(rng, 0, 1);
    }
    const auto r = spearman(a, b);
    const auto o = oracle::spearman(a, b);
    mismatches[1] += r.has_value() != o.has_value() || (r && !bit_equal(*r, *o));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 4 + static_cast<int>(uniform_index(rng, 13));
    const int h = 4 + static_cast<int>(uniform_index(rng, 13));
    const auto g = blocky_depth(rng, w, h);
    auto p = blocky_depth(rng, w, h);
    p.mask = test::random_mask(rng, w, h, 0.9);
    const auto r = boundary_f1(p, g);
    const auto o = oracle::boundary_f1(p, g, {5, 10, 15, 20, 25});
    mismatches[2] += r.has_value() != o.has_value() || (r && !bit_equal(*r, *o));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = [&](std::size_t n) {
      std::vector<Eigen::Vector3d> v(n);
      for (auto& x : v) x = {uniform01(rng), uniform01(rng), uniform01(rng)};
      return v;
    };
    PointCloud a, b;
    a.points = pts(1 + uniform_index(rng, 200));
    b.points = pts(1 + uniform_index(rng, 200));
    const double d_max = uniform(rng, 1.0, 10.0);
    mismatches[3] += !bit_equal(fscore_auc(a, b, d_max), oracle::fscore_auc(a.points, b.points, d_max));
  }
  const char* names[4] = {"AUSE", "Spearman", "boundary F1", "F_A"};
  for (int k = 0; k < 4; ++k) {
    t.expect(mismatches[k] == 0, std::string(names[k]) + " mismatches " + std::to_string(mismatches[k]));
  }

  double oracle_ause = 0, nause_lo = 1e9, nause_hi = -1e9;
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = random_depth(rng, 40, 25);
    DepthMap p = g;
    for (auto& v : p.values.storage()) v *= std::exp(normal(rng, 0.0, 0.3));
    Grid<double> s_oracle(40, 25);
    for (std::size_t i = 0; i < s_oracle.size(); ++i) {
      s_oracle[i] = std::abs(std::log(p.values[i]) - std::log(g.values[i]));
    }
    oracle_ause = std::max(oracle_ause, std::abs(ause(p, g, s_oracle).ause));
    const auto nause = ause(p, g, test::random_grid(rng, 40, 25, 0, 1)).nause;
    nause_lo = std::min(nause_lo, nause);
    nause_hi = std::max(nause_hi, nause);
  }
  t.expect(oracle_ause == 0.0, "oracle sigma AUSE " + num(oracle_ause));
  t.expect(nause_lo >= 0.85 && nause_hi <= 1.15,
           "independent sigma nAUSE [" + num(nause_lo) + "," + num(nause_hi) + "]");
  t.note("400 oracle trials, oracle AUSE " + num(oracle_ause) + ", random nAUSE [" +
         num(nause_lo) + "," + num(nause_hi) + "]");
  return from(t);
}

Outcome check_kernel() {
  Tally t;
  Rng rng(707);
  const int side = 1024;
  const auto pred = test::random_grid(rng, side, side, 0.05, 1.0);
  const auto gt = test::random_grid(rng, side, side, 0.05, 1.0);
  const auto mask = test::random_mask(rng, side, side, 0.9);
  PatchSet set;
  for (int k = 0; k < 1024; ++k) {
    const int x0 = static_cast<int>(uniform_index(rng, side - 64 + 1));
    const int y0 = static_cast<int>(uniform_index(rng, side - 64 + 1));
    set.entries.push_back({x0 + 32, y0 + 32, 64});
  }
  const auto plan = make_plan(set, side, side);

  const auto same = [](const PatchLossResult& a, const PatchLossResult& b) {
    if (!bit_equal(a.value, b.value) || a.used != b.used || a.per_patch.size() != b.per_patch.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.per_patch.size(); ++i) {
      if (std::memcmp(&a.per_patch[i], &b.per_patch[i], sizeof(double)) != 0) return false;
    }
    return a.gradient.size() == b.gradient.size() &&
           std::memcmp(a.gradient.storage().data(), b.gradient.storage().data(),
                       a.gradient.size() * sizeof(double)) == 0;
  };

  using clock = std::chrono::steady_clock;
  const auto timed = [&](int threads, PatchLossResult& out) {
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = clock::now();
      out = run_patch_loss(plan, pred, gt, mask, threads);
      best = std::min(best, std::chrono::duration<double>(clock::now() - t0).count());
    }
    return best;
  };
  PatchLossResult r1, r2, r8;
  const double t1 = timed(1, r1);
  timed(2, r2);
  const double t8 = timed(8, r8);
  const auto serial = run_patch_loss_serial(plan, pred, gt, mask);
  t.expect(same(r1, r2) && same(r1, r8), "thread counts disagree");
  t.expect(same(r1, serial), "kernel differs from the serial reference");
  const double speedup = t1 / t8;
  const unsigned cores = std::thread::hardware_concurrency();
  t.note("bit-identical {1,2,8} and serial: " + std::string(same(r1, r2) && same(r1, r8) && same(r1, serial) ? "yes" : "no") +
         "; 8-thread speedup " + num(speedup) + "x on " + std::to_string(cores) + " core(s)");
  if (!t.ok()) return from(t);
  if (cores < 8) {
    return {Status::Skip, t.detail() + "; speedup needs an 8-core host"};
  }
  t.expect(speedup >= 2.0, "speedup below 2x");
  return from(t);
}

Outcome check_io() {
  Tally t;
  test::TempDir dir("acc_io");
  const auto le = read_depth(test::data_path("depth_2x2_le.pfm"));
  const auto be = read_depth(test::data_path("depth_2x2_be.pfm"));
  t.expect(le.values == be.values && le.mask == be.mask, "big- and little-endian PFM differ");

  struct Golden {
    const char* name;
    DepthFileFormat fmt;
    double scale;
  };
  for (const auto& g : {Golden{"depth_2x2_le.pfm", DepthFileFormat::Pfm, 1.0},
                        Golden{"depth_2x2_be.pfm", DepthFileFormat::Pfm, 1.0},
                        Golden{"depth_3x2.dkf", DepthFileFormat::RawF32, 1.0},
                        Golden{"depth_2x2.png", DepthFileFormat::Png16, 0.001}}) {
    const auto a = read_depth(test::data_path(g.name), g.fmt, g.scale);
    const auto out = dir / (std::string("copy_") + g.name);
    write_depth(a, out, g.fmt, g.scale);
    const auto b = read_depth(out, g.fmt, g.scale);
    bool exact = a.mask == b.mask;
    for (std::size_t i = 0; i < a.values.size(); ++i) exact &= !a.mask[i] || bit_equal(a.values[i], b.values[i]);
    t.expect(exact, std::string(g.name) + " does not roundtrip");
  }
  t.expect(read_file(test::data_path("depth_2x2_le.pfm")) ==
               encode_depth(le, DepthFileFormat::Pfm, 1.0),
           "PFM writer differs from the golden bytes");
  t.expect(read_file(test::data_path("depth_3x2.dkf")) ==
               encode_depth(read_depth(test::data_path("depth_3x2.dkf")), DepthFileFormat::RawF32, 1.0),
           "RAWF32 writer differs from the golden bytes");

  Rng rng(808);
  int maps = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 1 + static_cast<int>(uniform_index(rng, 64));
    const int h = 1 + static_cast<int>(uniform_index(rng, 64));
    DepthMap f(w, h, 0.0, true), u(w, h, 0.0, true);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      f.values[i] = static_cast<float>(uniform(rng, 1e-3, 1e3));
      u.values[i] = static_cast<double>(1 + uniform_index(rng, 65535)) * 0.001;
      if (uniform01(rng) < 0.1) f.mask[i] = u.mask[i] = 0;
    }
    for (auto [fmt, ext] : {std::pair{DepthFileFormat::Pfm, ".pfm"}, std::pair{DepthFileFormat::RawF32, ".dkf"},
                            std::pair{DepthFileFormat::Png16, ".png"}}) {
      const auto& src = fmt == DepthFileFormat::Png16 ? u : f;
      const double scale = fmt == DepthFileFormat::Png16 ? 0.001 : 1.0;
      const auto path = dir / ("r" + std::to_string(trial) + ext);
      write_depth(src, path, fmt, scale);
      const auto back = read_depth(path, fmt, scale);
      bool exact = back.mask == src.mask;
      for (std::size_t i = 0; i < src.values.size(); ++i) {
        exact &= !src.mask[i] || bit_equal(src.values[i], back.values[i]);
      }
      t.expect(exact, std::string("random map does not roundtrip through ") + ext);
      ++maps;
    }
  }
  t.note("4 golden files, " + std::to_string(maps) + " random maps, LE/BE PFM agree");
  return from(t);
}

Outcome check_end_to_end() {
  Tally t;
  test::TempDir dir("acc_e2e");
  const auto t0 = std::chrono::steady_clock::now();
  const auto exact = run_cli("synth --scenes 20 --seed 1 --out " + q(dir / "exact"));
  const auto scaled = run_cli("synth --scenes 20 --seed 1 --pred-scale 1.3 --out " + q(dir / "scaled"));
  t.expect(exact.code == 0 && scaled.code == 0, "synth failed");

  const auto eval = [&](const std::string& set, const std::string& align, int jobs) {
    return run_cli("eval --format kv --manifest " + q(dir / set / "manifest.tsv") + " --align " + align +
                   " --jobs " + std::to_string(jobs));
  };
  const auto perfect = eval("exact", "none", 1);
  t.expect(perfect.code == 0, "eval exit code " + std::to_string(perfect.code));
  const auto kv = parse_kv(perfect.out);
  t.expect(kv_number(kv, "delta1") == 100.0, "delta1 " + num(kv_number(kv, "delta1")));
  t.expect(kv_number(kv, "arel") == 0.0, "arel " + num(kv_number(kv, "arel")));
  t.expect(kv_number(kv, "f_a") == 1.0, "f_a " + num(kv_number(kv, "f_a")));
  t.expect(kv_number(kv, "rho_a") == 1.0, "rho_a " + num(kv_number(kv, "rho_a")));
  t.expect(kv_number(kv, "boundary_f1") == 100.0, "boundary_f1 " + num(kv_number(kv, "boundary_f1")));
  t.expect(kv_number(kv, "delta1.count") == 20.0, "not every scene evaluated");

  const auto med = parse_kv(eval("scaled", "median", 1).out);
  t.expect(kv_number(med, "delta1") == 100.0, "median-aligned delta1 " + num(kv_number(med, "delta1")));
  const auto none_run = eval("scaled", "none", 1);
  const auto none = parse_kv(none_run.out);
  t.expect(kv_number(none, "delta1") == 0.0, "unaligned delta1 " + num(kv_number(none, "delta1")));
  const double arel = kv_number(none, "arel");
  t.expect(std::abs(arel - 0.3) <= 1e-9, "unaligned arel " + num(arel));

  bool deterministic = true;
  for (int jobs : {2, 8}) {
    deterministic &= eval("exact", "none", jobs).out == perfect.out;
    deterministic &= eval("scaled", "none", jobs).out == none_run.out;
  }
  t.expect(deterministic, "output depends on --jobs");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  t.expect(secs < 60.0, "runtime " + num(secs) + " s");
  t.note("unaligned arel " + num(arel) + " (|err| " + num(std::abs(arel - 0.3)) + ")");
  return from(t);
}

struct Criterion {
  const char* name;
  double budget_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--only <criterion>]\n");
      return 2;
    }
  }
  test::QuietWarnings quiet;
  const std::vector<Criterion> criteria{
      {"constants", 10.0, check_constants},
      {"geometry", 30.0, check_geometry},
      {"silog", 0.0, check_silog},
      {"gradients", 120.0, check_gradients},
      {"eg-ssi", 0.0, check_eg_ssi},
      {"consistency", 0.0, check_consistency},
      {"metric-oracles", 120.0, check_metric_oracles},
      {"kernel", 0.0, check_kernel},
      {"io", 0.0, check_io},
      {"end-to-end", 60.0, check_end_to_end},
  };
  bool any_fail = false, any_skip = false, matched = false;
  for (const auto& c : criteria) {
    if (!only.empty() && only != c.name) continue;
    matched = true;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.status != Status::Fail && c.budget_s > 0 && secs > c.budget_s) {
      o.status = Status::Fail;
      o.detail += "; over the " + num(c.budget_s) + " s budget";
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    std::printf("%s %-15s %7.2fs  %s\n", tag, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
    any_fail |= o.status == Status::Fail;
    any_skip |= o.status == Status::Skip;
  }
  if (!matched) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  if (any_fail) return 1;
  return any_skip ? 77 : 0;
}
