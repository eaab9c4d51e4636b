#include "mdepth/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mdepth/losses.hpp"

namespace mdepth {

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) throw UsageError("relative_error: length mismatch");
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::sqrt(std::max(na, nn));
  return denom > 0.0 ? std::sqrt(diff) / denom : 0.0;
}

namespace {

using Eval = std::function<double()>;

// Central differences of `f` with respect to every entry of `x` selected by `mask`.
std::vector<double> numeric_gradient(Grid<double>& x, const ValidityMask* mask, double step,
                                     const Eval& f) {
  std::vector<double> g(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const double keep = x[i];
    x[i] = keep + step;
    const double up = f();
    x[i] = keep - step;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

std::vector<double> analytic(const Grid<double>& g, bool flip) {
  std::vector<double> out(g.storage());
  if (flip) {
    for (auto& v : out) v = -v;
  }
  return out;
}

ValidityMask random_mask(Rng& rng, int w, int h, double keep) {
  ValidityMask m(w, h, 0);
  for (auto& v : m.storage()) v = uniform01(rng) < keep ? 1 : 0;
  return m;
}

Grid<double> random_grid(Rng& rng, int w, int h, double lo, double hi) {
  Grid<double> g(w, h);
  for (auto& v : g.storage()) v = uniform(rng, lo, hi);
  return g;
}

double check_lambda_mse(Rng& rng, const GradcheckConfig& cfg) {
  const int w = 12, h = 10;
  OutputGrids pred{random_grid(rng, w, h, -1, 1), random_grid(rng, w, h, -0.5, 0.5),
                   random_grid(rng, w, h, 0, 3)};
  const OutputGrids gt{random_grid(rng, w, h, -1, 1), random_grid(rng, w, h, -0.5, 0.5),
                       random_grid(rng, w, h, 0, 3)};
  const auto mask = random_mask(rng, w, h, 0.8);
  const std::array<double, 3> lambda{1.0, 1.0, 0.15};
  const auto loss = lambda_mse(pred, gt, mask, lambda);
  double worst = 0.0;
  Grid<double>* channels[3] = {&pred.theta, &pred.phi, &pred.z_log};
  const char* names[3] = {"theta", "phi", "z_log"};
  for (int d = 0; d < 3; ++d) {
    const auto fd = numeric_gradient(*channels[d], &mask, cfg.step, [&] {
      return lambda_mse(pred, gt, mask, lambda, false).value;
    });
    worst = std::max(worst, relative_error(analytic(loss.grad(names[d]), cfg.flip_sign), fd));
  }
  return worst;
}

double check_consistency(Rng& rng, const GradcheckConfig& cfg) {
  const int w = 12, h = 10;
  GeomAugmentation a1 = GeomAugmentation::identity(w, h);
  a1.scale = std::exp2(uniform(rng, -0.5, 0.5));
  a1.crop.x0 = uniform(rng, -1.0, 1.0);
  a1.crop.y0 = uniform(rng, -1.0, 1.0);
  GeomAugmentation a2 = GeomAugmentation::identity(w, h);
  a2.scale = std::exp2(uniform(rng, -0.5, 0.5));
  a2.crop.x0 = uniform(rng, -1.0, 1.0);
  a2.crop.y0 = uniform(rng, -1.0, 1.0);
  const auto warp = compose_warp(a1, a2);

  DepthMap z1;
  z1.values = random_grid(rng, w, h, 1.0, 5.0);
  z1.mask = random_mask(rng, w, h, 0.9);
  DepthMap z2;
  z2.values = random_grid(rng, w, h, 1.0, 5.0);
  z2.mask = random_mask(rng, w, h, 0.9);
  const auto loss = consistency_loss(z1, z2, warp);
  const auto fd = numeric_gradient(z1.values, &z1.mask, cfg.step,
                                   [&] { return consistency_loss(z1, z2, warp, false).value; });
  return relative_error(analytic(loss.grad("z1"), cfg.flip_sign), fd);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return 0.5 * (v[(n - 1) / 2] + v[n / 2]);
}

// Rejects patches whose standardization sits within `margin` of a kink.
bool clear_of_kinks(const Grid<double>& d, const Grid<double>& g, const ValidityMask& mask,
                    const PatchSet& patches, double margin) {
  for (const auto& p : patches.entries) {
    std::vector<double> x, y;
    for (int yy = p.y0(); yy < p.y0() + p.size; ++yy) {
      for (int xx = p.x0(); xx < p.x0() + p.size; ++xx) {
        if (!mask(xx, yy)) continue;
        x.push_back(d(xx, yy));
        y.push_back(g(xx, yy));
      }
    }
    if (x.size() < 16) return false;
    const double mx = median_of(x);
    const double my = median_of(y);
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i] - sorted[i - 1] < margin) return false;
    }
    double ax = 0, ay = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      ax += std::abs(x[i] - mx);
      ay += std::abs(y[i] - my);
    }
    ax /= x.size();
    ay /= y.size();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs((x[i] - mx) / ax - (y[i] - my) / ay) < margin / ax) return false;
    }
  }
  return true;
}

double check_eg_ssi(Rng& rng, const GradcheckConfig& cfg) {
  const int w = 24, h = 24;
  for (;;) {
    auto d = random_grid(rng, w, h, 0.1, 1.0);
    const auto g = random_grid(rng, w, h, 0.1, 1.0);
    const auto mask = random_mask(rng, w, h, 0.9);
    PatchSet patches;
    for (int k = 0; k < 4; ++k) {
      const int s = 6 + static_cast<int>(uniform_index(rng, 5));
      const int x0 = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(w - s + 1)));
      const int y0 = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(h - s + 1)));
      patches.entries.push_back({x0 + s / 2, y0 + s / 2, s});
    }
    if (!clear_of_kinks(d, g, mask, patches, 20.0 * cfg.step)) continue;
    const auto loss = eg_ssi_loss(d, g, mask, patches);
    const auto fd = numeric_gradient(d, &mask, cfg.step,
                                     [&] { return eg_ssi_loss(d, g, mask, patches, {}, false).value; });
    return relative_error(analytic(loss.grad("inv_depth"), cfg.flip_sign), fd);
  }
}

double check_uncertainty(Rng& rng, const GradcheckConfig& cfg) {
  const int w = 12, h = 10;
  for (;;) {
    auto sigma = random_grid(rng, w, h, 0.0, 1.0);
    const auto zp = random_grid(rng, w, h, 0.0, 2.0);
    const auto zg = random_grid(rng, w, h, 0.0, 2.0);
    const auto mask = random_mask(rng, w, h, 0.85);
    bool near_kink = false;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      near_kink |= std::abs(sigma[i] - std::abs(zp[i] - zg[i])) < 20.0 * cfg.step;
    }
    if (near_kink) continue;
    const auto loss = uncertainty_l1(sigma, zp, zg, mask);
    const auto fd = numeric_gradient(sigma, &mask, cfg.step,
                                     [&] { return uncertainty_l1(sigma, zp, zg, mask, false).value; });
    return relative_error(analytic(loss.grad("sigma"), cfg.flip_sign), fd);
  }
}

}  // namespace

std::vector<GradcheckEntry> run_gradcheck(const GradcheckConfig& config) {
  using Check = double (*)(Rng&, const GradcheckConfig&);
  const std::pair<const char*, Check> checks[] = {{"lambda_mse", check_lambda_mse},
                                                  {"consistency", check_consistency},
                                                  {"eg_ssi", check_eg_ssi},
                                                  {"uncertainty_l1", check_uncertainty}};
  std::vector<GradcheckEntry> out;
  std::uint64_t stream = 0;
  for (const auto& [name, check] : checks) {
    Rng rng(config.seed * 1000003ULL + stream++);
    GradcheckEntry e{name, 0.0, config.instances, true};
    for (int i = 0; i < config.instances; ++i) e.max_rel_error = std::max(e.max_rel_error, check(rng, config));
    e.passed = e.max_rel_error <= config.tolerance;
    out.push_back(e);
  }
  return out;
}

}  // namespace mdepth
