#include "mdepth/pipeline.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"
#include "mdepth/metrics.hpp"

namespace mdepth {

namespace {

using nlohmann::json;

template <typename T>
void read_key(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= key == a;
    if (!ok) throw ParseError(std::string("loss config: unknown key '") + key + "' in " + where, 0);
  }
}

Grid<double> finite_or_zero(Grid<double> g) {
  for (auto& v : g.storage()) {
    if (!std::isfinite(v)) v = 0.0;
  }
  return g;
}

}  // namespace

LossConfig parse_loss_config(const std::string& json_text) {
  LossConfig cfg;
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("loss config: ") + e.what(), e.byte);
  }
  try {
    reject_unknown(root, {"weights", "patches", "eg_ssi", "shift_fraction"}, "root");
    read_key(root, "shift_fraction", cfg.shift_fraction);
    if (auto it = root.find("weights"); it != root.end()) {
      reject_unknown(*it, {"lambda", "alpha", "beta", "gamma"}, "weights");
      read_key(*it, "lambda", cfg.weights.lambda);
      read_key(*it, "alpha", cfg.weights.alpha);
      read_key(*it, "beta", cfg.weights.beta);
      read_key(*it, "gamma", cfg.weights.gamma);
    }
    if (auto it = root.find("patches"); it != root.end()) {
      reject_unknown(*it, {"count", "min_size_frac", "max_size_frac", "quantile"}, "patches");
      read_key(*it, "count", cfg.patches.count);
      read_key(*it, "min_size_frac", cfg.patches.min_size_frac);
      read_key(*it, "max_size_frac", cfg.patches.max_size_frac);
      read_key(*it, "quantile", cfg.patches.quantile);
    }
    if (auto it = root.find("eg_ssi"); it != root.end()) {
      reject_unknown(*it, {"min_valid", "mad_floor"}, "eg_ssi");
      read_key(*it, "min_valid", cfg.eg_ssi.min_valid);
      read_key(*it, "mad_floor", cfg.eg_ssi.mad_floor);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("loss config: ") + e.what(), 0);
  }
  if (cfg.patches.count < 0 || cfg.patches.min_size_frac <= 0 ||
      cfg.patches.max_size_frac < cfg.patches.min_size_frac || cfg.patches.quantile < 0 ||
      cfg.patches.quantile > 1 || cfg.shift_fraction < 0 || cfg.eg_ssi.min_valid < 1) {
    throw DomainError("loss config: parameter out of range");
  }
  return cfg;
}

std::string loss_config_to_json(const LossConfig& c) {
  const json j = {
      {"weights",
       {{"lambda", c.weights.lambda},
        {"alpha", c.weights.alpha},
        {"beta", c.weights.beta},
        {"gamma", c.weights.gamma}}},
      {"patches",
       {{"count", c.patches.count},
        {"min_size_frac", c.patches.min_size_frac},
        {"max_size_frac", c.patches.max_size_frac},
        {"quantile", c.patches.quantile}}},
      {"eg_ssi", {{"min_valid", c.eg_ssi.min_valid}, {"mad_floor", c.eg_ssi.mad_floor}}},
      {"shift_fraction", c.shift_fraction}};
  return j.dump(2);
}

bool LossBreakdown::degenerate() const {
  for (const auto& c : components) {
    if (!c.note.empty()) return true;
  }
  return false;
}

LossBreakdown compute_losses(const LossInputs& in, const LossConfig& cfg, std::uint64_t seed,
                             int threads) {
  require_same_shape(in.pred.values, in.gt.values, "compute_losses");
  require_same_shape(in.pred.values, in.rgb, "compute_losses");
  if (in.sigma) require_same_shape(in.pred.values, *in.sigma, "compute_losses");
  const int w = in.pred.width(), h = in.pred.height();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  LossBreakdown out;
  LossComponents parts;
  auto record = [&](const char* name, double weight, auto&& fn) {
    ComponentReport rep{name, nan, weight, {}};
    LossValue v;
    try {
      v = fn();
      rep.value = v.value;
      if (!std::isfinite(v.value)) rep.note = "non-finite value";
    } catch (const DegenerateInputError& e) {
      rep.note = e.what();
    }
    if (!rep.note.empty()) v = LossValue{};
    out.components.push_back(rep);
    return v;
  };

  const auto mask = overlap(in.pred, in.gt);
  const auto zp = finite_or_zero(in.pred.log());
  const auto zg = finite_or_zero(in.gt.log());

  parts.lambda_mse = record("lambda_mse", 1.0, [&] {
    OutputGrids p{Grid<double>(w, h, 0.0), Grid<double>(w, h, 0.0), zp};
    OutputGrids g{Grid<double>(w, h, 0.0), Grid<double>(w, h, 0.0), zg};
    if (in.camera) {
      const auto angles = camera_angles(*in.camera);
      p.theta = g.theta = angles.theta;
      p.phi = g.phi = angles.phi;
    }
    return lambda_mse(p, g, mask, cfg.weights.lambda);
  });

  parts.consistency = record("consistency", cfg.weights.alpha, [&] {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    auto shift = [&](int extent) {
      const double m = cfg.shift_fraction * extent;
      return std::round(uniform(rng, -m, m));
    };
    const auto a1 = GeomAugmentation::translation(w, h, shift(w), shift(h));
    const auto a2 = GeomAugmentation::translation(w, h, shift(w), shift(h));
    const auto view1 = apply_to_grid(a1, in.pred, Filter::Nearest);
    const auto view2 = apply_to_grid(a2, in.gt, Filter::Nearest);
    return consistency_loss(view1, view2, compose_warp(a1, a2));
  });

  parts.eg_ssi = record("eg_ssi", cfg.weights.beta, [&] {
    const auto patches = select_patches(in.rgb, seed, cfg.patches);
    out.patch_count = patches.entries.size();
    if (patches.entries.empty()) throw DegenerateInputError("eg_ssi: no edge patches selected");
    return eg_ssi_loss(in.pred.inverse(), in.gt.inverse(), mask, patches, cfg.eg_ssi, true,
                       threads);
  });

  parts.uncertainty = record("uncertainty_l1", cfg.weights.gamma, [&] {
    // A missing map stands for a prediction of zero uncertainty.
    const Grid<double> sigma = in.sigma ? *in.sigma : Grid<double>(w, h, 0.0);
    return uncertainty_l1(sigma, zp, zg, mask);
  });

  LossWeights weights = cfg.weights;
  out.total = total_loss(parts, weights);
  return out;
}

}  // namespace mdepth
