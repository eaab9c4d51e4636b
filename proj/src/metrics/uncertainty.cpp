#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mdepth/metrics.hpp"

namespace mdepth {
namespace {

std::vector<std::size_t> removal_order(const std::vector<double>& key) {
  std::vector<std::size_t> order(key.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  return order;
}

// delta1 (percent) after removing the first floor(k n / steps) entries of order.
std::vector<double> sparsification(const std::vector<std::size_t>& order,
                                   const std::vector<std::uint8_t>& good) {
  const std::size_t n = order.size();
  std::vector<std::size_t> good_prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) good_prefix[i + 1] = good_prefix[i] + good[order[i]];
  std::vector<double> curve(kSparsificationSteps);
  for (int k = 0; k < kSparsificationSteps; ++k) {
    const std::size_t removed = static_cast<std::size_t>(k) * n / kSparsificationSteps;
    const auto kept_good = good_prefix[n] - good_prefix[removed];
    curve[static_cast<std::size_t>(k)] =
        100.0 * static_cast<double>(kept_good) / static_cast<double>(n - removed);
  }
  return curve;
}

}  // namespace

AuseResult ause(const DepthMap& pred, const DepthMap& gt, const UncertaintyMap& sigma) {
  const auto m = overlap(pred, gt);
  require_same_shape(sigma, m, "ause");
  std::vector<double> err;
  std::vector<double> sig;
  std::vector<std::uint8_t> good;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i] || !std::isfinite(sigma[i])) continue;
    const double d = pred.values[i];
    const double g = gt.values[i];
    err.push_back(std::abs(std::log(d) - std::log(g)));
    sig.push_back(sigma[i]);
    good.push_back(std::max(d / g, g / d) < 1.25 ? 1 : 0);
  }
  if (err.size() < kMinAusePixels) {
    throw DegenerateInputError("ause: fewer than " + std::to_string(kMinAusePixels) +
                               " overlapping pixels");
  }

  AuseResult r;
  auto& c = r.curve;
  c.method_delta1 = sparsification(removal_order(sig), good);
  c.oracle_delta1 = sparsification(removal_order(err), good);
  c.random_delta1.assign(kSparsificationSteps, c.oracle_delta1.front());
  c.fractions.resize(kSparsificationSteps);
  double gap = 0.0;
  double random_gap = 0.0;
  for (int k = 0; k < kSparsificationSteps; ++k) {
    const auto i = static_cast<std::size_t>(k);
    c.fractions[i] = k / static_cast<double>(kSparsificationSteps);
    gap += (c.oracle_delta1[i] - c.method_delta1[i]) / 100.0;
    random_gap += (c.oracle_delta1[i] - c.random_delta1[i]) / 100.0;
  }
  r.ause = gap / kSparsificationSteps;
  const double ause_random = random_gap / kSparsificationSteps;
  r.nause = ause_random > 0.0 ? r.ause / ause_random : std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::vector<double> fractional_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("spearman: length mismatch");
  if (a.size() < 3) throw UsageError("spearman: need at least 3 samples");
  const auto ra = fractional_ranks(a);
  const auto rb = fractional_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double x = ra[i] - mean;
    const double y = rb[i] - mean;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace mdepth
