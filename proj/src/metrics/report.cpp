#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "mdepth/metrics.hpp"

namespace mdepth {

void MetricRecord::set(const std::string& key, double value) {
  for (auto& [k, v] : values) {
    if (k == key) {
      v = value;
      return;
    }
  }
  values.emplace_back(key, value);
}

std::optional<double> MetricRecord::get(const std::string& key) const {
  for (const auto& [k, v] : values) {
    if (k == key) return v;
  }
  return std::nullopt;
}

namespace {

std::vector<std::string> key_union(std::span<const MetricRecord> records) {
  std::vector<std::string> keys;
  for (const auto& r : records) {
    for (const auto& [k, v] : r.values) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
  }
  return keys;
}

}  // namespace

MetricReport aggregate(std::span<const MetricRecord> per_image) {
  MetricReport report;
  report.per_image.assign(per_image.begin(), per_image.end());
  for (const auto& key : key_union(per_image)) {
    MetricSummary s{key, 0.0, 0, 0};
    double sum = 0.0;
    for (const auto& r : per_image) {
      const auto v = r.get(key);
      if (v && std::isfinite(*v)) {
        sum += *v;
        ++s.count;
      } else {
        ++s.excluded;
      }
    }
    s.mean = s.count > 0 ? sum / s.count : std::numeric_limits<double>::quiet_NaN();
    report.summary.push_back(s);
  }
  return report;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "txt" || name == "text") return ReportFormat::Text;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "kv") return ReportFormat::KeyValue;
  throw UsageError("unknown report format '" + name + "' (expected txt, csv or kv)");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

namespace {

void pad(std::ostream& os, const std::string& s, std::size_t width) {
  os << s;
  for (std::size_t i = s.size(); i < width; ++i) os << ' ';
}

}  // namespace

void write_per_image(std::ostream& os, const MetricReport& report, ReportFormat format) {
  const auto keys = key_union(report.per_image);
  const auto cell = [](const MetricRecord& r, const std::string& k) {
    const auto v = r.get(k);
    return format_number(v ? *v : std::numeric_limits<double>::quiet_NaN());
  };
  switch (format) {
    case ReportFormat::Csv:
      os << "id";
      for (const auto& k : keys) os << ',' << k;
      os << '\n';
      for (const auto& r : report.per_image) {
        os << r.id;
        for (const auto& k : keys) os << ',' << cell(r, k);
        os << '\n';
      }
      break;
    case ReportFormat::KeyValue:
      for (const auto& r : report.per_image) {
        for (const auto& k : keys) os << "image." << r.id << '.' << k << '=' << cell(r, k) << '\n';
      }
      break;
    case ReportFormat::Text: {
      std::size_t id_w = 2;
      for (const auto& r : report.per_image) id_w = std::max(id_w, r.id.size());
      pad(os, "id", id_w + 2);
      for (const auto& k : keys) pad(os, k, std::max<std::size_t>(k.size(), 14) + 2);
      os << '\n';
      for (const auto& r : report.per_image) {
        pad(os, r.id, id_w + 2);
        for (const auto& k : keys) pad(os, cell(r, k), std::max<std::size_t>(k.size(), 14) + 2);
        os << '\n';
      }
      break;
    }
  }
}

void write_summary(std::ostream& os, const MetricReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Csv:
      os << "metric,mean,count,excluded\n";
      for (const auto& s : report.summary) {
        os << s.key << ',' << format_number(s.mean) << ',' << s.count << ',' << s.excluded << '\n';
      }
      break;
    case ReportFormat::KeyValue:
      if (!report.dataset.empty()) os << "dataset=" << report.dataset << '\n';
      for (const auto& s : report.summary) {
        os << s.key << '=' << format_number(s.mean) << '\n'
           << s.key << ".count=" << s.count << '\n'
           << s.key << ".excluded=" << s.excluded << '\n';
      }
      os << "failures=" << report.failures.size() << '\n';
      break;
    case ReportFormat::Text:
      if (!report.dataset.empty()) os << "dataset: " << report.dataset << '\n';
      pad(os, "metric", 16);
      pad(os, "mean", 18);
      pad(os, "count", 8);
      os << "excluded\n";
      for (const auto& s : report.summary) {
        pad(os, s.key, 16);
        pad(os, format_number(s.mean), 18);
        pad(os, std::to_string(s.count), 8);
        os << s.excluded << '\n';
      }
      for (const auto& f : report.failures) os << "failed: " << f << '\n';
      break;
  }
}

}  // namespace mdepth
