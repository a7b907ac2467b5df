#include "ewer/binning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "ewer/errors.hpp"
#include "ewer/util.hpp"

namespace ewer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Group sizes for D samples in k classes: the first D mod k groups take one
// extra sample.
std::vector<std::size_t> group_sizes(std::size_t d, int k) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), d / k);
  for (std::size_t i = 0; i < d % k; ++i) ++sizes[i];
  return sizes;
}

void check_balanced_args(std::size_t d, int k) {
  if (k < 2) throw input_error("InvalidK", "need k >= 2, got " +
                                               std::to_string(k));
  if (d < static_cast<std::size_t>(k))
    throw input_error("TooFewSamples", std::to_string(d) +
                                           " samples cannot fill " +
                                           std::to_string(k) + " classes");
}

std::vector<std::pair<double, double>> midpoint_ranges(
    const std::vector<double>& lows, const std::vector<double>& highs) {
  // lows[i] / highs[i] are the extreme values of group i.
  std::size_t k = lows.size();
  std::vector<std::pair<double, double>> ranges(k);
  for (std::size_t i = 0; i < k; ++i) {
    double lo = i == 0 ? 0.0 : 0.5 * (highs[i - 1] + lows[i]);
    double hi = i + 1 == k ? kInf : 0.5 * (highs[i] + lows[i + 1]);
    ranges[i] = {lo, hi};
  }
  return ranges;
}

}  // namespace

ClassMap build_balanced(std::span<const double> wers, int k) {
  check_balanced_args(wers.size(), k);
  std::vector<double> sorted(wers.begin(), wers.end());
  std::sort(sorted.begin(), sorted.end());

  auto sizes = group_sizes(sorted.size(), k);

  ClassMap map;
  map.kind = ClassMap::Kind::balanced;
  std::vector<double> lows, highs;
  std::size_t pos = 0;
  for (std::size_t sz : sizes) {
    double sum = std::accumulate(sorted.begin() + pos,
                                 sorted.begin() + pos + sz, 0.0);
    map.wer_fixed.push_back(sum / static_cast<double>(sz));
    lows.push_back(sorted[pos]);
    highs.push_back(sorted[pos + sz - 1]);
    pos += sz;
  }
  map.ranges = midpoint_ranges(lows, highs);
  return map;
}

ClassMap build_fixed(std::span<const double> values) {
  if (values.size() < 2)
    throw input_error("NonMonotonicValues", "need at least two class values");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] > values[i - 1]))
      throw input_error("NonMonotonicValues",
                        "class values must be strictly increasing");

  ClassMap map;
  map.kind = ClassMap::Kind::fixed;
  map.wer_fixed.assign(values.begin(), values.end());
  std::vector<double> v(values.begin(), values.end());
  map.ranges = midpoint_ranges(v, v);
  return map;
}

const std::vector<double>& fixed_default_values() {
  static const std::vector<double> v{0.0, 25.0, 50.0, 75.0, 100.0, 150.0};
  return v;
}

std::vector<int> assign_training(
    std::span<const std::pair<std::string, double>> samples, int k) {
  check_balanced_args(samples.size(), k);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (samples[a].second != samples[b].second)
      return samples[a].second < samples[b].second;
    return samples[a].first < samples[b].first;
  });

  auto sizes = group_sizes(samples.size(), k);
  std::vector<int> labels(samples.size());
  std::size_t pos = 0;
  for (int g = 0; g < k; ++g) {
    for (std::size_t j = 0; j < sizes[static_cast<std::size_t>(g)]; ++j)
      labels[order[pos++]] = g;
  }
  return labels;
}

int assign(const ClassMap& map, double wer) {
  // Ranges are contiguous with lo_0 = 0 and hi_{k-1} = inf; a value exactly
  // on a boundary belongs to the lower class.
  for (int i = 0; i + 1 < map.k(); ++i)
    if (wer <= map.ranges[static_cast<std::size_t>(i)].second) return i;
  return map.k() - 1;
}

std::string classmap_to_json(const ClassMap& map) {
  auto num = [](double v) {
    return std::isfinite(v) ? fmt_double17(v) : std::string("null");
  };
  std::string out = "{\"kind\": \"";
  out += map.kind == ClassMap::Kind::balanced ? "balanced" : "fixed";
  out += "\", \"k\": " + std::to_string(map.k());
  out += ", \"wer_fixed\": [";
  for (int i = 0; i < map.k(); ++i) {
    if (i > 0) out += ", ";
    out += num(map.wer_fixed[static_cast<std::size_t>(i)]);
  }
  out += "], \"ranges\": [";
  for (int i = 0; i < map.k(); ++i) {
    if (i > 0) out += ", ";
    const auto& r = map.ranges[static_cast<std::size_t>(i)];
    out += "[" + num(r.first) + ", " + num(r.second) + "]";
  }
  out += "]}";
  return out;
}

ClassMap classmap_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw input_error("ParseError", "malformed class map JSON");
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? kInf : v.get<double>();
  };
  ClassMap map;
  try {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "balanced")
      map.kind = ClassMap::Kind::balanced;
    else if (kind == "fixed")
      map.kind = ClassMap::Kind::fixed;
    else
      throw input_error("ParseError", "unknown class map kind '" + kind + "'");
    for (const auto& v : j.at("wer_fixed")) map.wer_fixed.push_back(num(v));
    for (const auto& r : j.at("ranges"))
      map.ranges.emplace_back(num(r.at(0)), num(r.at(1)));
    if (j.at("k").get<int>() != map.k() ||
        map.ranges.size() != map.wer_fixed.size())
      throw input_error("ParseError", "inconsistent class map sizes");
  } catch (const nlohmann::json::exception& e) {
    throw input_error("ParseError", std::string("class map JSON: ") + e.what());
  }
  return map;
}

}  // namespace ewer
