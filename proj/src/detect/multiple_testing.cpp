// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/detect/multiple_testing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fleetmon/error.hpp"

namespace fleetmon::detect {

namespace {

std::vector<std::size_t> ascending_order(std::span<const double> p) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  return order;
}

std::vector<std::size_t> threshold_rule(std::span<const double> p, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] <= threshold) out.push_back(i);
  return out;
}

}  // namespace

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::kBH1995: return "bh";
    case Method::kBY2001: return "by";
    case Method::kBonferroni: return "bonferroni";
    case Method::kUncorrected: return "uncorrected";
  }
  return "bh";
}

Method parse_method(std::string_view text) {
  if (text == "bh") return Method::kBH1995;
  if (text == "by") return Method::kBY2001;
  if (text == "bonferroni") return Method::kBonferroni;
  if (text == "uncorrected") return Method::kUncorrected;
  throw ConfigError("unknown method '" + std::string(text) +
                    "' (expected bh, by, bonferroni or uncorrected)");
}

void MultipleTestConfig::validate() const {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must be in (0, 1)");
}

double fwer_any_alarm_prob(double alpha, std::uint64_t m) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
  if (m == 0) return 0.0;
  // -expm1(m log1p(-alpha)) stays accurate for tiny alpha.
  if (alpha == 1.0) return 1.0;
  return -std::expm1(static_cast<double>(m) * std::log1p(-alpha));
}

double harmonic_number(std::size_t m) noexcept {
  double c = 0.0;
  for (std::size_t i = m; i >= 1; --i) c += 1.0 / static_cast<double>(i);
  return c;
}

std::vector<std::size_t> reject_bonferroni(std::span<const double> p, double alpha) {
  if (p.empty()) return {};
  return threshold_rule(p, alpha / static_cast<double>(p.size()));
}

std::vector<std::size_t> reject_uncorrected(std::span<const double> p, double alpha) {
  return threshold_rule(p, alpha);
}

std::vector<std::size_t> reject_fdr(std::span<const double> p,
                                    const MultipleTestConfig& config) {
  config.validate();
  if (config.method != Method::kBH1995 && config.method != Method::kBY2001)
    throw ConfigError("reject_fdr needs the bh or by method");
  const std::size_t m = p.size();
  if (m == 0) return {};
  const double denom = static_cast<double>(m) *
                       (config.method == Method::kBY2001 ? harmonic_number(m) : 1.0);
  const std::vector<std::size_t> order = ascending_order(p);
  std::size_t k = 0;
  for (std::size_t j = m; j >= 1; --j) {
    if (p[order[j - 1]] <= static_cast<double>(j) * config.level / denom) {
      k = j;
      break;
    }
  }
  std::vector<std::size_t> out(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> reject(std::span<const double> p, const MultipleTestConfig& config) {
  config.validate();
  switch (config.method) {
    case Method::kBH1995:
    case Method::kBY2001: return reject_fdr(p, config);
    case Method::kBonferroni: return reject_bonferroni(p, config.level);
    case Method::kUncorrected: return reject_uncorrected(p, config.level);
  }
  return {};
}

std::vector<std::size_t> sorted_ranks(std::span<const double> p) {
  const std::vector<std::size_t> order = ascending_order(p);
  std::vector<std::size_t> rank(p.size());
  for (std::size_t j = 0; j < order.size(); ++j) rank[order[j]] = j + 1;
  return rank;
}

}  // namespace fleetmon::detect
