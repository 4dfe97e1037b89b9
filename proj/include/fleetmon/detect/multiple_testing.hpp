// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file multiple_testing.hpp
/// @brief Rejection rules for a family of m simultaneous tests.
///
/// Step-up procedures sort p ascending (stable: ties keep index order), find
/// the largest k with p(k) <= threshold(k) and reject the k smallest.
///   BH 1995:  threshold(k) = k q / m
///   BY 2001:  threshold(k) = k q / (m c(m)),  c(m) = sum_{i=1..m} 1/i
/// Bonferroni rejects p_i <= alpha / m; uncorrected rejects p_i <= alpha.

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace fleetmon::detect {

enum class Method { kBH1995, kBY2001, kBonferroni, kUncorrected };

std::string_view to_string(Method method) noexcept;
/// Accepts bh, by, bonferroni, uncorrected. Throws ConfigError otherwise.
Method parse_method(std::string_view text);

struct MultipleTestConfig {
  Method method{Method::kBH1995};
  double level{0.05};  ///< q for FDR methods, alpha otherwise

  void validate() const;
};

/// Probability of at least one false alarm among m independent level-alpha
/// tests: 1 - (1 - alpha)^m.
double fwer_any_alarm_prob(double alpha, std::uint64_t m);

/// c(m) = 1 + 1/2 + ... + 1/m.
double harmonic_number(std::size_t m) noexcept;

/// Rejected indices, ascending.
std::vector<std::size_t> reject_bonferroni(std::span<const double> p, double alpha);
std::vector<std::size_t> reject_uncorrected(std::span<const double> p, double alpha);
/// method must be kBH1995 or kBY2001.
std::vector<std::size_t> reject_fdr(std::span<const double> p,
                                    const MultipleTestConfig& config);
/// Dispatches on config.method.
std::vector<std::size_t> reject(std::span<const double> p, const MultipleTestConfig& config);

/// 1-based position of each index in the stable ascending sort of p.
std::vector<std::size_t> sorted_ranks(std::span<const double> p);

}  // namespace fleetmon::detect
