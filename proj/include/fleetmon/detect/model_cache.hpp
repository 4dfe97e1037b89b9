// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fleetmon/detect/model.hpp"

namespace fleetmon::detect {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Bit-exact binary form of a model:
///   "FMMC" | u32 version | u32 payload_len | payload | u32 crc32(payload)
/// Numbers are little-endian; doubles are stored as their IEEE-754 bits.
std::string serialize_model(const UnitModel& model);

/// Throws CorruptionError on truncation or checksum mismatch and
/// MigrationError on an unknown version.
UnitModel deserialize_model(std::string_view bytes);

/// One file per unit under a directory. Writes go to a temp file that is
/// renamed into place, so readers never see a partial model.
class ModelCache {
 public:
  explicit ModelCache(std::filesystem::path dir);

  void store(const UnitModel& model) const;
  /// Throws NotFoundError for an absent unit.
  UnitModel load(std::uint32_t unit_id) const;
  bool contains(std::uint32_t unit_id) const;
  std::vector<std::uint32_t> units() const;

  std::filesystem::path path_for(std::uint32_t unit_id) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace fleetmon::detect
