// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

/// @file shard_log.hpp
/// @brief Append-only logs backing file-mode stores.
///
/// Shard log: header "FMTS" + u32 version, then records
///   u32 payload_len | u16 key_len | key bytes | u32 offset | f64 value
/// Id log: header "FMID" + u32 version, then records
///   u32 payload_len | u8 kind | u32 id | name bytes
/// All integers little-endian. A short or inconsistent record raises
/// CorruptionError.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>

namespace fleetmon::tstore {

inline constexpr std::uint32_t kLogVersion = 1;

class ShardLog {
 public:
  using Record = std::function<void(std::string_view key, std::uint32_t offset,
                                    double value)>;

  explicit ShardLog(const std::filesystem::path& path);

  void append(std::string_view key, std::uint32_t offset, double value);
  void flush();

  static void read(const std::filesystem::path& path, const Record& on_record);

 private:
  std::ofstream out_;
  std::string scratch_;
};

class IdLog {
 public:
  using Record =
      std::function<void(std::uint8_t kind, std::uint32_t id, std::string_view name)>;

  explicit IdLog(const std::filesystem::path& path);

  void append(std::uint8_t kind, std::uint32_t id, std::string_view name);
  void flush();

  static void read(const std::filesystem::path& path, const Record& on_record);

 private:
  std::ofstream out_;
  std::string scratch_;
};

}  // namespace fleetmon::tstore
