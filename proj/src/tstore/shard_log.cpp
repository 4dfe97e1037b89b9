// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/tstore/shard_log.hpp"

#include <bit>
#include <cstring>
#include <vector>

#include "fleetmon/error.hpp"

namespace fleetmon::tstore {

namespace {

constexpr char kShardMagic[4] = {'F', 'M', 'T', 'S'};
constexpr char kIdMagic[4] = {'F', 'M', 'I', 'D'};

void put_le(std::string& out, std::uint64_t v, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const char* p, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i)
    v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(p[i])) << (8 * i);
  return v;
}

std::ofstream open_append(const std::filesystem::path& path, const char (&magic)[4]) {
  const bool fresh = !std::filesystem::exists(path) ||
                     std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot open log " + path.string());
  if (fresh) {
    std::string header(magic, 4);
    put_le(header, kLogVersion, 4);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
  }
  return out;
}

// Calls on_payload for each record; throws on any framing problem.
template <typename F>
void read_framed(const std::filesystem::path& path, const char (&magic)[4],
                 F&& on_payload) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open log " + path.string());
  char header[8];
  if (!in.read(header, 8)) {
    if (in.gcount() == 0) return;
    throw CorruptionError(path.string() + ": truncated header");
  }
  if (std::memcmp(header, magic, 4) != 0)
    throw CorruptionError(path.string() + ": bad magic");
  const auto version = static_cast<std::uint32_t>(get_le(header + 4, 4));
  if (version != kLogVersion)
    throw MigrationError(path.string() + ": unsupported log version " +
                         std::to_string(version));
  std::vector<char> payload;
  std::uint64_t record = 0;
  for (;;) {
    char len_buf[4];
    in.read(len_buf, 4);
    if (in.gcount() == 0) return;
    if (in.gcount() != 4)
      throw CorruptionError(path.string() + ": truncated record " +
                            std::to_string(record));
    const auto len = static_cast<std::uint32_t>(get_le(len_buf, 4));
    payload.resize(len);
    if (!in.read(payload.data(), len))
      throw CorruptionError(path.string() + ": truncated record " +
                            std::to_string(record));
    on_payload(std::string_view(payload.data(), payload.size()), record);
    ++record;
  }
}

}  // namespace

ShardLog::ShardLog(const std::filesystem::path& path)
    : out_(open_append(path, kShardMagic)) {}

void ShardLog::append(std::string_view key, std::uint32_t offset, double value) {
  scratch_.clear();
  const std::uint32_t payload_len =
      static_cast<std::uint32_t>(2 + key.size() + 4 + 8);
  put_le(scratch_, payload_len, 4);
  put_le(scratch_, key.size(), 2);
  scratch_.append(key);
  put_le(scratch_, offset, 4);
  put_le(scratch_, std::bit_cast<std::uint64_t>(value), 8);
  out_.write(scratch_.data(), static_cast<std::streamsize>(scratch_.size()));
}

void ShardLog::flush() {
  out_.flush();
  if (!out_) throw IoError("shard log flush failed");
}

void ShardLog::read(const std::filesystem::path& path, const Record& on_record) {
  read_framed(path, kShardMagic, [&](std::string_view p, std::uint64_t record) {
    if (p.size() < 2) throw CorruptionError("short shard record " + std::to_string(record));
    const auto key_len = static_cast<std::size_t>(get_le(p.data(), 2));
    if (p.size() != 2 + key_len + 4 + 8)
      throw CorruptionError("inconsistent shard record " + std::to_string(record));
    const std::string_view key = p.substr(2, key_len);
    const auto offset = static_cast<std::uint32_t>(get_le(p.data() + 2 + key_len, 4));
    const double value = std::bit_cast<double>(get_le(p.data() + 6 + key_len, 8));
    on_record(key, offset, value);
  });
}

IdLog::IdLog(const std::filesystem::path& path) : out_(open_append(path, kIdMagic)) {}

void IdLog::append(std::uint8_t kind, std::uint32_t id, std::string_view name) {
  scratch_.clear();
  put_le(scratch_, 1 + 4 + name.size(), 4);
  put_le(scratch_, kind, 1);
  put_le(scratch_, id, 4);
  scratch_.append(name);
  out_.write(scratch_.data(), static_cast<std::streamsize>(scratch_.size()));
}

void IdLog::flush() {
  out_.flush();
  if (!out_) throw IoError("id log flush failed");
}

void IdLog::read(const std::filesystem::path& path, const Record& on_record) {
  read_framed(path, kIdMagic, [&](std::string_view p, std::uint64_t record) {
    if (p.size() < 5) throw CorruptionError("short id record " + std::to_string(record));
    on_record(static_cast<std::uint8_t>(p[0]),
              static_cast<std::uint32_t>(get_le(p.data() + 1, 4)), p.substr(5));
  });
}

}  // namespace fleetmon::tstore
