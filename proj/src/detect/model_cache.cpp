// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/detect/model_cache.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "fleetmon/error.hpp"

namespace fleetmon::detect {

namespace {

constexpr char kMagic[4] = {'F', 'M', 'M', 'C'};
constexpr std::size_t kHeaderSize = 12;

class Writer {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  std::string take() { return std::move(buf_); }

 private:
  void le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(le(8)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  bool at_end() const noexcept { return pos_ == data_.size(); }

 private:
  std::uint64_t le(std::size_t width) {
    if (data_.size() - pos_ < width) throw CorruptionError("model payload is truncated");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
    pos_ += width;
    return v;
  }
  std::string_view data_;
  std::size_t pos_{0};
};

std::uint32_t checksum(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(in[at + i])) << (8 * i);
  return v;
}

}  // namespace

std::string serialize_model(const UnitModel& m) {
  const auto n = static_cast<std::uint32_t>(m.n_sensors());
  const auto r = static_cast<std::uint32_t>(m.rank());
  if (m.sensor_ids.size() != n || m.residual_variance.size() != n ||
      m.eigenvectors.rows() != n || m.eigenvectors.cols() != r)
    throw ValidationError("model dimensions are inconsistent");
  Writer w;
  w.u32(m.unit_id);
  w.i64(m.trained_at);
  w.u64(m.training_sample_count);
  w.u32(n);
  w.u32(r);
  for (std::uint32_t id : m.sensor_ids) w.u32(id);
  for (Eigen::Index i = 0; i < n; ++i) w.f64(m.mean(i));
  for (Eigen::Index j = 0; j < r; ++j) w.f64(m.eigenvalues(j));
  for (Eigen::Index j = 0; j < r; ++j)
    for (Eigen::Index i = 0; i < n; ++i) w.f64(m.eigenvectors(i, j));
  for (Eigen::Index i = 0; i < n; ++i) w.f64(m.residual_variance(i));
  const std::string payload = w.take();

  std::string out(kMagic, 4);
  put_u32(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out += payload;
  put_u32(out, checksum(payload));
  return out;
}

UnitModel deserialize_model(std::string_view bytes) {
  if (bytes.size() < kHeaderSize + 4) throw CorruptionError("model file is truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CorruptionError("bad model magic");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kModelFormatVersion)
    throw MigrationError("model format version " + std::to_string(version) +
                         " is not supported (expected " +
                         std::to_string(kModelFormatVersion) + ")");
  const std::uint32_t len = get_u32(bytes, 8);
  if (bytes.size() != kHeaderSize + len + 4) throw CorruptionError("model file is truncated");
  const std::string_view payload = bytes.substr(kHeaderSize, len);
  if (checksum(payload) != get_u32(bytes, kHeaderSize + len))
    throw CorruptionError("model checksum mismatch");

  Reader rd(payload);
  UnitModel m;
  m.unit_id = rd.u32();
  m.trained_at = rd.i64();
  m.training_sample_count = rd.u64();
  const std::uint32_t n = rd.u32();
  const std::uint32_t r = rd.u32();
  if (r > n) throw CorruptionError("model rank exceeds sensor count");
  if (payload.size() != 28 + 4ull * n + 8ull * (2ull * n + r + 1ull * n * r))
    throw CorruptionError("model payload size does not match its dimensions");
  m.sensor_ids.resize(n);
  for (auto& id : m.sensor_ids) id = rd.u32();
  m.mean.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) m.mean(i) = rd.f64();
  m.eigenvalues.resize(r);
  for (Eigen::Index j = 0; j < r; ++j) m.eigenvalues(j) = rd.f64();
  m.eigenvectors.resize(n, r);
  for (Eigen::Index j = 0; j < r; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m.eigenvectors(i, j) = rd.f64();
  m.residual_variance.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) m.residual_variance(i) = rd.f64();
  if (!rd.at_end()) throw CorruptionError("trailing bytes in model payload");
  return m;
}

ModelCache::ModelCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ModelCache::path_for(std::uint32_t unit_id) const {
  return dir_ / ("unit-" + std::to_string(unit_id) + ".model");
}

void ModelCache::store(const UnitModel& model) const {
  const std::string bytes = serialize_model(model);
  const auto final_path = path_for(model.unit_id);
  auto tmp = final_path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, final_path);
}

UnitModel ModelCache::load(std::uint32_t unit_id) const {
  const auto path = path_for(unit_id);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("no cached model for unit " + std::to_string(unit_id));
  std::ostringstream ss;
  ss << in.rdbuf();
  UnitModel m = deserialize_model(ss.str());
  if (m.unit_id != unit_id)
    throw CorruptionError(path.string() + " holds the model of unit " +
                          std::to_string(m.unit_id));
  return m;
}

bool ModelCache::contains(std::uint32_t unit_id) const {
  return std::filesystem::exists(path_for(unit_id));
}

std::vector<std::uint32_t> ModelCache::units() const {
  std::vector<std::uint32_t> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    const std::string name = entry.path().filename().string();
    if (!name.starts_with("unit-") || !name.ends_with(".model")) continue;
    const std::string_view digits(name.data() + 5, name.size() - 5 - 6);
    std::uint32_t id = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
    if (ec == std::errc{} && ptr == digits.data() + digits.size()) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fleetmon::detect
