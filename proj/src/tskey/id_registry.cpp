// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#include "fleetmon/tskey/id_registry.hpp"

#include <mutex>

#include "fleetmon/error.hpp"

namespace fleetmon::tskey {

namespace {

std::string_view kind_name(IdKind kind) {
  switch (kind) {
    case IdKind::kMetric: return "metric";
    case IdKind::kTagName: return "tag name";
    case IdKind::kTagValue: return "tag value";
  }
  return "?";
}

}  // namespace

IdRegistry::IdRegistry(UniqueId max_id) : max_id_(max_id) {
  if (max_id_ == 0 || max_id_ > kMaxThreeByteId)
    throw ConfigError("id registry max_id must be in [1, 2^24)");
}

UniqueId IdRegistry::get_or_assign(IdKind kind, std::string_view name) {
  {
    std::shared_lock lock(mutex_);
    const Table& t = table(kind);
    if (auto it = t.by_name.find(std::string(name)); it != t.by_name.end())
      return it->second;
  }
  std::unique_lock lock(mutex_);
  Table& t = table(kind);
  if (auto it = t.by_name.find(std::string(name)); it != t.by_name.end())
    return it->second;
  if (t.by_id.size() >= max_id_)
    throw CapacityError(std::string(kind_name(kind)) +
                        " id space exhausted at " + std::to_string(max_id_));
  const auto id = static_cast<UniqueId>(t.by_id.size() + 1);
  t.by_id.emplace_back(name);
  t.by_name.emplace(t.by_id.back(), id);
  if (listener_) listener_(kind, id, name);
  return id;
}

std::optional<UniqueId> IdRegistry::find(IdKind kind,
                                         std::string_view name) const {
  std::shared_lock lock(mutex_);
  const Table& t = table(kind);
  if (auto it = t.by_name.find(std::string(name)); it != t.by_name.end())
    return it->second;
  return std::nullopt;
}

std::optional<std::string> IdRegistry::name(IdKind kind, UniqueId id) const {
  std::shared_lock lock(mutex_);
  const Table& t = table(kind);
  if (id == 0 || id > t.by_id.size()) return std::nullopt;
  return t.by_id[id - 1];
}

std::size_t IdRegistry::size(IdKind kind) const {
  std::shared_lock lock(mutex_);
  return table(kind).by_id.size();
}

void IdRegistry::restore(IdKind kind, UniqueId id, std::string_view name) {
  std::unique_lock lock(mutex_);
  Table& t = table(kind);
  if (id != t.by_id.size() + 1)
    throw CorruptionError("registry restore out of order: " +
                          std::string(kind_name(kind)) + " id " +
                          std::to_string(id));
  if (id > max_id_) throw CapacityError("restored id exceeds id width");
  if (t.by_name.contains(std::string(name)))
    throw CorruptionError("registry restore duplicates name '" +
                          std::string(name) + "'");
  t.by_id.emplace_back(name);
  t.by_name.emplace(t.by_id.back(), id);
}

void IdRegistry::set_listener(AssignListener listener) {
  std::unique_lock lock(mutex_);
  listener_ = std::move(listener);
}

}  // namespace fleetmon::tskey
