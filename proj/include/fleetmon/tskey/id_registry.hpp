// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fleetmon::tskey {

using UniqueId = std::uint32_t;

enum class IdKind : std::uint8_t { kMetric = 0, kTagName = 1, kTagValue = 2 };

inline constexpr UniqueId kMaxThreeByteId = (1u << 24) - 1;

/// String <-> fixed-width id tables, one namespace per IdKind. Ids start at 1
/// and are handed out monotonically; once assigned they never change.
class IdRegistry {
 public:
  /// Invoked (under the registry lock) whenever a new id is assigned.
  using AssignListener =
      std::function<void(IdKind, UniqueId, std::string_view)>;

  explicit IdRegistry(UniqueId max_id = kMaxThreeByteId);

  IdRegistry(const IdRegistry&) = delete;
  IdRegistry& operator=(const IdRegistry&) = delete;

  /// Throws CapacityError when the namespace is full.
  UniqueId get_or_assign(IdKind kind, std::string_view name);

  std::optional<UniqueId> find(IdKind kind, std::string_view name) const;
  std::optional<std::string> name(IdKind kind, UniqueId id) const;
  std::size_t size(IdKind kind) const;

  /// Re-installs a persisted mapping. Ids must arrive in increasing order.
  void restore(IdKind kind, UniqueId id, std::string_view name);

  void set_listener(AssignListener listener);

 private:
  struct Table {
    std::unordered_map<std::string, UniqueId> by_name;
    std::vector<std::string> by_id;  // index = id - 1
  };

  Table& table(IdKind kind) { return tables_[static_cast<int>(kind)]; }
  const Table& table(IdKind kind) const {
    return tables_[static_cast<int>(kind)];
  }

  UniqueId max_id_;
  mutable std::shared_mutex mutex_;
  Table tables_[3];
  AssignListener listener_;
};

}  // namespace fleetmon::tskey
