#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "wsvae/corpus.hpp"  // ConfigError

namespace wsvae {

/// Flat typed key-value configuration with [section] headers. Keys are
/// addressed as "section.name". Serialization is sorted, so equal configs
/// serialize to byte-equal text.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  void merge_from(const KeyValueConfig& other);  // other wins

  std::string get_string(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::int64_t get_i64(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Throws ConfigError when a key outside `known` is present.
  void require_known(const std::set<std::string>& known) const;

  std::string serialize() const;
  std::uint64_t hash() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace wsvae
