#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace augkd::config {

/// Flat key=value run configuration. Lines are `key = value`, `#` starts a
/// comment. Readers mark keys as consumed so typos can be rejected
/// wholesale via require_all_consumed().
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get_str(const std::string& key, const std::string& fallback) const;
  std::string get_str_required(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      std::vector<double> fallback) const;

  void require_all_consumed() const;

  /// Sorted key=value serialization; input to the run digest.
  std::string canonical() const;
  /// FNV-1a hash of the canonical form, hex.
  std::string digest() const;

 private:
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> consumed_;
  std::string origin_ = "<empty>";
};

std::string fnv1a_hex(const std::string& data);

}  // namespace augkd::config
