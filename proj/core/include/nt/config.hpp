#pragma once

#include <map>
#include <string>
#include <vector>

namespace nt {

// Line-oriented `key = value` configuration text. '#' starts a comment.
// Unknown keys are kept (callers decide what they need).
class Config {
 public:
  Config() = default;
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  std::string get_str(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  int64_t get_int(const std::string& key, int64_t def) const;
  bool get_bool(const std::string& key, bool def) const;
  // whitespace-separated list value
  std::vector<std::string> get_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return kv_; }
  // all keys with the given prefix ("band.", "energy.")
  std::vector<std::pair<std::string, std::string>> with_prefix(const std::string& prefix) const;

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace nt
