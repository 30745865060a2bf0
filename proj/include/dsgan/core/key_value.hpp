#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dsgan {

// Ordered `key = value` text. One entry per line, '#' starts a comment line,
// surrounding whitespace is trimmed. Insertion order is preserved so that
// formatting a parsed document reproduces it byte for byte.
class KeyValueText {
 public:
  static KeyValueText parse(std::string_view text);
  std::string format() const;

  void set(std::string key, std::string value);
  std::optional<std::string> get(std::string_view key) const;
  // Throws FormatError when the key is absent.
  const std::string& require(std::string_view key) const;
  bool contains(std::string_view key) const { return get(key).has_value(); }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  bool operator==(const KeyValueText&) const = default;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string format_double(double v);

}  // namespace dsgan
