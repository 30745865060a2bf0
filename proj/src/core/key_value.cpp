#include "dsgan/core/key_value.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "dsgan/core/error.hpp"

namespace dsgan {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueText KeyValueText::parse(std::string_view text) {
  KeyValueText out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw FormatError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw FormatError("line " + std::to_string(line_no) + ": empty key");
    if (out.contains(key)) throw FormatError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    out.entries_.emplace_back(key, std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

std::string KeyValueText::format() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void KeyValueText::set(std::string key, std::string value) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const auto& e) { return e.first == key; });
  if (it != entries_.end())
    it->second = std::move(value);
  else
    entries_.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> KeyValueText::get(std::string_view key) const {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const auto& e) { return e.first == key; });
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

const std::string& KeyValueText::require(std::string_view key) const {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const auto& e) { return e.first == key; });
  if (it == entries_.end()) throw FormatError("missing key '" + std::string(key) + "'");
  return it->second;
}

// Shortest representation that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace dsgan
