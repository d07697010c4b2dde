#pragma once

// `key = value` run configuration files. Blank lines and `#` comments are
// ignored; keys are case-sensitive and `_` is read as `-` so that file keys
// match command-line flag names.

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace crcgram {

struct RunConfig {
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  std::map<std::string, Entry> entries;
  std::string source;

  /// ConfigError on malformed lines or repeated keys.
  static RunConfig parse(std::string_view text, std::string_view source = "<memory>");
  static RunConfig load(const std::filesystem::path& path);

  bool contains(std::string_view key) const { return entries.count(std::string(key)) > 0; }
};

std::string normalize_key(std::string_view key);

}  // namespace crcgram
