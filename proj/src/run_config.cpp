#include "crcgram/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "crcgram/errors.hpp"

namespace crcgram {

namespace {
std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}
}  // namespace

std::string normalize_key(std::string_view key) {
  std::string out(key);
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

RunConfig RunConfig::parse(std::string_view text, std::string_view source) {
  RunConfig cfg;
  cfg.source = std::string(source);
  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = cfg.source + ":" + std::to_string(line_no);
    require(eq != std::string_view::npos, ErrorCode::config_error, where + ": expected 'key = value'");
    const std::string key = normalize_key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorCode::config_error, where + ": empty key");
    require(!value.empty(), ErrorCode::config_error, where + ": empty value for '" + key + "'");
    const bool fresh = cfg.entries.emplace(key, Entry{std::string(value), line_no}).second;
    require(fresh, ErrorCode::config_error, where + ": key '" + key + "' given twice");
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), ErrorCode::config_error, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path.string());
}

}  // namespace crcgram
