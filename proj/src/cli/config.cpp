#include <algorithm>
#include <charconv>
#include <sstream>

#include "rainmamba/cli.hpp"

namespace rainmamba::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  std::size_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  require(ec == std::errc() && ptr == end, "config: '" + key + "' expects a non-negative integer, got '" + value + "'");
  return v;
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::vector<std::string>& allowed) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            "config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(std::find(allowed.begin(), allowed.end(), key) != allowed.end(),
            "config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    require(std::none_of(kv.begin(), kv.end(), [&](const auto& e) { return e.first == key; }),
            "config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

blocks::ModelConfig model_config_from(const KeyValues& kv) {
  blocks::ModelConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key == "channels") {
      cfg.channels = parse_count(key, value);
      require(cfg.channels >= 1, "config: channels must be >= 1");
    } else if (key == "n1") {
      cfg.cfm.n1 = parse_count(key, value);
    } else if (key == "n2") {
      cfg.cfm.n2 = parse_count(key, value);
    } else if (key == "n3") {
      cfg.cfm.n3 = parse_count(key, value);
    } else if (key == "direction") {
      cfg.cfm.direction = sfc::parse_direction(value);
    } else if (key == "scales") {
      cfg.cfm.scales = parse_count(key, value);
      require(cfg.cfm.scales >= 1 && cfg.cfm.scales <= 4, "config: scales must be in [1, 4]");
    } else {
      throw Error("config: unknown key '" + key + "'");
    }
  }
  return cfg;
}

KeyValues to_key_values(const blocks::ModelConfig& cfg) {
  return {{"channels", std::to_string(cfg.channels)},
          {"n1", std::to_string(cfg.cfm.n1)},
          {"n2", std::to_string(cfg.cfm.n2)},
          {"n3", std::to_string(cfg.cfm.n3)},
          {"direction", std::string(sfc::to_string(cfg.cfm.direction))},
          {"scales", std::to_string(cfg.cfm.scales)}};
}

}  // namespace rainmamba::cli
