#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace clevr {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Flat key -> value settings, as read from `key=value` lines or a flat JSON object.
using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Accepts a JSON object (text starting with '{') or `key=value` lines / comma lists.
inline ConfigMap parse_config_text(std::string_view text) {
  ConfigMap out;
  const std::string_view body = detail::trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config JSON: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) {
      out[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    return out;
  }
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t end = body.find_first_of(",\n", pos);
    if (end == std::string_view::npos) end = body.size();
    std::string_view item = body.substr(pos, end - pos);
    if (auto hash = item.find('#'); hash != std::string_view::npos) item = item.substr(0, hash);
    item = detail::trim(item);
    if (!item.empty()) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("config entry without '=': " + std::string(item));
      }
      out[std::string(detail::trim(item.substr(0, eq)))] = std::string(detail::trim(item.substr(eq + 1)));
    }
    pos = end + 1;
  }
  return out;
}

inline ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

/// Consumes recognised keys from a ConfigMap; leftovers are reported as unknown.
class ConfigReader {
 public:
  explicit ConfigReader(ConfigMap map) : map_(std::move(map)) {}

  template <typename T>
  void read(const std::string& key, T& target) {
    auto it = map_.find(key);
    if (it == map_.end()) return;
    const std::string value = it->second;
    map_.erase(it);
    if constexpr (std::is_same_v<T, std::string>) {
      target = value;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (value == "true" || value == "1") target = true;
      else if (value == "false" || value == "0") target = false;
      else throw ConfigError("config key '" + key + "' expects a boolean, got '" + value + "'");
    } else if constexpr (std::is_floating_point_v<T>) {
      try {
        std::size_t used = 0;
        target = static_cast<T>(std::stod(value, &used));
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
      }
    } else {
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), target);
      if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("config key '" + key + "' expects an integer, got '" + value + "'");
      }
    }
  }

  void finish() const {
    if (!map_.empty()) throw ConfigError("unknown config key '" + map_.begin()->first + "'");
  }

 private:
  ConfigMap map_;
};

}  // namespace clevr
