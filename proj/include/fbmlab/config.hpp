#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fbmlab/core.hpp"

namespace fbmlab {

// Structured plain-text experiment recipes: named sections, typed scalars and
// arrays.
//
//   # comment
//   seed = 42
//   [fields]
//   V1 = ["1 + 0.5*sin(x1)"]
//   t_list = [0.25, 0.5, 1.0]

struct ConfigValue {
  enum class Kind { number, boolean, text, number_list, text_list };
  Kind kind = Kind::number;
  double number = 0.0;
  bool boolean = false;
  std::string text;
  std::vector<double> numbers;
  std::vector<std::string> texts;
};

class Config {
 public:
  static Config parse(const std::string& content) {
    Config cfg;
    cfg.raw_ = content;
    std::istringstream in(content);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string trimmed = trim(strip_comment(line));
      if (trimmed.empty()) continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']')
          throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        if (section.empty())
          throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
        cfg.sections_[section];
        continue;
      }
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError("line " + std::to_string(line_no) + ": empty key");
      cfg.sections_[section][key] = parse_value(value, line_no);
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  const ConfigValue& get(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end())
      throw ConfigError("missing config section [" + section + "]");
    const auto k = s->second.find(key);
    if (k == s->second.end())
      throw ConfigError("missing config key '" + key + "' in section [" + section + "]");
    return k->second;
  }

  double number(const std::string& section, const std::string& key) const {
    const ConfigValue& v = get(section, key);
    if (v.kind != ConfigValue::Kind::number)
      throw ConfigError("config key '" + key + "' is not a number");
    return v.number;
  }
  double number_or(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
  }
  std::int64_t integer(const std::string& section, const std::string& key) const {
    const double v = number(section, key);
    const auto i = static_cast<std::int64_t>(v);
    if (static_cast<double>(i) != v)
      throw ConfigError("config key '" + key + "' is not an integer");
    return i;
  }
  std::int64_t integer_or(const std::string& section, const std::string& key,
                          std::int64_t fallback) const {
    return has(section, key) ? integer(section, key) : fallback;
  }
  bool boolean_or(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const ConfigValue& v = get(section, key);
    if (v.kind != ConfigValue::Kind::boolean)
      throw ConfigError("config key '" + key + "' is not a boolean");
    return v.boolean;
  }
  std::string text(const std::string& section, const std::string& key) const {
    const ConfigValue& v = get(section, key);
    if (v.kind != ConfigValue::Kind::text)
      throw ConfigError("config key '" + key + "' is not a string");
    return v.text;
  }
  std::string text_or(const std::string& section, const std::string& key,
                      const std::string& fallback) const {
    return has(section, key) ? text(section, key) : fallback;
  }
  std::vector<double> numbers(const std::string& section, const std::string& key) const {
    const ConfigValue& v = get(section, key);
    if (v.kind == ConfigValue::Kind::number) return {v.number};
    if (v.kind != ConfigValue::Kind::number_list)
      throw ConfigError("config key '" + key + "' is not a numeric array");
    return v.numbers;
  }
  std::vector<std::string> texts(const std::string& section, const std::string& key) const {
    const ConfigValue& v = get(section, key);
    if (v.kind == ConfigValue::Kind::text) return {v.text};
    if (v.kind != ConfigValue::Kind::text_list)
      throw ConfigError("config key '" + key + "' is not a string array");
    return v.texts;
  }

  /// FNV-1a fingerprint of the raw recipe bytes.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : raw_) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  const std::string& raw() const { return raw_; }

 private:
  static std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
  }
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  static ConfigValue parse_value(const std::string& value, std::size_t line_no) {
    ConfigValue v;
    if (value.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty value");
    if (value == "true" || value == "false") {
      v.kind = ConfigValue::Kind::boolean;
      v.boolean = value == "true";
      return v;
    }
    if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"')
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
      v.kind = ConfigValue::Kind::text;
      v.text = value.substr(1, value.size() - 2);
      return v;
    }
    if (value.front() == '[') {
      if (value.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated array");
      const std::string body = value.substr(1, value.size() - 2);
      // split on commas outside quotes
      std::vector<std::string> items;
      std::string cur;
      bool quoted = false;
      for (char c : body) {
        if (c == '"') quoted = !quoted;
        if (c == ',' && !quoted) {
          items.push_back(trim(cur));
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      if (!trim(cur).empty() || !items.empty()) items.push_back(trim(cur));
      if (!items.empty() && items.back().empty()) items.pop_back();
      const bool strings = !items.empty() && !items.front().empty() && items.front().front() == '"';
      if (strings) {
        v.kind = ConfigValue::Kind::text_list;
        for (const auto& item : items) {
          if (item.size() < 2 || item.front() != '"' || item.back() != '"')
            throw ConfigError("line " + std::to_string(line_no) + ": bad string array element");
          v.texts.push_back(item.substr(1, item.size() - 2));
        }
      } else {
        v.kind = ConfigValue::Kind::number_list;
        for (const auto& item : items) {
          std::size_t used = 0;
          try {
            v.numbers.push_back(std::stod(item, &used));
          } catch (const std::exception&) {
            throw ConfigError("line " + std::to_string(line_no) + ": bad number '" + item + "'");
          }
          if (used != item.size())
            throw ConfigError("line " + std::to_string(line_no) + ": bad number '" + item + "'");
        }
      }
      return v;
    }
    std::size_t used = 0;
    try {
      v.number = std::stod(value, &used);
    } catch (const std::exception&) {
      throw ConfigError("line " + std::to_string(line_no) + ": bad value '" + value + "'");
    }
    if (used != value.size())
      throw ConfigError("line " + std::to_string(line_no) + ": bad value '" + value + "'");
    v.kind = ConfigValue::Kind::number;
    return v;
  }

  std::map<std::string, std::map<std::string, ConfigValue>> sections_;
  std::string raw_;
};

}  // namespace fbmlab
