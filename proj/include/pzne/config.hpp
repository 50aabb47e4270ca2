// Copyright 2026 The pzne Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

// Flat TOML subset: [section] / [a.b] headers, key = value with strings,
// numbers, booleans and (nested) arrays. Keys are stored as "section.key".

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "pzne/error.hpp"

namespace pzne {

struct ConfigValue;
using ConfigArray = std::vector<ConfigValue>;

struct ConfigValue {
  std::variant<bool, double, std::string, ConfigArray> v;
  std::string literal;  // source text of numbers

  bool is_number() const { return std::holds_alternative<double>(v); }
  bool is_string() const { return std::holds_alternative<std::string>(v); }
  bool is_bool() const { return std::holds_alternative<bool>(v); }
  bool is_array() const { return std::holds_alternative<ConfigArray>(v); }
};

class ConfigDocument {
 public:
  static ConfigDocument parse(const std::string& text, const std::string& origin = "<string>") {
    ConfigDocument doc;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t pos = 0;
      auto fail = [&](const std::string& what) -> void {
        throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": " + what);
      };
      skip_ws(line, pos);
      if (pos >= line.size() || line[pos] == '#') continue;
      if (line[pos] == '[') {
        const auto close = line.find(']', pos);
        if (close == std::string::npos) fail("unterminated section header");
        section = trim(line.substr(pos + 1, close - pos - 1));
        if (section.empty()) fail("empty section name");
        std::size_t after = close + 1;
        skip_ws(line, after);
        if (after < line.size() && line[after] != '#') fail("junk after section header");
        continue;
      }
      const auto eq = line.find('=', pos);
      if (eq == std::string::npos) fail("expected key = value");
      const std::string key = trim(line.substr(pos, eq - pos));
      if (key.empty()) fail("empty key");
      for (char c : key) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) fail("bad key '" + key + "'");
      }
      std::size_t vp = eq + 1;
      // arrays may span lines
      std::string rest = line.substr(vp);
      while (bracket_depth(rest) > 0) {
        std::string more;
        if (!std::getline(in, more)) fail("unterminated array");
        ++lineno;
        rest += "\n" + more;
      }
      std::size_t rp = 0;
      ConfigValue value;
      try {
        value = parse_value(rest, rp);
      } catch (const InvalidArgument& e) {
        fail(e.what());
      }
      skip_ws_nl(rest, rp);
      if (rp < rest.size() && rest[rp] != '#') fail("junk after value");
      const std::string full = section.empty() ? key : section + "." + key;
      if (doc.values_.count(full)) fail("duplicate key '" + full + "'");
      doc.values_[full] = std::move(value);
    }
    return doc;
  }

  static ConfigDocument load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidArgument("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, ConfigValue>& values() const { return values_; }

  const ConfigValue& at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw InvalidArgument("missing config key '" + key + "'");
    return it->second;
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (!v.is_number()) throw InvalidArgument("config key '" + key + "' must be a number");
    return std::get<double>(v.v);
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    if (!has(key)) return fallback;
    const double d = number(key, 0.0);
    if (d != static_cast<double>(static_cast<std::int64_t>(d))) {
      throw InvalidArgument("config key '" + key + "' must be an integer");
    }
    return static_cast<std::int64_t>(d);
  }

  // seeds above 2^53 would not survive a double, so unsigned keys keep the literal
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    const std::string& lit = v.literal;
    if (!v.is_number() || lit.empty() || lit.find_first_not_of("0123456789") != std::string::npos) {
      throw InvalidArgument("config key '" + key + "' must be a non-negative integer");
    }
    try {
      return std::stoull(lit);
    } catch (const std::exception&) {
      throw InvalidArgument("config key '" + key + "' is out of range");
    }
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (!v.is_bool()) throw InvalidArgument("config key '" + key + "' must be true or false");
    return std::get<bool>(v.v);
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (!v.is_string()) throw InvalidArgument("config key '" + key + "' must be a string");
    return std::get<std::string>(v.v);
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (!v.is_array()) throw InvalidArgument("config key '" + key + "' must be an array");
    std::vector<double> out;
    for (const auto& e : std::get<ConfigArray>(v.v)) {
      if (!e.is_number()) throw InvalidArgument("config key '" + key + "' must hold numbers");
      out.push_back(std::get<double>(e.v));
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) const {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (!v.is_array()) throw InvalidArgument("config key '" + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto& e : std::get<ConfigArray>(v.v)) {
      if (!e.is_string()) throw InvalidArgument("config key '" + key + "' must hold strings");
      out.push_back(std::get<std::string>(e.v));
    }
    return out;
  }

  std::vector<std::vector<double>> number_rows(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_array()) throw InvalidArgument("config key '" + key + "' must be an array of arrays");
    std::vector<std::vector<double>> out;
    for (const auto& row : std::get<ConfigArray>(v.v)) {
      if (!row.is_array()) throw InvalidArgument("config key '" + key + "' must be an array of arrays");
      std::vector<double> r;
      for (const auto& e : std::get<ConfigArray>(row.v)) {
        if (!e.is_number()) throw InvalidArgument("config key '" + key + "' must hold numbers");
        r.push_back(std::get<double>(e.v));
      }
      out.push_back(std::move(r));
    }
    return out;
  }

 private:
  std::map<std::string, ConfigValue> values_;

  static void skip_ws(const std::string& s, std::size_t& p) {
    while (p < s.size() && (s[p] == ' ' || s[p] == '\t' || s[p] == '\r')) ++p;
  }

  static void skip_ws_nl(const std::string& s, std::size_t& p) {
    for (;;) {
      while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
      if (p < s.size() && s[p] == '#') {
        while (p < s.size() && s[p] != '\n') ++p;
        continue;
      }
      return;
    }
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  // depth of unclosed '[' outside strings and comments
  static int bracket_depth(const std::string& s) {
    int depth = 0;
    bool str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const char c = s[i];
      if (str) {
        if (c == '\\') ++i;
        else if (c == '"') str = false;
      } else if (c == '"') {
        str = true;
      } else if (c == '#') {
        while (i < s.size() && s[i] != '\n') ++i;
      } else if (c == '[') {
        ++depth;
      } else if (c == ']') {
        --depth;
      }
    }
    return depth;
  }

  static ConfigValue parse_value(const std::string& s, std::size_t& p) {
    skip_ws_nl(s, p);
    if (p >= s.size()) throw InvalidArgument("missing value");
    const char c = s[p];
    if (c == '"') {
      std::string out;
      ++p;
      while (p < s.size() && s[p] != '"') {
        if (s[p] == '\\' && p + 1 < s.size()) {
          ++p;
          switch (s[p]) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            default: out += s[p];
          }
        } else {
          out += s[p];
        }
        ++p;
      }
      if (p >= s.size()) throw InvalidArgument("unterminated string");
      ++p;
      return {out, {}};
    }
    if (c == '[') {
      ++p;
      ConfigArray arr;
      for (;;) {
        skip_ws_nl(s, p);
        if (p < s.size() && s[p] == ']') {
          ++p;
          return {arr, {}};
        }
        arr.push_back(parse_value(s, p));
        skip_ws_nl(s, p);
        if (p < s.size() && s[p] == ',') {
          ++p;
          continue;
        }
        if (p < s.size() && s[p] == ']') {
          ++p;
          return {arr, {}};
        }
        throw InvalidArgument("expected ',' or ']' in array");
      }
    }
    if (s.compare(p, 4, "true") == 0) {
      p += 4;
      return {true, {}};
    }
    if (s.compare(p, 5, "false") == 0) {
      p += 5;
      return {false, {}};
    }
    std::size_t end = p;
    while (end < s.size() && (std::isalnum(static_cast<unsigned char>(s[end])) || s[end] == '.' || s[end] == '-' ||
                              s[end] == '+' || s[end] == '_')) {
      ++end;
    }
    std::string tok = s.substr(p, end - p);
    tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
    if (tok.empty()) throw InvalidArgument("bad value");
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("bad number '" + tok + "'");
    }
    if (used != tok.size()) throw InvalidArgument("bad number '" + tok + "'");
    p = end;
    return {d, tok};
  }
};

}  // namespace pzne
