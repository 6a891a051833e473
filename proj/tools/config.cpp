#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sparsedyn::cli {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

namespace {

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  const auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e && std::isfinite(out);
}

bool parse_int(const std::string& s, std::int64_t& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  const auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e;
}

bool parse_bool(const std::string& s, bool& out) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return out = true, true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return out = false, true;
  return false;
}

std::string fmt_bound(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

Config::Config(std::vector<KeySpec> schema) : schema_(std::move(schema)) {}

const KeySpec& Config::spec(const std::string& key) const {
  for (const auto& s : schema_)
    if (s.name == key) return s;
  throw ConfigError("unknown key '" + key + "'");
}

const Config::Value* Config::find(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

void Config::fail(const std::string& key, const std::string& why) const {
  const Value* v = find(key);
  const std::string where = v ? v->source : "default";
  if (where == "--" + key) throw ConfigError(where + ": " + why);
  throw ConfigError(where + ": " + key + ": " + why);
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  load_text(buf.str(), path);
}

void Config::load_text(const std::string& text, const std::string& source) {
  std::istringstream is(text);
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(number);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": missing key");
    if (std::none_of(schema_.begin(), schema_.end(), [&](const KeySpec& s) { return s.name == key; }))
      throw ConfigError(where + ": unknown key '" + key + "'");
    values_[key] = {value, where};
  }
}

void Config::set(const std::string& key, const std::string& value, const std::string& source) {
  spec(key);
  values_[key] = {value, source};
}

bool Config::has(const std::string& key) const {
  spec(key);
  return find(key) != nullptr;
}

bool Config::empty(const std::string& key) const { return text(key).empty(); }

std::string Config::text(const std::string& key) const {
  const KeySpec& s = spec(key);
  const Value* v = find(key);
  return v ? v->text : s.fallback;
}

double Config::real(const std::string& key) const {
  double out = 0.0;
  if (!parse_double(text(key), out)) fail(key, "expected a number, got '" + text(key) + "'");
  return out;
}

std::int64_t Config::integer(const std::string& key) const {
  std::int64_t out = 0;
  if (!parse_int(text(key), out)) fail(key, "expected an integer, got '" + text(key) + "'");
  return out;
}

bool Config::boolean(const std::string& key) const {
  bool out = false;
  if (!parse_bool(text(key), out)) fail(key, "expected true or false, got '" + text(key) + "'");
  return out;
}

std::vector<double> Config::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(text(key), ',')) {
    double v = 0.0;
    if (!parse_double(item, v)) fail(key, "expected a comma-separated list of numbers, got '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::texts(const std::string& key) const { return split(text(key), ','); }

void Config::validate() const {
  for (const auto& s : schema_) {
    const std::string value = text(s.name);
    if (value.empty()) continue;
    const auto bounded = [&](double v) {
      if (v < s.min || v > s.max)
        fail(s.name, "value " + fmt_bound(v) + " outside [" + fmt_bound(s.min) + ", " + fmt_bound(s.max) + "]");
    };
    switch (s.type) {
      case KeyType::integer:
        bounded(static_cast<double>(integer(s.name)));
        break;
      case KeyType::real:
        bounded(real(s.name));
        break;
      case KeyType::reals:
        for (double v : reals(s.name)) bounded(v);
        break;
      case KeyType::boolean:
        boolean(s.name);
        break;
      case KeyType::path:
        if (!std::filesystem::exists(value)) fail(s.name, "no such file '" + value + "'");
        break;
      case KeyType::text:
        if (!s.choices.empty() && std::find(s.choices.begin(), s.choices.end(), value) == s.choices.end()) {
          std::string list;
          for (const auto& c : s.choices) list += (list.empty() ? "" : ", ") + c;
          fail(s.name, "'" + value + "' is not one of " + list);
        }
        break;
      case KeyType::texts:
        if (!s.choices.empty())
          for (const auto& item : texts(s.name))
            if (std::find(s.choices.begin(), s.choices.end(), item) == s.choices.end())
              fail(s.name, "unknown entry '" + item + "'");
        break;
    }
  }
}

std::vector<std::pair<std::string, std::string>> Config::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : schema_) out.emplace_back(s.name, text(s.name));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace sparsedyn::cli
