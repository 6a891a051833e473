#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sparsedyn::cli {

/// Bad configuration: unknown key, malformed line, value out of bounds.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class KeyType { integer, real, text, boolean, reals, texts, path };

struct KeySpec {
  std::string name;
  KeyType type = KeyType::text;
  std::string fallback;             // default value as text; empty = unset
  double min = -1e300;              // numeric bounds (inclusive), per element for lists
  double max = 1e300;
  std::vector<std::string> choices; // allowed values for text keys
  std::string help;
};

/// Keyed parameters from a `key = value` file and command-line flags.
/// Flags win over the file, the file over defaults. Every value remembers
/// where it came from so diagnostics can point at a line.
class Config {
 public:
  explicit Config(std::vector<KeySpec> schema);

  const std::vector<KeySpec>& schema() const { return schema_; }

  /// Reads `key = value` lines; '#' starts a comment. Unknown keys and lines
  /// without '=' are rejected with the file name and line number.
  void load_file(const std::string& path);
  void load_text(const std::string& text, const std::string& source);

  /// Flag override.
  void set(const std::string& key, const std::string& value, const std::string& source = "flag");

  /// Type and bound checks for every key with a value; paths must exist.
  void validate() const;

  bool has(const std::string& key) const;   // set by file or flag
  bool empty(const std::string& key) const; // no value at all (not even a default)
  std::string text(const std::string& key) const;
  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::string> texts(const std::string& key) const;

  /// Effective values (defaults included), sorted by key.
  std::vector<std::pair<std::string, std::string>> echo() const;

 private:
  struct Value {
    std::string text;
    std::string source;
  };

  const KeySpec& spec(const std::string& key) const;
  const Value* find(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& why) const;

  std::vector<KeySpec> schema_;
  std::map<std::string, Value> values_;
};

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

}  // namespace sparsedyn::cli
