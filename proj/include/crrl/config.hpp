#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace crrl {

/// A value in a key/value config file. Every value remembers the line it
/// started on so that semantic errors can point back into the file.
struct ConfigValue {
  using Array = std::vector<ConfigValue>;
  std::variant<bool, std::int64_t, double, std::string, Array> data;
  std::size_t line = 0;

  bool is_number() const noexcept {
    return std::holds_alternative<std::int64_t>(data) || std::holds_alternative<double>(data);
  }
  bool is_array() const noexcept { return std::holds_alternative<Array>(data); }
};

/// Keys of one [section]; the unnamed top-level section is "".
class ConfigTable {
 public:
  ConfigTable(std::string source, std::string name, std::size_t line)
      : source_(std::move(source)), name_(std::move(name)), line_(line) {}

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const ConfigValue* find(const std::string& key) const;
  const ConfigValue& at(const std::string& key) const;

  // Typed accessors. Missing keys and type mismatches throw ConfigError with a line.
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  const ConfigValue::Array& get_array(const std::string& key) const;

  std::optional<std::int64_t> optional_int(const std::string& key) const;
  std::optional<double> optional_double(const std::string& key) const;
  std::optional<std::string> optional_string(const std::string& key) const;
  std::optional<bool> optional_bool(const std::string& key) const;

  /// Numbers of a flat array, in order.
  std::vector<double> get_number_list(const std::string& key) const;

  /// Rejects keys outside `allowed`.
  void expect_only(std::initializer_list<std::string_view> allowed) const;

  const std::string& name() const noexcept { return name_; }
  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }
  const std::map<std::string, ConfigValue>& values() const noexcept { return values_; }

  [[noreturn]] void fail(const ConfigValue& at, const std::string& what) const;

 private:
  friend class ConfigParser;
  std::string source_;
  std::string name_;
  std::size_t line_;
  std::map<std::string, ConfigValue> values_;
};

class ConfigDocument {
 public:
  const ConfigTable& root() const { return tables_.front(); }
  const ConfigTable* section(std::string_view name) const;
  const std::vector<ConfigTable>& tables() const noexcept { return tables_; }
  const std::string& source() const noexcept { return source_; }

 private:
  friend class ConfigParser;
  std::string source_;
  std::vector<ConfigTable> tables_;
};

/// Parses a TOML-style subset: `# comments`, `[section]` headers, and
/// `key = value` with booleans, integers, floats, double-quoted strings and
/// (possibly nested, multi-line) arrays. Throws ConfigError naming the line.
ConfigDocument parse_config(std::string_view text, std::string source = "<config>");
ConfigDocument parse_config_file(const std::string& path);

/// Integer value of a number node, rejecting non-integral floats.
std::int64_t config_to_int(const ConfigTable& table, const ConfigValue& value);
double config_to_double(const ConfigTable& table, const ConfigValue& value);

}  // namespace crrl
