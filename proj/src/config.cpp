#include "crrl/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "crrl/errors.hpp"

namespace crrl {

const ConfigValue* ConfigTable::find(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

void ConfigTable::fail(const ConfigValue& at, const std::string& what) const {
  throw ConfigError(source_, at.line, what);
}

const ConfigValue& ConfigTable::at(const std::string& key) const {
  if (const auto* v = find(key)) return *v;
  const std::string where = name_.empty() ? std::string("top level") : "[" + name_ + "]";
  throw ConfigError(source_, line_, "missing key '" + key + "' in " + where);
}

std::int64_t config_to_int(const ConfigTable& table, const ConfigValue& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value.data)) return *i;
  if (const auto* d = std::get_if<double>(&value.data)) {
    if (std::isfinite(*d) && std::floor(*d) == *d && std::abs(*d) < 9.0e18) {
      return static_cast<std::int64_t>(*d);
    }
  }
  table.fail(value, "expected an integer");
}

double config_to_double(const ConfigTable& table, const ConfigValue& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value.data)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&value.data)) return *d;
  table.fail(value, "expected a number");
}

std::int64_t ConfigTable::get_int(const std::string& key) const { return config_to_int(*this, at(key)); }

double ConfigTable::get_double(const std::string& key) const { return config_to_double(*this, at(key)); }

std::string ConfigTable::get_string(const std::string& key) const {
  const auto& v = at(key);
  if (const auto* s = std::get_if<std::string>(&v.data)) return *s;
  fail(v, "expected a string for '" + key + "'");
}

bool ConfigTable::get_bool(const std::string& key) const {
  const auto& v = at(key);
  if (const auto* b = std::get_if<bool>(&v.data)) return *b;
  fail(v, "expected true or false for '" + key + "'");
}

const ConfigValue::Array& ConfigTable::get_array(const std::string& key) const {
  const auto& v = at(key);
  if (const auto* a = std::get_if<ConfigValue::Array>(&v.data)) return *a;
  fail(v, "expected an array for '" + key + "'");
}

std::optional<std::int64_t> ConfigTable::optional_int(const std::string& key) const {
  if (!contains(key)) return std::nullopt;
  return get_int(key);
}

std::optional<double> ConfigTable::optional_double(const std::string& key) const {
  if (!contains(key)) return std::nullopt;
  return get_double(key);
}

std::optional<std::string> ConfigTable::optional_string(const std::string& key) const {
  if (!contains(key)) return std::nullopt;
  return get_string(key);
}

std::optional<bool> ConfigTable::optional_bool(const std::string& key) const {
  if (!contains(key)) return std::nullopt;
  return get_bool(key);
}

std::vector<double> ConfigTable::get_number_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : get_array(key)) {
    if (!item.is_number()) fail(item, "expected a number in '" + key + "'");
    out.push_back(config_to_double(*this, item));
  }
  return out;
}

void ConfigTable::expect_only(std::initializer_list<std::string_view> allowed) const {
  for (const auto& [key, value] : values_) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) fail(value, "unknown key '" + key + "'");
  }
}

const ConfigTable* ConfigDocument::section(std::string_view name) const {
  for (const auto& t : tables_) {
    if (t.name() == name) return &t;
  }
  return nullptr;
}

class ConfigParser {
 public:
  ConfigParser(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  ConfigDocument parse() {
    ConfigDocument doc;
    doc.source_ = source_;
    doc.tables_.emplace_back(source_, "", 1);
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        parse_header(doc);
      } else {
        parse_assignment(doc.tables_.back());
      }
    }
    return doc;
  }

 private:
  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void error(const std::string& what) const { throw ConfigError(source_, line_, what); }

  void advance() {
    if (text_[pos_] == '\n') ++line_;
    ++pos_;
  }

  void skip_inline_space() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }

  void skip_comment() {
    if (!eof() && peek() == '#') {
      while (!eof() && peek() != '\n') advance();
    }
  }

  // whitespace, newlines and comments
  void skip_blank_lines() {
    while (!eof()) {
      skip_inline_space();
      skip_comment();
      if (!eof() && peek() == '\n') {
        advance();
        continue;
      }
      break;
    }
  }

  void expect_line_end() {
    skip_inline_space();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') error(std::string("unexpected character '") + peek() + "' after value");
    advance();
  }

  static bool is_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string parse_key() {
    const std::size_t start = pos_;
    while (!eof() && is_key_char(peek())) advance();
    if (start == pos_) error("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  void parse_header(ConfigDocument& doc) {
    const std::size_t header_line = line_;
    advance();  // '['
    skip_inline_space();
    std::string name = parse_key();
    skip_inline_space();
    if (eof() || peek() != ']') error("expected ']' to close section header");
    advance();
    for (const auto& t : doc.tables_) {
      if (t.name() == name) error("duplicate section [" + name + "]");
    }
    doc.tables_.emplace_back(source_, name, header_line);
    expect_line_end();
  }

  void parse_assignment(ConfigTable& table) {
    const std::size_t key_line = line_;
    std::string key = parse_key();
    skip_inline_space();
    if (eof() || peek() != '=') error("expected '=' after key '" + key + "'");
    advance();
    skip_inline_space();
    ConfigValue value = parse_value();
    if (table.values_.count(key) != 0) {
      throw ConfigError(source_, key_line, "duplicate key '" + key + "'");
    }
    table.values_.emplace(std::move(key), std::move(value));
    expect_line_end();
  }

  ConfigValue parse_value() {
    if (eof() || peek() == '\n' || peek() == '#') error("expected a value");
    const std::size_t value_line = line_;
    const char c = peek();
    if (c == '"') return ConfigValue{parse_string(), value_line};
    if (c == '\'') return ConfigValue{parse_literal_string(), value_line};
    if (c == '[') return ConfigValue{parse_array(), value_line};
    if (text_.substr(pos_, 4) == "true" && !continues_word(pos_ + 4)) {
      for (int i = 0; i < 4; ++i) advance();
      return ConfigValue{true, value_line};
    }
    if (text_.substr(pos_, 5) == "false" && !continues_word(pos_ + 5)) {
      for (int i = 0; i < 5; ++i) advance();
      return ConfigValue{false, value_line};
    }
    return parse_number();
  }

  bool continues_word(std::size_t at) const { return at < text_.size() && is_key_char(text_[at]); }

  std::string parse_string() {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') error("unterminated string");
      char c = peek();
      advance();
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) error("unterminated escape");
        char e = peek();
        advance();
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: error(std::string("unknown escape '\\") + e + "'");
        }
        continue;
      }
      out.push_back(c);
    }
    return out;
  }

  // 'text' with no escapes.
  std::string parse_literal_string() {
    advance();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') error("unterminated string");
      const char c = peek();
      advance();
      if (c == '\'') return out;
      out.push_back(c);
    }
  }

  ConfigValue::Array parse_array() {
    advance();  // '['
    ConfigValue::Array out;
    while (true) {
      skip_blank_lines();
      if (eof()) error("unterminated array");
      if (peek() == ']') {
        advance();
        return out;
      }
      out.push_back(parse_value());
      skip_blank_lines();
      if (eof()) error("unterminated array");
      if (peek() == ',') {
        advance();
      } else if (peek() != ']') {
        error(std::string("expected ',' or ']' in array, found '") + peek() + "'");
      }
    }
  }

  ConfigValue parse_number() {
    const std::size_t value_line = line_;
    const std::size_t start = pos_;
    while (!eof()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-' || c == '_') {
        advance();
      } else {
        break;
      }
    }
    std::string token(text_.substr(start, pos_ - start));
    std::string digits;
    for (char c : token) {
      if (c != '_') digits.push_back(c);
    }
    if (digits.empty()) error("expected a value");
    const char* first = digits.data();
    const char* last = digits.data() + digits.size();
    if (*first == '+') ++first;
    const bool looks_float = digits.find_first_of(".eE") != std::string::npos ||
                             digits == "inf" || digits == "nan";
    if (!looks_float) {
      std::int64_t i = 0;
      auto [ptr, ec] = std::from_chars(first, last, i);
      if (ec == std::errc() && ptr == last) return ConfigValue{i, value_line};
    }
    double d = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, d);
    if (ec != std::errc() || ptr != last) error("invalid value '" + token + "'");
    return ConfigValue{d, value_line};
  }

  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

ConfigDocument parse_config(std::string_view text, std::string source) {
  return ConfigParser(text, std::move(source)).parse();
}

ConfigDocument parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

}  // namespace crrl
