#pragma once

// Reader for the subset of TOML used by the configuration files: tables,
// dotted keys, strings, numbers (incl. inf/nan), booleans, arrays and inline
// tables. Array-of-tables and dates are rejected.

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bdac/error.hpp"
#include "json.hpp"

namespace bdac::toml {

using nlohmann::json;

struct Document {
  json root = json::object();
  // Source line of every key, by dotted path.
  std::map<std::string, int> lines;

  int line_of(const std::string& path) const {
    const auto it = lines.find(path);
    return it == lines.end() ? 0 : it->second;
  }
};

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  Document parse() {
    Document doc;
    std::vector<std::string> table;
    std::set<std::string> headers;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++i_;
        if (peek() == '[') fail("arrays of tables are not supported");
        skip_ws();
        table = parse_key();
        skip_ws();
        expect(']');
        if (!headers.insert(join({}, table)).second) fail("table '" + join({}, table) + "' defined twice");
        json* node = &doc.root;
        std::string path;
        for (const auto& k : table) {
          path += (path.empty() ? "" : ".") + k;
          json& child = (*node)[k];
          if (child.is_null()) {
            child = json::object();
            doc.lines.emplace(path, line_);
          } else if (!child.is_object()) {
            fail("'" + path + "' is not a table");
          }
          node = &child;
        }
        end_of_line();
        continue;
      }
      auto key = parse_key();
      skip_ws();
      expect('=');
      skip_ws();
      const int line = line_;
      json value = parse_value(doc, join(table, key));
      assign(doc, table, key, std::move(value), line);
      end_of_line();
    }
    return doc;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what, {}, line_); }

  bool eof() const noexcept { return i_ >= s_.size(); }
  char peek() const noexcept { return eof() ? '\0' : s_[i_]; }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++i_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++i_;
    }
  }

  void newline() {
    if (peek() == '\r') ++i_;
    if (peek() == '\n') {
      ++i_;
      ++line_;
    }
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        newline();
      } else {
        break;
      }
    }
  }

  // Whitespace, comments and newlines inside arrays and inline tables.
  void skip_all() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        newline();
      } else {
        return;
      }
    }
  }

  void end_of_line() {
    skip_ws();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n' && peek() != '\r') fail("unexpected text after value");
    newline();
  }

  static std::string join(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::string out;
    for (const auto* v : {&a, &b}) {
      for (const auto& k : *v) out += (out.empty() ? "" : ".") + k;
    }
    return out;
  }

  std::vector<std::string> parse_key() {
    std::vector<std::string> parts;
    while (true) {
      skip_ws();
      if (peek() == '"') {
        parts.push_back(parse_basic_string());
      } else {
        std::string k;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
          k += s_[i_++];
        }
        if (k.empty()) fail("expected a key");
        parts.push_back(k);
      }
      skip_ws();
      if (peek() != '.') return parts;
      ++i_;
    }
  }

  void assign(Document& doc, const std::vector<std::string>& table, const std::vector<std::string>& key,
              json value, int line) {
    json* node = &doc.root;
    for (const auto& t : table) node = &(*node)[t];
    std::string path;
    for (const auto& t : table) path += (path.empty() ? "" : ".") + t;
    for (std::size_t k = 0; k + 1 < key.size(); ++k) {
      path += (path.empty() ? "" : ".") + key[k];
      json& child = (*node)[key[k]];
      if (child.is_null()) {
        child = json::object();
        doc.lines.emplace(path, line);
      } else if (!child.is_object()) {
        throw ConfigError("'" + path + "' is not a table", path, line);
      }
      node = &child;
    }
    path += (path.empty() ? "" : ".") + key.back();
    if (node->contains(key.back())) throw ConfigError("duplicate key", path, line);
    (*node)[key.back()] = std::move(value);
    doc.lines.emplace(path, line);
  }

  json parse_value(Document& doc, const std::string& path) {
    const char c = peek();
    if (c == '"') return parse_basic_string();
    if (c == '\'') return parse_literal_string();
    if (c == '[') return parse_array(doc, path);
    if (c == '{') return parse_inline_table(doc, path);
    std::string tok;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-' ||
                      peek() == '+' || peek() == '.')) {
      tok += s_[i_++];
    }
    if (tok.empty()) fail("expected a value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    return parse_number(tok);
  }

  json parse_number(std::string tok) {
    std::string t;
    for (std::size_t k = 0; k < tok.size(); ++k) {
      if (tok[k] == '_') {
        if (k == 0 || k + 1 == tok.size() || !std::isdigit(static_cast<unsigned char>(tok[k - 1])) ||
            !std::isdigit(static_cast<unsigned char>(tok[k + 1]))) {
          fail("misplaced underscore in number '" + tok + "'");
        }
        continue;
      }
      t += tok[k];
    }
    const bool neg = !t.empty() && t[0] == '-';
    const std::string body = (!t.empty() && (t[0] == '-' || t[0] == '+')) ? t.substr(1) : t;
    if (body == "inf") return neg ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    if (body == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (body.empty() || !std::isdigit(static_cast<unsigned char>(body[0]))) fail("invalid value '" + tok + "'");
    const bool isFloat = body.find_first_of(".eE") != std::string::npos;
    char* end = nullptr;
    if (isFloat) {
      const double v = std::strtod(t.c_str(), &end);
      if (*end != '\0') fail("invalid number '" + tok + "'");
      return v;
    }
    errno = 0;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (*end != '\0' || errno == ERANGE) fail("invalid integer '" + tok + "'");
    return v;
  }

  std::string parse_basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[i_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (eof()) fail("unterminated string");
      const char e = s_[i_++];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  std::string parse_literal_string() {
    expect('\'');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[i_++];
      if (c == '\'') return out;
      out += c;
    }
  }

  json parse_array(Document& doc, const std::string& path) {
    expect('[');
    json arr = json::array();
    while (true) {
      skip_all();
      if (peek() == ']') {
        ++i_;
        return arr;
      }
      arr.push_back(parse_value(doc, path));
      skip_all();
      if (peek() == ',') {
        ++i_;
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  json parse_inline_table(Document& doc, const std::string& path) {
    expect('{');
    json obj = json::object();
    skip_ws();
    if (peek() == '}') {
      ++i_;
      return obj;
    }
    while (true) {
      skip_ws();
      const auto key = parse_key();
      skip_ws();
      expect('=');
      skip_ws();
      const int line = line_;
      json* node = &obj;
      for (std::size_t k = 0; k + 1 < key.size(); ++k) node = &(*node)[key[k]];
      if (node->contains(key.back())) throw ConfigError("duplicate key", path + "." + key.back(), line);
      std::string sub = path;
      for (const auto& k : key) sub += "." + k;
      (*node)[key.back()] = parse_value(doc, sub);
      doc.lines.emplace(sub, line);
      skip_ws();
      if (peek() == ',') {
        ++i_;
        continue;
      }
      expect('}');
      return obj;
    }
  }

  const std::string& s_;
  std::size_t i_ = 0;
  int line_ = 1;
};

inline Document parse(const std::string& text) { return Parser(text).parse(); }

}  // namespace bdac::toml
