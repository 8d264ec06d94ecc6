#include "flaresim/toml_lite.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "flaresim/errors.hpp"

namespace flaresim {

namespace {

using nlohmann::json;

struct Cursor {
  const std::string& s;
  size_t i = 0;
  int line;

  bool eol() const { return i >= s.size(); }
  char peek() const { return s[i]; }
  void skip_ws() {
    while (!eol() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError(fmt::format("line {}: {}", line, msg));
  }
};

std::string parse_bare_key(Cursor& c) {
  size_t start = c.i;
  while (!c.eol() && (std::isalnum(static_cast<unsigned char>(c.peek())) ||
                      c.peek() == '_' || c.peek() == '-'))
    ++c.i;
  if (c.i == start) c.fail("expected a key");
  return c.s.substr(start, c.i - start);
}

std::vector<std::string> parse_key_path(Cursor& c) {
  std::vector<std::string> path;
  while (true) {
    c.skip_ws();
    path.push_back(parse_bare_key(c));
    c.skip_ws();
    if (!c.eol() && c.peek() == '.') {
      ++c.i;
      continue;
    }
    return path;
  }
}

json parse_value(Cursor& c);

json parse_string(Cursor& c) {
  ++c.i;  // opening quote
  std::string out;
  while (true) {
    if (c.eol()) c.fail("unterminated string");
    char ch = c.s[c.i++];
    if (ch == '"') return json(out);
    if (ch == '\\') {
      if (c.eol()) c.fail("dangling escape");
      char esc = c.s[c.i++];
      switch (esc) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: c.fail(fmt::format("unsupported escape '\\{}'", esc));
      }
    } else {
      out += ch;
    }
  }
}

json parse_array(Cursor& c) {
  ++c.i;  // '['
  json arr = json::array();
  while (true) {
    c.skip_ws();
    if (c.eol()) c.fail("unterminated array");
    if (c.peek() == ']') {
      ++c.i;
      return arr;
    }
    arr.push_back(parse_value(c));
    c.skip_ws();
    if (c.eol()) c.fail("unterminated array");
    if (c.peek() == ',') {
      ++c.i;
      continue;
    }
    if (c.peek() == ']') {
      ++c.i;
      return arr;
    }
    c.fail("expected ',' or ']' in array");
  }
}

json parse_number(Cursor& c) {
  size_t start = c.i;
  bool is_float = false;
  if (!c.eol() && (c.peek() == '+' || c.peek() == '-')) ++c.i;
  while (!c.eol()) {
    char ch = c.peek();
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '_') {
      ++c.i;
    } else if (ch == '.' || ch == 'e' || ch == 'E' || ch == '+' || ch == '-') {
      is_float = true;
      ++c.i;
    } else {
      break;
    }
  }
  std::string text = c.s.substr(start, c.i - start);
  std::erase(text, '_');
  if (text.empty() || text == "+" || text == "-") c.fail("expected a number");
  if (is_float) {
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || !std::isfinite(v))
      c.fail(fmt::format("bad float '{}'", text));
    return json(v);
  }
  char* end = nullptr;
  long long v = std::strtoll(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size()) c.fail(fmt::format("bad integer '{}'", text));
  return json(v);
}

json parse_value(Cursor& c) {
  c.skip_ws();
  if (c.eol()) c.fail("expected a value");
  char ch = c.peek();
  if (ch == '"') return parse_string(c);
  if (ch == '[') return parse_array(c);
  if (c.s.compare(c.i, 4, "true") == 0) {
    c.i += 4;
    return json(true);
  }
  if (c.s.compare(c.i, 5, "false") == 0) {
    c.i += 5;
    return json(false);
  }
  return parse_number(c);
}

// Walks/creates the table at path; the final component of an [[x]] header is
// an array whose last element is the new table.
json* descend(json* node, const std::vector<std::string>& path, bool array_leaf, int line) {
  for (size_t k = 0; k < path.size(); ++k) {
    const std::string& key = path[k];
    bool last = k + 1 == path.size();
    json& slot = (*node)[key];
    if (last && array_leaf) {
      if (slot.is_null()) slot = json::array();
      if (!slot.is_array())
        throw ValidationError(fmt::format("line {}: '{}' is not an array of tables", line, key));
      slot.push_back(json::object());
      return &slot.back();
    }
    if (slot.is_null()) slot = json::object();
    if (slot.is_array()) {
      if (slot.empty() || !slot.back().is_object())
        throw ValidationError(fmt::format("line {}: cannot extend '{}'", line, key));
      node = &slot.back();
      continue;
    }
    if (!slot.is_object())
      throw ValidationError(fmt::format("line {}: '{}' already holds a value", line, key));
    node = &slot;
  }
  return node;
}

}  // namespace

json toml_lite_parse(const std::string& text) {
  json root = json::object();
  json* table = &root;

  size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    // Strip comments (a '#' outside any string).
    bool in_str = false;
    for (size_t k = 0; k < line.size(); ++k) {
      char ch = line[k];
      if (ch == '"' && (k == 0 || line[k - 1] != '\\')) in_str = !in_str;
      if (ch == '#' && !in_str) {
        line.resize(k);
        break;
      }
    }

    Cursor c{line, 0, lineno};
    c.skip_ws();
    if (c.eol()) continue;

    if (c.peek() == '[') {
      bool array_header = c.i + 1 < line.size() && line[c.i + 1] == '[';
      c.i += array_header ? 2 : 1;
      auto path = parse_key_path(c);
      c.skip_ws();
      if (c.eol() || c.peek() != ']') c.fail("expected ']'");
      ++c.i;
      if (array_header) {
        if (c.eol() || c.peek() != ']') c.fail("expected ']]'");
        ++c.i;
      }
      c.skip_ws();
      if (!c.eol()) c.fail("trailing characters after table header");
      table = descend(&root, path, array_header, lineno);
      continue;
    }

    auto path = parse_key_path(c);
    c.skip_ws();
    if (c.eol() || c.peek() != '=') c.fail("expected '='");
    ++c.i;
    json value = parse_value(c);
    c.skip_ws();
    if (!c.eol()) c.fail("trailing characters after value");

    json* target = table;
    for (size_t k = 0; k + 1 < path.size(); ++k) {
      json& slot = (*target)[path[k]];
      if (slot.is_null()) slot = json::object();
      if (!slot.is_object())
        throw ValidationError(fmt::format("line {}: '{}' already holds a value", lineno, path[k]));
      target = &slot;
    }
    if (target->contains(path.back()))
      throw ValidationError(fmt::format("line {}: duplicate key '{}'", lineno, path.back()));
    (*target)[path.back()] = std::move(value);
  }
  return root;
}

}  // namespace flaresim
