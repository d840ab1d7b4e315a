#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace abq {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad schema/config/data files, missing paths, version mismatches.
struct ConfigError : Error {
  using Error::Error;
};

// Bad user input during abduction (unresolvable examples, empty input).
struct InputError : Error {
  using Error::Error;
};

// A typed cell. Null is represented by monostate; key and foreign-key
// columns never hold null once a table is published.
class Value {
public:
  using Storage = std::variant<std::monostate, std::int64_t, double, std::string>;

  Value() = default;
  Value(std::int64_t v) : v_(v) {}
  Value(double v) : v_(v) {}
  Value(std::string v) : v_(std::move(v)) {}
  Value(const char* v) : v_(std::string(v)) {}

  bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_double() const { return std::holds_alternative<double>(v_); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }

  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  double as_double() const { return std::get<double>(v_); }
  const std::string& as_string() const { return std::get<std::string>(v_); }

  // Numeric view for range comparisons; int64 promotes to double.
  double numeric() const {
    if (is_int()) return static_cast<double>(as_int());
    if (is_double()) return as_double();
    throw Error("value is not numeric");
  }

  friend bool operator==(const Value& a, const Value& b) { return a.v_ == b.v_; }
  friend bool operator<(const Value& a, const Value& b) {
    if (a.v_.index() != b.v_.index()) return a.v_.index() < b.v_.index();
    return a.v_ < b.v_;
  }

  const Storage& storage() const { return v_; }

  // Canonical text form, also used by the CSV writer. Doubles use the
  // shortest representation that round-trips.
  std::string to_text() const {
    if (is_null()) return "";
    if (is_int()) return std::to_string(as_int());
    if (is_double()) {
      char buf[64];
      auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), as_double());
      (void)ec;
      return std::string(buf, p);
    }
    return as_string();
  }

  std::size_t hash() const {
    switch (v_.index()) {
      case 0: return 0x9e3779b97f4a7c15ull;
      case 1: return std::hash<std::int64_t>{}(as_int());
      case 2: return std::hash<double>{}(as_double());
      default: return std::hash<std::string>{}(as_string());
    }
  }

private:
  Storage v_;
};

struct ValueHash {
  std::size_t operator()(const Value& v) const { return v.hash(); }
};

inline std::optional<std::int64_t> parse_int64(const std::string& s) {
  std::int64_t out = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || p != last) return std::nullopt;
  return out;
}

inline std::optional<double> parse_double(const std::string& s) {
  double out = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || p != last) return std::nullopt;
  return out;
}

// Case-folded (ASCII) and trimmed form used by the inverted column index.
inline std::string normalize_text(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out;
  out.reserve(e - b);
  for (std::size_t i = b; i < e; ++i)
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
  return out;
}

}  // namespace abq
