#pragma once

#include <cctype>
#include <charconv>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dtnsim/geometry.hpp"
#include "dtnsim/units.hpp"

namespace dtnsim {

class WktError : public std::runtime_error {
 public:
  WktError(std::size_t offset, const std::string& what)
      : std::runtime_error("WKT error at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// A POINT record yields a single-point polyline; LINESTRING records always
// carry at least two points.
using Polyline = std::vector<Point>;

namespace detail {

class WktReader {
 public:
  explicit WktReader(std::string_view text) : text_(text) {}

  std::vector<Polyline> parse_all() {
    std::vector<Polyline> out;
    skip_ws();
    while (pos_ < text_.size()) {
      const std::size_t start = pos_;
      const std::string keyword = read_keyword();
      if (keyword == "LINESTRING") {
        out.push_back(read_linestring());
      } else if (keyword == "MULTILINESTRING") {
        expect('(');
        for (;;) {
          out.push_back(read_linestring());
          skip_ws();
          if (peek() == ',') {
            ++pos_;
            continue;
          }
          expect(')');
          break;
        }
      } else if (keyword == "POINT") {
        expect('(');
        Polyline p{read_coordinate()};
        expect(')');
        out.push_back(std::move(p));
      } else if (keyword.empty()) {
        throw WktError(start, "expected geometry keyword");
      } else {
        throw WktError(start, "unsupported geometry '" + keyword + "'");
      }
      skip_ws();
    }
    return out;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) {
      if (pos_ >= text_.size())
        throw WktError(pos_, std::string("unexpected end of input, expected '") + c + "'");
      throw WktError(pos_, std::string("expected '") + c + "'");
    }
    ++pos_;
  }

  std::string read_keyword() {
    std::string word;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
      word.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(text_[pos_]))));
      ++pos_;
    }
    return word;
  }

  double read_number() {
    skip_ws();
    const std::size_t start = pos_;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    if (first != last && *first == '+') ++first;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr == first) throw WktError(start, "non-numeric coordinate");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    if (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_])))
      throw WktError(start, "non-numeric coordinate");
    return value;
  }

  Point read_coordinate() {
    const std::size_t start = pos_;
    Point p{read_number(), read_number()};
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw WktError(start, "coordinate is not finite");
    return p;
  }

  Polyline read_linestring() {
    const std::size_t start = pos_;
    expect('(');
    Polyline line;
    for (;;) {
      line.push_back(read_coordinate());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect(')');
      break;
    }
    if (line.size() < 2) throw WktError(start, "LINESTRING needs at least 2 points");
    return line;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<Polyline> parse_wkt(std::string_view text) {
  return detail::WktReader(text).parse_all();
}

inline std::string wkt_coordinate(Point p) {
  return format_double(p.x) + " " + format_double(p.y);
}

inline std::string wkt_linestring(const Polyline& line) {
  std::string out = "LINESTRING (";
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (i) out += ", ";
    out += wkt_coordinate(line[i]);
  }
  out += ")";
  return out;
}

inline std::string wkt_point(Point p) { return "POINT (" + wkt_coordinate(p) + ")"; }

}  // namespace dtnsim
