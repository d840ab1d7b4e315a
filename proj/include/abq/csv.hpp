#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "abq/value.hpp"

namespace abq {

// Minimal CSV support: UTF-8, comma separator, double-quote quoting with
// "" escapes, first row is the header. An empty unquoted cell is null.
namespace csv {

struct Row {
  std::vector<std::string> cells;
  std::size_t line_no = 0;  // 1-based line of the row start
};

class Reader {
public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Reads one record (handles quoted newlines). Returns false on EOF.
  bool next(Row& row) {
    row.cells.clear();
    int c = in_.peek();
    if (c == EOF) return false;
    row.line_no = line_;
    std::string cell;
    bool quoted = false;
    bool in_cell = false;
    while (true) {
      c = in_.get();
      if (c == EOF) {
        if (!in_cell && row.cells.empty()) return false;
        row.cells.push_back(std::move(cell));
        return true;
      }
      if (c == '\n') ++line_;
      if (quoted) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            cell.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          cell.push_back(static_cast<char>(c));
        }
        continue;
      }
      if (c == '"' && cell.empty()) {
        quoted = true;
        in_cell = true;
      } else if (c == ',') {
        row.cells.push_back(std::move(cell));
        cell.clear();
        in_cell = true;
      } else if (c == '\r') {
        // swallowed; \r\n handled at \n
      } else if (c == '\n') {
        row.cells.push_back(std::move(cell));
        return true;
      } else {
        cell.push_back(static_cast<char>(c));
        in_cell = true;
      }
    }
  }

private:
  std::istream& in_;
  std::size_t line_ = 1;
};

inline bool needs_quoting(const std::string& s) {
  if (s.empty()) return false;
  return s.find_first_of(",\"\n\r") != std::string::npos;
}

inline void write_cell(std::ostream& out, const std::string& s) {
  if (!needs_quoting(s)) {
    out << s;
    return;
  }
  out << '"';
  for (char ch : s) {
    if (ch == '"') out << "\"\"";
    else out << ch;
  }
  out << '"';
}

inline void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    write_cell(out, cells[i]);
  }
  out << '\n';
}

}  // namespace csv
}  // namespace abq
