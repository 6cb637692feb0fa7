#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include "stego/error.hpp"

namespace stego {

// Shortest round-trippable decimal form of a double ("inf" for infinities).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer the shortest representation that parses back exactly.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_escape(fields[i]);
  }
  return line;
}

// RFC 4180 reader: quoted fields may contain commas, escaped quotes ("")
// and embedded line breaks. Accepts both LF and CRLF endings. When
// `row_lines` is given it receives, per row, the 1-based physical line the
// row started on.
inline std::vector<std::vector<std::string>> parse_csv(
    std::istream& in, std::vector<std::size_t>* row_lines = nullptr) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_open = false;  // row has at least one character or separator
  std::size_t line = 1;
  std::size_t row_start_line = 1;
  int c;
  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
  };
  auto end_row = [&]() {
    end_field();
    rows.push_back(row);
    if (row_lines) row_lines->push_back(row_start_line);
    row.clear();
    field_open = false;
  };
  while ((c = in.get()) != EOF) {
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_quotes = true;
        field_open = true;
        break;
      case ',':
        end_field();
        field_open = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        row_start_line = line;
        break;
      default:
        field += ch;
        field_open = true;
        break;
    }
  }
  if (in_quotes) fail(Error::Kind::format, "csv: unterminated quoted field");
  if (field_open || !field.empty() || !row.empty()) end_row();
  return rows;
}

inline std::vector<std::vector<std::string>> parse_csv_file(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Error::Kind::io, "csv: cannot open " + path);
  return parse_csv(in);
}

}  // namespace stego
