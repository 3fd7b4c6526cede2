#include "mopt/csv.hpp"

namespace mopt::csv {

std::vector<std::vector<std::string>> read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool had_any = false;
  char c;
  const auto end_field = [&]() {
    row.push_back(field);
    field.clear();
  };
  const auto end_row = [&]() {
    end_field();
    rows.push_back(row);
    row.clear();
    had_any = false;
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      had_any = true;
    } else if (c == '"') {
      quoted = true;
      had_any = true;
    } else if (c == ',') {
      end_field();
      had_any = true;
    } else if (c == '\r') {
      // swallow; newline handling below
    } else if (c == '\n') {
      if (had_any || !field.empty() || !row.empty()) end_row();
    } else {
      field += c;
      had_any = true;
    }
  }
  if (had_any || !field.empty() || !row.empty()) end_row();
  return rows;
}

}  // namespace mopt::csv
