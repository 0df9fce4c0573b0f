#pragma once

#include <string>
#include <vector>

namespace pgg {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

// Minimal CSV I/O for the project's plain (unquoted) table formats.
CsvTable read_csv(const std::string& path, bool expect_header = true);
void write_lines(const std::string& path, const std::vector<std::string>& lines);
std::string read_file(const std::string& path);

// Canonical number formatting used in every emitted CSV so that reruns are
// byte-identical.
std::string fmt_num(double v);

std::vector<std::string> split(const std::string& line, char sep);

}  // namespace pgg
