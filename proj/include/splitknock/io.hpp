#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "splitknock/model.hpp"
#include "splitknock/numerics.hpp"

namespace splitknock::io {

// Comma-separated numeric table. A first row that does not parse as numbers
// is taken as a header. Blank lines are skipped. Errors are ParseError with
// the 1-based line and column of the offending cell.
struct CsvTable {
  Matrix values;
  std::vector<std::string> header;  // empty when there was none
};

CsvTable parse_csv(std::string_view text, const std::string& source);
CsvTable read_csv(const std::string& path);

// Whole file contents; ParseError when the file cannot be opened.
std::string read_file(const std::string& path);

// A single column (n x 1) or a single row (1 x n) as a vector.
Vector read_vector(const std::string& path);

// Dense m x p CSV, or a sparse file with header "row,col,value" (1-based
// indices, unlisted entries zero). For sparse files the shape is
// (max row) x p.
Matrix read_transform_matrix(const std::string& path, Index p);

// One "tail,head" pair per line, 1-based, optional header.
std::vector<Edge> read_edges(const std::string& path);

}  // namespace splitknock::io
