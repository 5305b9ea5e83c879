#include "splitknock/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "splitknock/errors.hpp"

namespace splitknock::io {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                             : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_number(std::string_view cell, double& value) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(value);
}

[[noreturn]] void fail(const std::string& source, std::size_t line, std::size_t col,
                       const std::string& what) {
  throw Error(ErrorKind::ParseError,
              source + ": line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
}

}  // namespace

CsvTable parse_csv(std::string_view text, const std::string& source) {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::size_t line_no = 0;
  bool first_content = true;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);
    std::vector<double> row(cells.size());
    bool numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_number(cells[c], row[c])) {
        numeric = false;
        bad_col = c + 1;
        break;
      }
    }
    if (first_content) {
      first_content = false;
      width = cells.size();
      if (!numeric) {
        for (const auto cell : cells) table.header.emplace_back(cell);
        continue;
      }
    }
    if (cells.size() != width) {
      fail(source, line_no, std::min(cells.size(), width) + 1,
           "expected " + std::to_string(width) + " fields, found " + std::to_string(cells.size()));
    }
    if (!numeric) fail(source, line_no, bad_col, "not a finite number: '" + std::string(cells[bad_col - 1]) + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::ParseError, source + ": no numeric rows");
  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) table.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  }
  return table;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

Vector read_vector(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.values.cols() == 1) return table.values.col(0);
  if (table.values.rows() == 1) return table.values.row(0).transpose();
  throw Error(ErrorKind::ParseError, path + ": expected a single column, found " +
                                         std::to_string(table.values.cols()) + " columns");
}

Matrix read_transform_matrix(const std::string& path, Index p) {
  const CsvTable table = read_csv(path);
  std::vector<std::string> lower;
  for (const auto& h : table.header) {
    std::string s = h;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    lower.push_back(s);
  }
  if (lower == std::vector<std::string>{"row", "col", "value"}) {
    Index m = 0;
    for (Index k = 0; k < table.values.rows(); ++k) {
      const double r = table.values(k, 0);
      const double c = table.values(k, 1);
      const std::size_t line = static_cast<std::size_t>(k) + 2;
      if (r != std::floor(r) || r < 1) fail(path, line, 1, "row index must be a positive integer");
      if (c != std::floor(c) || c < 1 || c > static_cast<double>(p)) {
        fail(path, line, 2, "column index must be an integer in 1.." + std::to_string(p));
      }
      m = std::max(m, static_cast<Index>(r));
    }
    Matrix d = Matrix::Zero(m, p);
    for (Index k = 0; k < table.values.rows(); ++k) {
      d(static_cast<Index>(table.values(k, 0)) - 1, static_cast<Index>(table.values(k, 1)) - 1) +=
          table.values(k, 2);
    }
    return d;
  }
  if (table.values.cols() != p) {
    throw Error(ErrorKind::DimensionMismatch, path + ": D has " + std::to_string(table.values.cols()) +
                                                  " columns but X has " + std::to_string(p));
  }
  return table.values;
}

std::vector<Edge> read_edges(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.values.cols() != 2) {
    throw Error(ErrorKind::ParseError, path + ": edges need exactly two columns (tail,head)");
  }
  std::vector<Edge> edges;
  for (Index k = 0; k < table.values.rows(); ++k) {
    const double t = table.values(k, 0);
    const double h = table.values(k, 1);
    if (t != std::floor(t) || h != std::floor(h)) {
      fail(path, static_cast<std::size_t>(k) + 1 + (table.header.empty() ? 0 : 1), 1,
           "edge endpoints must be integers");
    }
    edges.push_back(Edge{static_cast<Index>(t), static_cast<Index>(h)});
  }
  return edges;
}

}  // namespace splitknock::io
