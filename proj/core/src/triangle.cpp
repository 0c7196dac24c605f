#include "gee_reserve/triangle.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "gee_reserve/model.hpp"

namespace geeres {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool parse_number(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_int(const std::string& s, long& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

double require_number(const std::string& s, const char* where) {
  double v = 0.0;
  if (!parse_number(s, v))
    throw NonNumericValueError(std::string("non-numeric value '") + s + "' in " + where);
  return v;
}

// shortest decimal representation that parses back to the same double
std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::string s(buf);
    if (parse_number(s, back) && back == v) return s;
  }
  return buf;
}

Triangle parse_wide(std::istream& in, TriangleKind kind) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv(line));
  }
  if (rows.empty()) throw RaggedShapeError("empty input");

  bool has_header = false;
  bool label_column = false;
  for (const auto& field : rows.front()) {
    double v;
    if (!field.empty() && !parse_number(field, v)) {
      has_header = true;
      break;
    }
  }
  if (has_header) {
    const std::string first = rows.front().empty() ? "" : rows.front()[0];
    std::string lower = first;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    label_column = !lower.starts_with("dev");
    rows.erase(rows.begin());
  }
  if (rows.empty()) throw RaggedShapeError("no data rows");

  const int n = static_cast<int>(rows.size());
  std::vector<double> cells;
  cells.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
  for (int i = 1; i <= n; ++i) {
    auto fields = rows[static_cast<std::size_t>(i - 1)];
    if (label_column) {
      if (fields.empty()) throw RaggedShapeError("missing label column");
      fields.erase(fields.begin());
    }
    while (!fields.empty() && fields.back().empty()) fields.pop_back();
    const int expected = n + 1 - i;
    if (static_cast<int>(fields.size()) != expected) {
      throw RaggedShapeError("row " + std::to_string(i) + " has " +
                             std::to_string(fields.size()) + " cells, expected " +
                             std::to_string(expected));
    }
    for (const auto& f : fields) cells.push_back(require_number(f, "wide CSV"));
  }
  return Triangle(n, kind, std::move(cells));
}

Triangle parse_long(std::istream& in, TriangleKind kind) {
  std::map<std::pair<int, int>, double> values;
  std::string line;
  bool first = true;
  int max_i = 0;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    auto fields = split_csv(t);
    if (first) {
      first = false;
      if (fields.size() == 3 && fields[0] == "i" && fields[1] == "j" && fields[2] == "value")
        continue;  // header
    }
    if (fields.size() != 3)
      throw RaggedShapeError("long CSV row needs 3 fields, got " +
                             std::to_string(fields.size()));
    long i = 0, j = 0;
    if (!parse_int(fields[0], i) || !parse_int(fields[1], j))
      throw NonNumericValueError("non-integer index in long CSV: '" + t + "'");
    const double v = require_number(fields[2], "long CSV");
    if (i < 1 || j < 1) throw RaggedShapeError("indices must be 1-based");
    auto [it, inserted] = values.emplace(std::make_pair(static_cast<int>(i),
                                                        static_cast<int>(j)), v);
    if (!inserted)
      throw DuplicateCellError("duplicate cell (" + std::to_string(i) + "," +
                               std::to_string(j) + ")");
    max_i = std::max(max_i, static_cast<int>(i));
  }
  if (values.empty()) throw RaggedShapeError("empty input");

  const int n = max_i;
  if (static_cast<int>(values.size()) != n * (n + 1) / 2)
    throw RaggedShapeError("expected " + std::to_string(n * (n + 1) / 2) +
                           " cells for n=" + std::to_string(n) + ", got " +
                           std::to_string(values.size()));
  std::vector<double> cells;
  cells.reserve(values.size());
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n + 1 - i; ++j) {
      auto it = values.find({i, j});
      if (it == values.end())
        throw RaggedShapeError("missing cell (" + std::to_string(i) + "," +
                               std::to_string(j) + ")");
      cells.push_back(it->second);
    }
  }
  // every remaining cell would violate i + j <= n + 1
  if (values.size() != cells.size()) throw RaggedShapeError("cells outside the triangle");
  return Triangle(n, kind, std::move(cells));
}

}  // namespace

Triangle::Triangle(int n, TriangleKind kind, std::vector<double> cells)
    : n_(n), kind_(kind), cells_(std::move(cells)) {
  if (n_ < 1) throw RaggedShapeError("triangle needs at least one accident year");
  const auto expected = static_cast<std::size_t>(n_) * (n_ + 1) / 2;
  if (cells_.size() != expected)
    throw RaggedShapeError("expected " + std::to_string(expected) + " cells, got " +
                           std::to_string(cells_.size()));
}

int Triangle::row_length(int i) const {
  if (i < 1 || i > n_) throw IndexOutOfRangeError("accident year out of range");
  return n_ + 1 - i;
}

bool Triangle::contains(int i, int j) const {
  return i >= 1 && j >= 1 && i <= n_ && i + j <= n_ + 1;
}

int Triangle::offset(int i, int j) const {
  if (!contains(i, j))
    throw IndexOutOfRangeError("cell (" + std::to_string(i) + "," + std::to_string(j) +
                               ") outside the triangle");
  // rows 1..i-1 hold n, n-1, ..., n-i+2 cells
  const int before = (i - 1) * n_ - (i - 1) * (i - 2) / 2;
  return before + j - 1;
}

double Triangle::operator()(int i, int j) const {
  return cells_[static_cast<std::size_t>(offset(i, j))];
}

double Triangle::grand_total() const {
  return std::accumulate(cells_.begin(), cells_.end(), 0.0);
}

std::vector<Cell> Triangle::cells() const {
  std::vector<Cell> out;
  out.reserve(cells_.size());
  for (int i = 1; i <= n_; ++i)
    for (int j = 1; j <= n_ + 1 - i; ++j) out.push_back({i, j});
  return out;
}

Triangle parse_triangle(std::istream& in, TriangleFormat format, TriangleKind kind) {
  return format == TriangleFormat::wide ? parse_wide(in, kind) : parse_long(in, kind);
}

Triangle parse_triangle(const std::string& text, TriangleFormat format, TriangleKind kind) {
  std::istringstream in(text);
  return parse_triangle(in, format, kind);
}

Triangle parse_triangle_file(const std::string& path, TriangleFormat format,
                             TriangleKind kind) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_triangle(in, format, kind);
}

std::string to_csv(const Triangle& t, TriangleFormat format) {
  std::ostringstream out;
  const int n = t.size();
  if (format == TriangleFormat::wide) {
    for (int j = 1; j <= n; ++j) out << (j > 1 ? "," : "") << "dev_" << j;
    out << '\n';
    for (int i = 1; i <= n; ++i) {
      for (int j = 1; j <= n; ++j) {
        if (j > 1) out << ',';
        if (t.contains(i, j)) out << format_double(t(i, j));
      }
      out << '\n';
    }
  } else {
    out << "i,j,value\n";
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n + 1 - i; ++j)
        out << i << ',' << j << ',' << format_double(t(i, j)) << '\n';
  }
  return out.str();
}

Triangle cumulate(const Triangle& t) {
  if (t.kind() != TriangleKind::incremental)
    throw WrongKindError("cumulate needs an incremental triangle");
  const int n = t.size();
  std::vector<double> cells;
  cells.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
  for (int i = 1; i <= n; ++i) {
    double run = 0.0;
    for (int j = 1; j <= n + 1 - i; ++j) {
      run += t(i, j);
      cells.push_back(run);
    }
  }
  return Triangle(n, TriangleKind::cumulative, std::move(cells));
}

Triangle decumulate(const Triangle& t) {
  if (t.kind() != TriangleKind::cumulative)
    throw WrongKindError("decumulate needs a cumulative triangle");
  const int n = t.size();
  std::vector<double> cells;
  cells.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
  for (int i = 1; i <= n; ++i) {
    double prev = 0.0;
    for (int j = 1; j <= n + 1 - i; ++j) {
      cells.push_back(t(i, j) - prev);
      prev = t(i, j);
    }
  }
  return Triangle(n, TriangleKind::incremental, std::move(cells));
}

int ClusterSet::total_observations() const {
  int total = 0;
  for (const auto& c : clusters) total += static_cast<int>(c.values.size());
  return total;
}

std::vector<Cell> ClusterSet::cells() const {
  std::vector<Cell> out;
  for (const auto& c : clusters)
    for (int j = 1; j <= static_cast<int>(c.values.size()); ++j)
      out.push_back({c.accident_year, j});
  return out;
}

ClusterSet to_clusters(const Triangle& t, const DesignBuilder& design) {
  if (t.kind() != TriangleKind::incremental)
    throw WrongKindError("clusters are built from incremental triangles");
  if (design.n() != t.size())
    throw DimensionMismatchError("design built for n=" + std::to_string(design.n()) +
                                 ", triangle has n=" + std::to_string(t.size()));
  const int n = t.size();
  ClusterSet set;
  set.n = n;
  set.p = design.param_count();
  set.clusters.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    Cluster c;
    c.accident_year = i;
    const int ni = n + 1 - i;
    c.values.resize(ni);
    c.design.resize(ni, set.p);
    for (int j = 1; j <= ni; ++j) {
      c.values(j - 1) = t(i, j);
      c.design.row(j - 1) = design.row(i, j);
    }
    set.clusters.push_back(std::move(c));
  }
  return set;
}

}  // namespace geeres
