#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <vector>

#include "xipm/qp_model.hpp"

namespace xipm {

/// One data line of a QPS file, split into fields.
struct QpsRecord {
  int line = 0;
  std::vector<std::string> fields;
};

/// Section-structured view of a QPS/MPS document.
struct QpsDocument {
  std::string name;
  std::string objective_sense = "MIN";
  std::map<std::string, std::vector<QpsRecord>, std::less<>> sections;

  const std::vector<QpsRecord>& section(std::string_view key) const {
    static const std::vector<QpsRecord> empty;
    auto it = sections.find(key);
    return it == sections.end() ? empty : it->second;
  }
};

namespace detail {

inline std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

/// Fixed-format MPS columns (1-based): 2-3, 5-12, 15-22, 25-36, 40-47, 50-61.
inline std::vector<std::string> split_fixed(std::string_view line) {
  static constexpr std::pair<std::size_t, std::size_t> kFields[] = {
      {1, 2}, {4, 8}, {14, 8}, {24, 12}, {39, 8}, {49, 12}};
  std::vector<std::string> out;
  for (auto [start, len] : kFields) {
    if (start >= line.size()) break;
    out.push_back(trim(line.substr(start, len)));
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

inline bool plausible_field_count(std::string_view section, std::size_t count) {
  if (section == "ROWS") return count == 2;
  if (section == "COLUMNS") return count == 3 || count == 5;
  if (section == "RHS" || section == "RANGES") return count >= 2 && count <= 5;
  if (section == "BOUNDS") return count >= 2 && count <= 4;
  if (section == "QUADOBJ" || section == "QMATRIX" || section == "QSECTION") {
    return count == 3;
  }
  return true;
}

inline double parse_number(const std::string& s, int line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    // from_chars rejects forms like "1.D+02" used by some generators.
    std::string fixed = s;
    for (char& c : fixed) {
      if (c == 'D' || c == 'd') c = 'e';
    }
    try {
      std::size_t used = 0;
      v = std::stod(fixed, &used);
      if (used != fixed.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ParseError("invalid number '" + s + "'", line);
    }
  }
  return v;
}

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Splits text into sections and records. Free format is tried first; a
/// line whose whitespace split has an impossible field count for its
/// section is re-read with fixed MPS columns.
inline QpsDocument read_qps_document(std::string_view text) {
  static const std::vector<std::string_view> kKnown = {
      "NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS",
      "QUADOBJ", "QMATRIX", "QSECTION", "OBJSENSE", "ENDATA"};
  static const std::vector<std::string_view> kUnsupported = {
      "SOS", "QCMATRIX", "CSECTION", "INDICATORS"};

  QpsDocument doc;
  std::string current;
  bool saw_end = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size() && !saw_end) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line[0] == '*') continue;
    if (detail::trim(line).empty()) continue;

    if (!std::isspace(static_cast<unsigned char>(line[0]))) {
      const auto tokens = detail::split_ws(line);
      const std::string& key = tokens[0];
      bool known = false;
      for (auto k : kKnown) known = known || key == k;
      if (!known) {
        for (auto k : kUnsupported) {
          if (key == k.substr(0, k.find(' '))) {
            throw ParseError("unsupported section " + key, line_no);
          }
        }
        throw ParseError("unknown section header '" + key + "'", line_no);
      }
      if (key == "NAME") {
        doc.name = tokens.size() > 1 ? detail::trim(line.substr(4)) : "";
        current.clear();
      } else if (key == "ENDATA") {
        saw_end = true;
      } else if (key == "OBJSENSE") {
        current = key;
        if (tokens.size() > 1) doc.objective_sense = tokens[1];
      } else {
        current = key == "QSECTION" ? "QMATRIX" : key;
        doc.sections[current];
      }
      continue;
    }
    if (current.empty()) throw ParseError("data line outside of a section", line_no);
    if (current == "OBJSENSE") {
      doc.objective_sense = detail::trim(line);
      continue;
    }
    auto fields = detail::split_ws(line);
    if (!detail::plausible_field_count(current, fields.size())) {
      fields = detail::split_fixed(line);
      if (!detail::plausible_field_count(current, fields.size())) {
        throw ParseError("malformed record in " + current, line_no);
      }
    }
    doc.sections[current].push_back({line_no, std::move(fields)});
  }
  if (!saw_end) throw ParseError("missing ENDATA", 0);
  return doc;
}

/**
 * Builds the raw QP from a document. Objective ½xᵀHx + cᵀx + offset with
 * offset = -(RHS entry of the objective row). Row senses become
 * a x + b ≥ 0 (G kept, L negated) or a x + b = 0 (E); ranged rows become
 * two inequality rows named <row>_lo and <row>_hi. QUADOBJ lists the lower
 * triangle and is mirrored; QMATRIX lists every entry.
 */
inline RawQp to_raw_qp(const QpsDocument& doc) {
  const std::string& sense = doc.objective_sense;
  if (sense != "MIN" && sense != "MINIMIZE") {
    throw ParseError("unsupported objective sense " + sense, 0);
  }

  struct Row {
    char type;
    std::string name;
    double rhs = 0.0;
    bool has_range = false;
    double range = 0.0;
    std::vector<std::pair<int, double>> entries;
  };
  std::vector<Row> rows;
  std::unordered_map<std::string, int> row_index;
  std::string objective;

  for (const auto& rec : doc.section("ROWS")) {
    const std::string& t = rec.fields[0];
    const std::string& name = rec.fields[1];
    if (t.size() != 1 || std::string("NLGE").find(t[0]) == std::string::npos) {
      throw ParseError("unknown row type '" + t + "'", rec.line);
    }
    if (row_index.count(name) || name == objective) {
      throw ParseError("duplicate row '" + name + "'", rec.line);
    }
    if (t[0] == 'N') {
      if (objective.empty()) {
        objective = name;
        continue;
      }
    }
    row_index[name] = static_cast<int>(rows.size());
    rows.push_back({t[0], name});
  }
  if (objective.empty()) throw ParseError("no objective (N) row declared", 0);

  std::vector<std::string> col_names;
  std::unordered_map<std::string, int> col_index;
  std::vector<double> cost;
  auto column = [&](const std::string& name) {
    auto [it, inserted] = col_index.emplace(name, static_cast<int>(col_names.size()));
    if (inserted) {
      col_names.push_back(name);
      cost.push_back(0.0);
    }
    return it->second;
  };
  auto find_column = [&](const std::string& name, int line) {
    auto it = col_index.find(name);
    if (it == col_index.end()) throw ParseError("undeclared column '" + name + "'", line);
    return it->second;
  };
  auto find_row = [&](const std::string& name, int line) -> int {
    if (name == objective) return -1;
    auto it = row_index.find(name);
    if (it == row_index.end()) throw ParseError("undeclared row '" + name + "'", line);
    return it->second;
  };

  for (const auto& rec : doc.section("COLUMNS")) {
    const auto& f = rec.fields;
    if (f.size() == 3 && f[1].find("MARKER") != std::string::npos) {
      throw ParseError("unsupported feature: integer MARKER", rec.line);
    }
    const int j = column(f[0]);
    for (std::size_t k = 1; k + 1 < f.size(); k += 2) {
      const int r = find_row(f[k], rec.line);
      const double v = detail::parse_number(f[k + 1], rec.line);
      if (r < 0) {
        cost[static_cast<std::size_t>(j)] += v;
      } else {
        rows[static_cast<std::size_t>(r)].entries.emplace_back(j, v);
      }
    }
  }

  double offset = 0.0;
  auto pairs_of = [](const QpsRecord& rec) {
    // Set name is optional: an even field count means it was left out.
    return rec.fields.size() % 2 == 0 ? std::size_t{0} : std::size_t{1};
  };
  for (const auto& rec : doc.section("RHS")) {
    for (std::size_t k = pairs_of(rec); k + 1 < rec.fields.size(); k += 2) {
      const int r = find_row(rec.fields[k], rec.line);
      const double v = detail::parse_number(rec.fields[k + 1], rec.line);
      if (r < 0) {
        offset = -v;
      } else {
        rows[static_cast<std::size_t>(r)].rhs = v;
      }
    }
  }
  for (const auto& rec : doc.section("RANGES")) {
    for (std::size_t k = pairs_of(rec); k + 1 < rec.fields.size(); k += 2) {
      const int r = find_row(rec.fields[k], rec.line);
      if (r < 0) throw ParseError("range on the objective row", rec.line);
      auto& row = rows[static_cast<std::size_t>(r)];
      if (row.type == 'N') throw ParseError("range on a free row", rec.line);
      row.has_range = true;
      row.range = detail::parse_number(rec.fields[k + 1], rec.line);
    }
  }

  const int n = static_cast<int>(col_names.size());
  Vector lower = Vector::Zero(n);
  Vector upper = Vector::Constant(n, kInfinity);
  for (const auto& rec : doc.section("BOUNDS")) {
    const auto& f = rec.fields;
    const std::string& type = f[0];
    const bool needs_value = type == "UP" || type == "LO" || type == "FX";
    const bool no_value = type == "FR" || type == "MI" || type == "PL";
    if (type == "BV" || type == "LI" || type == "UI" || type == "SC") {
      throw ParseError("unsupported feature: " + type + " bound", rec.line);
    }
    if (!needs_value && !no_value) {
      throw ParseError("unknown bound type '" + type + "'", rec.line);
    }
    // Layout is TYPE [SET] COLUMN [VALUE].
    std::size_t col_field = 2;
    if (no_value && f.size() == 2) col_field = 1;
    if (needs_value && f.size() == 3) col_field = 1;
    if (col_field >= f.size()) throw ParseError("bound without a column", rec.line);
    const int j = find_column(f[col_field], rec.line);
    double value = 0.0;
    if (needs_value) {
      if (col_field + 1 >= f.size()) throw ParseError("bound without a value", rec.line);
      value = detail::parse_number(f[col_field + 1], rec.line);
    }
    if (type == "UP") {
      upper[j] = value;
      if (value < 0.0 && lower[j] == 0.0) lower[j] = -kInfinity;
    } else if (type == "LO") {
      lower[j] = value;
    } else if (type == "FX") {
      lower[j] = upper[j] = value;
    } else if (type == "FR") {
      lower[j] = -kInfinity;
      upper[j] = kInfinity;
    } else if (type == "MI") {
      lower[j] = -kInfinity;
    } else {
      upper[j] = kInfinity;
    }
  }

  std::vector<Triplet> hess;
  for (std::string_view key : {"QUADOBJ", "QMATRIX"}) {
    for (const auto& rec : doc.section(key)) {
      const int a = find_column(rec.fields[0], rec.line);
      const int b = find_column(rec.fields[1], rec.line);
      const double v = detail::parse_number(rec.fields[2], rec.line);
      hess.emplace_back(a, b, v);
      if (key == "QUADOBJ" && a != b) hess.emplace_back(b, a, v);
    }
  }

  RawQp raw;
  raw.name = doc.name;
  raw.variable_names = col_names;
  raw.hessian = detail::from_triplets(n, n, hess);
  raw.linear_cost = Eigen::Map<Vector>(cost.data(), n);
  raw.lower = lower;
  raw.upper = upper;
  raw.objective_offset = offset;

  std::vector<Triplet> ineq, eq;
  std::vector<double> b_ineq, b_eq;
  auto add_row = [](std::vector<Triplet>& t, std::vector<double>& b,
                    const Row& row, double sign, double constant) {
    const int i = static_cast<int>(b.size());
    for (auto [j, v] : row.entries) t.emplace_back(i, j, sign * v);
    b.push_back(constant);
  };
  for (const auto& row : rows) {
    if (row.type == 'N') continue;
    double lo = -kInfinity, hi = kInfinity;
    const double r = std::abs(row.range);
    if (row.type == 'E') {
      if (!row.has_range || row.range == 0.0) {
        add_row(eq, b_eq, row, 1.0, -row.rhs);
        raw.eq_names.push_back(row.name);
        continue;
      }
      lo = row.range > 0 ? row.rhs : row.rhs - r;
      hi = row.range > 0 ? row.rhs + r : row.rhs;
    } else if (row.type == 'G') {
      lo = row.rhs;
      if (row.has_range) hi = row.rhs + r;
    } else {
      hi = row.rhs;
      if (row.has_range) lo = row.rhs - r;
    }
    const bool both = std::isfinite(lo) && std::isfinite(hi);
    if (std::isfinite(lo)) {
      add_row(ineq, b_ineq, row, 1.0, -lo);
      raw.ineq_names.push_back(both ? row.name + "_lo" : row.name);
    }
    if (std::isfinite(hi)) {
      add_row(ineq, b_ineq, row, -1.0, hi);
      raw.ineq_names.push_back(both ? row.name + "_hi" : row.name);
    }
  }
  raw.a_ineq = detail::from_triplets(static_cast<int>(b_ineq.size()), n, ineq);
  raw.b_ineq = Eigen::Map<Vector>(b_ineq.data(), static_cast<Eigen::Index>(b_ineq.size()));
  raw.a_eq = detail::from_triplets(static_cast<int>(b_eq.size()), n, eq);
  raw.b_eq = Eigen::Map<Vector>(b_eq.data(), static_cast<Eigen::Index>(b_eq.size()));
  return raw;
}

inline RawQp parse_qps(std::string_view text) { return to_raw_qp(read_qps_document(text)); }

inline RawQp read_qps_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_qps(ss.str());
}

/**
 * Canonical fixed-column QPS text. Inequality rows are written as G rows
 * with right-hand side -b, equality rows as E rows; the Hessian goes to
 * QUADOBJ (lower triangle). Numbers use the shortest round-trip form, so
 * parse_qps(write_qps(raw)) reproduces raw exactly.
 */
inline std::string write_qps(const RawQp& raw) {
  raw.validate();
  const int n = raw.num_vars();
  const auto m_i = raw.b_ineq.size();
  const auto m_e = raw.b_eq.size();
  auto var = [&](int j) {
    return j < static_cast<int>(raw.variable_names.size())
               ? raw.variable_names[static_cast<std::size_t>(j)]
               : "x" + std::to_string(j + 1);
  };
  auto ineq_name = [&](Eigen::Index i) {
    return i < static_cast<Eigen::Index>(raw.ineq_names.size())
               ? raw.ineq_names[static_cast<std::size_t>(i)]
               : "c" + std::to_string(i + 1);
  };
  auto eq_name = [&](Eigen::Index i) {
    return i < static_cast<Eigen::Index>(raw.eq_names.size())
               ? raw.eq_names[static_cast<std::size_t>(i)]
               : "e" + std::to_string(i + 1);
  };
  const std::string obj = "obj";

  std::ostringstream out;
  auto pad = [](const std::string& s, std::size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
  };
  // Data line: field 1 at column 2, name fields at 5 and 15, value at 25,
  // optional second pair at 40 and 50.
  auto record = [&](const std::string& code, const std::string& f2,
                    const std::string& f3, const std::string& f4) {
    std::string line = " " + pad(code, 3) + pad(f2, 10) + pad(f3, 10) + f4;
    out << line << '\n';
  };

  out << "NAME          " << (raw.name.empty() ? "QP" : raw.name) << '\n';
  out << "ROWS\n";
  out << " N  " << obj << '\n';
  for (Eigen::Index i = 0; i < m_i; ++i) out << " G  " << ineq_name(i) << '\n';
  for (Eigen::Index i = 0; i < m_e; ++i) out << " E  " << eq_name(i) << '\n';

  out << "COLUMNS\n";
  for (int j = 0; j < n; ++j) {
    bool any = false;
    if (raw.linear_cost[j] != 0.0) {
      record("", var(j), obj, detail::format_number(raw.linear_cost[j]));
      any = true;
    }
    for (SparseMatrix::InnerIterator it(raw.a_ineq, j); it; ++it) {
      record("", var(j), ineq_name(it.row()), detail::format_number(it.value()));
      any = true;
    }
    for (SparseMatrix::InnerIterator it(raw.a_eq, j); it; ++it) {
      record("", var(j), eq_name(it.row()), detail::format_number(it.value()));
      any = true;
    }
    if (!any) record("", var(j), obj, "0");
  }

  out << "RHS\n";
  if (raw.objective_offset != 0.0) {
    record("", "RHS", obj, detail::format_number(-raw.objective_offset));
  }
  for (Eigen::Index i = 0; i < m_i; ++i) {
    if (raw.b_ineq[i] != 0.0) {
      record("", "RHS", ineq_name(i), detail::format_number(-raw.b_ineq[i]));
    }
  }
  for (Eigen::Index i = 0; i < m_e; ++i) {
    if (raw.b_eq[i] != 0.0) {
      record("", "RHS", eq_name(i), detail::format_number(-raw.b_eq[i]));
    }
  }

  std::ostringstream bounds;
  for (int j = 0; j < n; ++j) {
    const double l = raw.lower[j];
    const double u = raw.upper[j];
    auto b = [&](const std::string& code, const std::string& value) {
      bounds << " " << pad(code, 3) << pad("BND", 10) << pad(var(j), 10) << value << '\n';
    };
    if (l == u) {
      b("FX", detail::format_number(l));
      continue;
    }
    if (std::isinf(l) && std::isinf(u)) {
      b("FR", "");
      continue;
    }
    if (std::isfinite(u)) b("UP", detail::format_number(u));
    if (std::isinf(l)) {
      b("MI", "");
    } else if (l != 0.0 || (std::isfinite(u) && u < 0.0)) {
      b("LO", detail::format_number(l));
    }
  }
  if (!bounds.str().empty()) out << "BOUNDS\n" << bounds.str();

  if (raw.hessian.nonZeros() > 0) {
    out << "QUADOBJ\n";
    for (int j = 0; j < n; ++j) {
      for (SparseMatrix::InnerIterator it(raw.hessian, j); it; ++it) {
        if (it.row() >= j) {
          record("", var(static_cast<int>(it.row())), var(j),
                 detail::format_number(it.value()));
        }
      }
    }
  }
  out << "ENDATA\n";
  return out.str();
}

}  // namespace xipm
