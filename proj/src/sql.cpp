#include "sqlova/sql.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cctype>

#include "sqlova/error.hpp"

namespace sqlova {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Type: return "type error";
    case ErrorKind::Code: return "code error";
    case ErrorKind::Bounds: return "bounds error";
    case ErrorKind::Length: return "length error";
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Contract: return "contract error";
    case ErrorKind::Usage: return "usage error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Internal: return "internal error";
  }
  return "error";
}

const char* agg_name(AggOp op) {
  static constexpr std::array<const char*, kNumAggOps> names{"NONE", "MAX", "MIN",
                                                             "COUNT", "SUM", "AVG"};
  return names[static_cast<std::size_t>(op)];
}

const char* cond_symbol(CondOp op) {
  static constexpr std::array<const char*, kNumCondOps> names{"=", ">", "<"};
  return names[static_cast<std::size_t>(op)];
}

AggOp agg_from_code(long long code) {
  if (code < 0 || code >= static_cast<long long>(kNumAggOps))
    fail(ErrorKind::Code, "aggregation code " + std::to_string(code) + " not in 0..5");
  return static_cast<AggOp>(code);
}

CondOp cond_from_code(long long code) {
  if (code < 0 || code >= static_cast<long long>(kNumCondOps))
    fail(ErrorKind::Code, "operator code " + std::to_string(code) + " not in 0..2");
  return static_cast<CondOp>(code);
}

bool is_numeric_agg(AggOp op) {
  return op == AggOp::Max || op == AggOp::Min || op == AggOp::Sum || op == AggOp::Avg;
}

void validate(const Table& table) {
  check(!table.headers.empty(), ErrorKind::Schema, "table " + table.id + " has no headers");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    check(row.size() == table.headers.size(), ErrorKind::Schema,
          "table " + table.id + " row " + std::to_string(r) + " has " +
              std::to_string(row.size()) + " cells for " +
              std::to_string(table.headers.size()) + " headers");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (table.headers[c].type != ColumnType::Real) continue;
      const double* v = std::get_if<double>(&row[c]);
      check(v && std::isfinite(*v), ErrorKind::Type,
            "table " + table.id + " row " + std::to_string(r) + " column " +
                table.headers[c].name + " is not a finite number");
    }
  }
}

void validate(const SqlSketch& sketch, const Table& table, std::size_t max_conds) {
  const std::size_t n = table.num_columns();
  check(sketch.sel < n, ErrorKind::Contract,
        "select column " + std::to_string(sketch.sel) + " outside table " + table.id);
  check(sketch.conds.size() <= max_conds, ErrorKind::Contract,
        "more than " + std::to_string(max_conds) + " conditions");
  for (const auto& c : sketch.conds)
    check(c.column < n, ErrorKind::Contract,
          "condition column " + std::to_string(c.column) + " outside table " + table.id);
}

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool text_equal(std::string_view a, std::string_view b) {
  a = trim(a);
  b = trim(b);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::string buf;
  buf.reserve(s.size());
  std::size_t i = 0;
  if (s[0] == '+' || s[0] == '-') {
    if (s[0] == '-') buf.push_back('-');
    i = 1;
  }
  bool digits = false, dot = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      buf.push_back(c);
      digits = true;
    } else if (c == '.' && !dot) {
      buf.push_back(c);
      dot = true;
    } else if (c == ',' && digits && !dot && i + 1 < s.size() &&
               std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
      continue;  // thousands separator
    } else {
      return std::nullopt;
    }
  }
  if (!digits) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc() || ptr != buf.data() + buf.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

std::string format_number(double v) {
  if (v == std::floor(v) && std::fabs(v) < 1e15) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), static_cast<long long>(v));
    return std::string(buf, ptr);
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string value_to_string(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return format_number(std::get<double>(v));
}

bool sketch_equal(const SqlSketch& a, const SqlSketch& b) {
  if (a.sel != b.sel || a.agg != b.agg || a.conds.size() != b.conds.size()) return false;
  std::vector<bool> used(b.conds.size(), false);
  for (const auto& ca : a.conds) {
    bool matched = false;
    for (std::size_t j = 0; j < b.conds.size(); ++j) {
      const auto& cb = b.conds[j];
      if (used[j] || ca.column != cb.column || ca.op != cb.op ||
          !text_equal(ca.value, cb.value))
        continue;
      used[j] = true;
      matched = true;
      break;
    }
    if (!matched) return false;
  }
  return true;
}

}  // namespace sqlova
