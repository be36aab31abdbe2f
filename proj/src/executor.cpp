#include "sqlova/executor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sqlova/error.hpp"

namespace sqlova {

namespace {

constexpr double kRelTol = 1e-6;

std::optional<double> numeric(const Value& v) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  return parse_number(std::get<std::string>(v));
}

bool numbers_close(double a, double b) {
  return std::fabs(a - b) <= kRelTol * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace

bool row_matches(const std::vector<Value>& row, const Condition& cond, const Table& table) {
  check(cond.column < table.num_columns() && cond.column < row.size(), ErrorKind::Bounds,
        "condition column out of range");
  const Value& cell = row[cond.column];
  if (cond.op == CondOp::Eq && table.headers[cond.column].type == ColumnType::Text)
    return text_equal(value_to_string(cell), cond.value);
  const auto lhs = numeric(cell);
  const auto rhs = parse_number(cond.value);
  if (!lhs || !rhs) return false;
  switch (cond.op) {
    case CondOp::Eq: return *lhs == *rhs;
    case CondOp::Gt: return *lhs > *rhs;
    case CondOp::Lt: return *lhs < *rhs;
  }
  return false;
}

ExecResult execute(const SqlSketch& sketch, const Table& table) {
  check(sketch.sel < table.num_columns(), ErrorKind::Contract, "select column out of range");
  std::vector<const std::vector<Value>*> matched;
  for (const auto& row : table.rows) {
    bool ok = true;
    for (const auto& c : sketch.conds)
      if (!row_matches(row, c, table)) {
        ok = false;
        break;
      }
    if (ok) matched.push_back(&row);
  }
  if (sketch.agg == AggOp::Count) return Scalar{static_cast<double>(matched.size())};
  if (matched.empty()) return Empty{};
  if (sketch.agg == AggOp::None) {
    Rows rows;
    for (const auto* r : matched) rows.values.push_back((*r)[sketch.sel]);
    return rows;
  }
  if (table.headers[sketch.sel].type != ColumnType::Real) return Empty{};

  double acc = sketch.agg == AggOp::Max   ? -std::numeric_limits<double>::infinity()
               : sketch.agg == AggOp::Min ? std::numeric_limits<double>::infinity()
                                          : 0.0;
  for (const auto* r : matched) {
    const double v = std::get<double>((*r)[sketch.sel]);
    switch (sketch.agg) {
      case AggOp::Max: acc = std::max(acc, v); break;
      case AggOp::Min: acc = std::min(acc, v); break;
      default: acc += v; break;
    }
  }
  if (sketch.agg == AggOp::Avg) acc /= static_cast<double>(matched.size());
  return Scalar{acc};
}

bool values_equal(const Value& a, const Value& b) {
  const auto na = numeric(a);
  const auto nb = numeric(b);
  if (na && nb) return numbers_close(*na, *nb);
  return text_equal(value_to_string(a), value_to_string(b));
}

bool results_equal(const ExecResult& a, const ExecResult& b) {
  if (a.index() != b.index()) return false;
  if (is_empty(a)) return true;
  if (const auto* sa = std::get_if<Scalar>(&a))
    return numbers_close(sa->value, std::get<Scalar>(b).value);
  const auto& ra = std::get<Rows>(a).values;
  const auto& rb = std::get<Rows>(b).values;
  if (ra.size() != rb.size()) return false;
  std::vector<bool> used(rb.size(), false);
  for (const auto& v : ra) {
    bool found = false;
    for (std::size_t j = 0; j < rb.size(); ++j)
      if (!used[j] && values_equal(v, rb[j])) {
        used[j] = found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

namespace {

nlohmann::json number_json(double v) {
  if (std::floor(v) == v && std::fabs(v) < 9.0e15) return static_cast<long long>(v);
  return v;
}

}  // namespace

nlohmann::json to_json(const ExecResult& r) {
  using nlohmann::json;
  if (is_empty(r)) return json{{"empty", true}};
  if (const auto* s = std::get_if<Scalar>(&r)) return json{{"scalar", number_json(s->value)}};
  json rows = json::array();
  for (const auto& v : std::get<Rows>(r).values) {
    if (const double* d = std::get_if<double>(&v))
      rows.push_back(number_json(*d));
    else
      rows.push_back(std::get<std::string>(v));
  }
  return json{{"rows", rows}};
}

}  // namespace sqlova
