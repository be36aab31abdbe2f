#pragma once

#include <variant>
#include <vector>

#include <json.hpp>

#include "sqlova/sql.hpp"

namespace sqlova {

struct Rows {
  std::vector<Value> values;
};
struct Scalar {
  double value = 0.0;
};
struct Empty {};

/// NONE yields Rows; COUNT always a Scalar; numeric aggregations yield a
/// Scalar, or Empty over zero rows or a Text column. NONE over zero rows is
/// Empty as well.
using ExecResult = std::variant<Rows, Scalar, Empty>;

inline bool is_empty(const ExecResult& r) { return std::holds_alternative<Empty>(r); }

/// '=' compares text case-insensitively after trimming on Text columns and
/// parsed numbers on Real columns. '>' and '<' need both sides numeric.
bool row_matches(const std::vector<Value>& row, const Condition& cond, const Table& table);

ExecResult execute(const SqlSketch& sketch, const Table& table);

/// Scalars within relative tolerance 1e-6; Rows as multisets of values.
bool results_equal(const ExecResult& a, const ExecResult& b);
bool values_equal(const Value& a, const Value& b);

nlohmann::json to_json(const ExecResult& r);

}  // namespace sqlova
