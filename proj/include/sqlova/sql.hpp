#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sqlova {

enum class ColumnType { Text, Real };

/// Aggregation codes as used in WikiSQL files.
enum class AggOp : int { None = 0, Max = 1, Min = 2, Count = 3, Sum = 4, Avg = 5 };
inline constexpr std::size_t kNumAggOps = 6;

/// Condition operator codes as used in WikiSQL files.
enum class CondOp : int { Eq = 0, Gt = 1, Lt = 2 };
inline constexpr std::size_t kNumCondOps = 3;

inline constexpr std::size_t kDefaultMaxConds = 4;

const char* agg_name(AggOp op);
const char* cond_symbol(CondOp op);

/// Throws ErrorKind::Code when out of range.
AggOp agg_from_code(long long code);
CondOp cond_from_code(long long code);

/// True for MAX, MIN, SUM and AVG, which need numeric operands.
bool is_numeric_agg(AggOp op);

/// A table cell: text or a finite number.
using Value = std::variant<std::string, double>;

struct Column {
  std::string name;
  ColumnType type = ColumnType::Text;
};

struct Table {
  std::string id;
  std::vector<Column> headers;
  std::vector<std::vector<Value>> rows;

  std::size_t num_columns() const { return headers.size(); }
};

/// Checks the Table invariants (>= 1 header, rectangular rows, numeric Real
/// cells). Throws Schema / Type errors.
void validate(const Table& table);

struct Condition {
  std::size_t column = 0;
  CondOp op = CondOp::Eq;
  std::string value;

  friend bool operator==(const Condition&, const Condition&) = default;
};

struct SqlSketch {
  std::size_t sel = 0;
  AggOp agg = AggOp::None;
  std::vector<Condition> conds;

  friend bool operator==(const SqlSketch&, const SqlSketch&) = default;
};

/// Throws Contract when sel or a condition column is outside the table, or
/// there are more than max_conds conditions.
void validate(const SqlSketch& sketch, const Table& table,
              std::size_t max_conds = kDefaultMaxConds);

struct Example {
  std::string question;
  std::string table_id;
  SqlSketch gold;
};

// ---------------------------------------------------------------------------
// Text helpers shared by the executor and the metrics.

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
/// Case-insensitive, whitespace-trimmed comparison.
bool text_equal(std::string_view a, std::string_view b);

/// Parses an optionally signed decimal number, tolerating comma thousands
/// separators ("1,000.5"). Rejects exponents, inf/nan and trailing junk.
std::optional<double> parse_number(std::string_view s);

/// Shortest round-trip decimal form; integral values print without ".0".
std::string format_number(double v);

std::string value_to_string(const Value& v);

/// Condition values compare case-insensitively after trimming; the order of
/// conditions is irrelevant (multiset equality).
bool sketch_equal(const SqlSketch& a, const SqlSketch& b);

}  // namespace sqlova
