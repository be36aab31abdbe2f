#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "sqlova/dataset_io.hpp"
#include "sqlova/model_output.hpp"

namespace sqlova {

/// Per-slot agreement between a predicted and a gold sketch. Condition
/// comparisons are order-free.
struct SlotMatch {
  bool sel_column = false;
  bool sel_agg = false;
  bool where_number = false;
  bool where_column = false;  // multiset of columns
  bool where_op = false;      // multiset of (column, op)
  bool where_value = false;   // multiset of full conditions
};

SlotMatch compare_slots(const SqlSketch& pred, const SqlSketch& gold);

struct SubmoduleAccuracy {
  double sel_column = 0.0;
  double sel_agg = 0.0;
  double where_number = 0.0;
  double where_column = 0.0;
  double where_op = 0.0;
  double where_value = 0.0;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // thresholds ascending
  double auc = 0.0;
};

/// Thresholds are the distinct confidences. At threshold t the answered set
/// is {confidence >= t}; precision is 1 when nothing is answered. The area
/// is the trapezoid rule over recall, starting from (recall 0, precision 1).
PrCurve pr_sweep(const std::vector<double>& confidences, const std::vector<bool>& correct);

struct EvalReport {
  std::size_t total = 0;
  std::size_t lf_correct = 0;
  std::size_t x_correct = 0;
  double lf_accuracy = 0.0;
  double x_accuracy = 0.0;
  SubmoduleAccuracy submodule;
  PrCurve pr;  // confidence exp(log_prob) against LF correctness
};

/// Throws Usage when the sequences differ in length or a table id is unknown.
EvalReport evaluate(const std::vector<ScoredSketch>& preds, const std::vector<Example>& golds,
                    const TableMap& tables);

nlohmann::json to_json(const EvalReport& report);
void write_pr_csv(std::ostream& out, const PrCurve& curve);

}  // namespace sqlova
