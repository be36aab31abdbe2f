#include "sqlova/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sqlova/error.hpp"
#include "sqlova/executor.hpp"

namespace sqlova {

namespace {

template <class Eq>
bool multiset_equal(const std::vector<Condition>& a, const std::vector<Condition>& b, Eq eq) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const auto& x : a) {
    bool found = false;
    for (std::size_t j = 0; j < b.size(); ++j)
      if (!used[j] && eq(x, b[j])) {
        used[j] = found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

double rate(std::size_t n, std::size_t total) {
  return total ? static_cast<double>(n) / static_cast<double>(total) : 0.0;
}

}  // namespace

SlotMatch compare_slots(const SqlSketch& pred, const SqlSketch& gold) {
  SlotMatch m;
  m.sel_column = pred.sel == gold.sel;
  m.sel_agg = pred.agg == gold.agg;
  m.where_number = pred.conds.size() == gold.conds.size();
  m.where_column = multiset_equal(pred.conds, gold.conds, [](const auto& a, const auto& b) {
    return a.column == b.column;
  });
  m.where_op = multiset_equal(pred.conds, gold.conds, [](const auto& a, const auto& b) {
    return a.column == b.column && a.op == b.op;
  });
  m.where_value = multiset_equal(pred.conds, gold.conds, [](const auto& a, const auto& b) {
    return a.column == b.column && a.op == b.op && text_equal(a.value, b.value);
  });
  return m;
}

PrCurve pr_sweep(const std::vector<double>& confidences, const std::vector<bool>& correct) {
  check(confidences.size() == correct.size(), ErrorKind::Usage,
        "confidences and correctness differ in length");
  PrCurve curve;
  const std::size_t total = confidences.size();
  std::vector<double> thresholds = confidences;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  for (double t : thresholds) {
    std::size_t answered = 0, right = 0;
    for (std::size_t i = 0; i < total; ++i)
      if (confidences[i] >= t) {
        ++answered;
        if (correct[i]) ++right;
      }
    curve.points.push_back(
        {t, answered ? rate(right, answered) : 1.0, rate(answered, total)});
  }
  double prev_recall = 0.0, prev_precision = 1.0;
  for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it) {
    curve.auc += (it->recall - prev_recall) * (it->precision + prev_precision) / 2.0;
    prev_recall = it->recall;
    prev_precision = it->precision;
  }
  return curve;
}

EvalReport evaluate(const std::vector<ScoredSketch>& preds, const std::vector<Example>& golds,
                    const TableMap& tables) {
  check(preds.size() == golds.size(), ErrorKind::Usage,
        "predictions (" + std::to_string(preds.size()) + ") and gold examples (" +
            std::to_string(golds.size()) + ") differ in length");
  EvalReport r;
  r.total = preds.size();
  std::size_t sc = 0, sa = 0, wn = 0, wc = 0, wo = 0, wv = 0;
  std::vector<double> confidences;
  std::vector<bool> lf;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Table& table = lookup_table(tables, golds[i].table_id);
    const SqlSketch& pred = preds[i].sketch;
    const SqlSketch& gold = golds[i].gold;
    const SlotMatch m = compare_slots(pred, gold);
    sc += m.sel_column;
    sa += m.sel_agg;
    wn += m.where_number;
    wc += m.where_column;
    wo += m.where_op;
    wv += m.where_value;
    const bool lf_ok = sketch_equal(pred, gold);
    r.lf_correct += lf_ok;
    bool x_ok = false;
    try {
      x_ok = results_equal(execute(pred, table), execute(gold, table));
    } catch (const Error&) {
      x_ok = false;  // prediction does not fit the table
    }
    r.x_correct += x_ok;
    confidences.push_back(std::exp(preds[i].log_prob));
    lf.push_back(lf_ok);
  }
  r.lf_accuracy = rate(r.lf_correct, r.total);
  r.x_accuracy = rate(r.x_correct, r.total);
  r.submodule = {rate(sc, r.total), rate(sa, r.total), rate(wn, r.total),
                 rate(wc, r.total), rate(wo, r.total), rate(wv, r.total)};
  r.pr = pr_sweep(confidences, lf);
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  using nlohmann::json;
  json curve = json::array();
  for (const auto& p : r.pr.points)
    curve.push_back({{"threshold", p.threshold}, {"precision", p.precision}, {"recall", p.recall}});
  return json{{"total", r.total},
              {"lf_correct", r.lf_correct},
              {"x_correct", r.x_correct},
              {"lf_accuracy", r.lf_accuracy},
              {"x_accuracy", r.x_accuracy},
              {"submodule",
               {{"s_col", r.submodule.sel_column},
                {"s_agg", r.submodule.sel_agg},
                {"w_num", r.submodule.where_number},
                {"w_col", r.submodule.where_column},
                {"w_op", r.submodule.where_op},
                {"w_val", r.submodule.where_value}}},
              {"pr_curve", curve},
              {"auc", r.pr.auc}};
}

void write_pr_csv(std::ostream& out, const PrCurve& curve) {
  out << "threshold,precision,recall\n";
  out.precision(17);
  for (const auto& p : curve.points) out << p.threshold << ',' << p.precision << ',' << p.recall << '\n';
}

}  // namespace sqlova
