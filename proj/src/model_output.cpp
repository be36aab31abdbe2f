#include "sqlova/model_output.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sqlova/error.hpp"

namespace sqlova {

using nlohmann::json;

namespace {

constexpr double kLogFloor = 1e-12;

double safe_log(double p) { return std::log(std::max(p, kLogFloor)); }

std::optional<std::string> check_distribution(std::span<const double> p, double tol,
                                              const std::string& what) {
  double s = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) return what + " has an entry outside [0, 1]";
    s += v;
  }
  if (std::fabs(s - 1.0) > tol) return what + " sums to " + std::to_string(s);
  return std::nullopt;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r)
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t cols_if_empty) {
  if (!j.is_array()) fail(ErrorKind::Parse, "expected a nested array");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : cols_if_empty;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    check(j[r].is_array() && j[r].size() == cols, ErrorKind::Parse, "ragged array");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

std::optional<std::string> find_invariant_violation(const ModelOutput& out, double tol) {
  const std::size_t n = out.num_columns();
  const std::size_t len = out.question_len();
  if (n == 0) return "no columns";
  if (out.p_sa.rows() != n || out.p_sa.cols() != kNumAggOps) return "p_sa shape";
  if (out.p_wc.size() != n) return "p_wc length";
  if (out.p_wo.rows() != n || out.p_wo.cols() != kNumCondOps) return "p_wo shape";
  if (out.p_wv_start.rows() != n * kNumCondOps || out.p_wv_end.rows() != n * kNumCondOps ||
      out.p_wv_end.cols() != len)
    return "p_wv shape";
  if (auto e = check_distribution(out.p_sc, tol, "p_sc")) return e;
  if (auto e = check_distribution(out.p_wn, tol, "p_wn")) return e;
  for (std::size_t c = 0; c < n; ++c) {
    if (auto e = check_distribution(out.p_sa.row(c), tol, "p_sa row " + std::to_string(c))) return e;
    if (auto e = check_distribution(out.p_wo.row(c), tol, "p_wo row " + std::to_string(c))) return e;
    if (!(out.p_wc[c] > 0.0 && out.p_wc[c] < 1.0))
      return "p_wc[" + std::to_string(c) + "] not in (0, 1)";
  }
  for (std::size_t r = 0; r < out.p_wv_start.rows(); ++r) {
    if (auto e = check_distribution(out.p_wv_start.row(r), tol, "p_wv_start slice")) return e;
    if (auto e = check_distribution(out.p_wv_end.row(r), tol, "p_wv_end slice")) return e;
  }
  return std::nullopt;
}

json to_json(const ModelOutput& out) {
  const std::size_t n = out.num_columns();
  json start = json::array(), end = json::array();
  for (std::size_t c = 0; c < n; ++c) {
    json s = json::array(), e = json::array();
    for (std::size_t op = 0; op < kNumCondOps; ++op) {
      const auto cop = static_cast<CondOp>(op);
      s.push_back(std::vector<double>(out.wv_start(c, cop).begin(), out.wv_start(c, cop).end()));
      e.push_back(std::vector<double>(out.wv_end(c, cop).begin(), out.wv_end(c, cop).end()));
    }
    start.push_back(std::move(s));
    end.push_back(std::move(e));
  }
  return json{{"p_sc", out.p_sc},         {"p_sa", matrix_json(out.p_sa)},
              {"p_wn", out.p_wn},         {"p_wc", out.p_wc},
              {"p_wo", matrix_json(out.p_wo)}, {"p_wv_start", start},
              {"p_wv_end", end}};
}

ModelOutput model_output_from_json(const json& j) {
  try {
    ModelOutput out;
    out.p_sc = j.at("p_sc").get<std::vector<double>>();
    out.p_wn = j.at("p_wn").get<std::vector<double>>();
    out.p_wc = j.at("p_wc").get<std::vector<double>>();
    const std::size_t n = out.p_sc.size();
    out.p_sa = matrix_from_json(j.at("p_sa"), kNumAggOps);
    out.p_wo = matrix_from_json(j.at("p_wo"), kNumCondOps);
    const json& s = j.at("p_wv_start");
    const json& e = j.at("p_wv_end");
    check(s.size() == n && e.size() == n, ErrorKind::Parse, "p_wv first dimension must be N_h");
    const std::size_t len = n ? s[0][0].size() : 0;
    out.p_wv_start = Matrix(n * kNumCondOps, len);
    out.p_wv_end = Matrix(n * kNumCondOps, len);
    for (std::size_t c = 0; c < n; ++c) {
      check(s[c].size() == kNumCondOps && e[c].size() == kNumCondOps, ErrorKind::Parse,
            "p_wv second dimension must be 3");
      for (std::size_t op = 0; op < kNumCondOps; ++op) {
        check(s[c][op].size() == len && e[c][op].size() == len, ErrorKind::Parse, "ragged p_wv");
        for (std::size_t t = 0; t < len; ++t) {
          out.p_wv_start(c * kNumCondOps + op, t) = s[c][op][t].get<double>();
          out.p_wv_end(c * kNumCondOps + op, t) = e[c][op][t].get<double>();
        }
      }
    }
    if (auto v = find_invariant_violation(out, 1e-6))
      fail(ErrorKind::Parse, "model output violates invariants: " + *v);
    return out;
  } catch (const json::exception& ex) {
    fail(ErrorKind::Parse, std::string("model output record: ") + ex.what());
  }
}

json to_json(const SketchLogProbs& p) {
  return json{{"sel_column", p.sel_column},     {"sel_agg", p.sel_agg},
              {"where_number", p.where_number}, {"where_column", p.where_column},
              {"where_op", p.where_op},         {"where_value", p.where_value}};
}

std::vector<std::size_t> ranked_indices(std::span<const double> probs) {
  std::vector<std::size_t> idx(probs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  return idx;
}

std::size_t argmax(std::span<const double> probs) {
  check(!probs.empty(), ErrorKind::Contract, "argmax of an empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;
}

std::vector<ValueSpan> ranked_spans(std::span<const double> p_start, std::span<const double> p_end,
                                    std::size_t max_span, std::size_t limit) {
  check(p_start.size() == p_end.size(), ErrorKind::Contract, "start/end length mismatch");
  check(max_span >= 1, ErrorKind::Config, "max_span must be positive");
  std::vector<ValueSpan> spans;
  const std::size_t len = p_start.size();
  for (std::size_t s = 0; s < len; ++s)
    for (std::size_t e = s; e < len && e < s + max_span; ++e)
      spans.push_back({s, e, p_start[s] * p_end[e]});
  std::stable_sort(spans.begin(), spans.end(),
                   [](const ValueSpan& a, const ValueSpan& b) { return a.prob > b.prob; });
  if (spans.size() > limit) spans.resize(limit);
  return spans;
}

ScoredSketch decode_greedy(const ModelOutput& out, std::string_view question,
                           const TokenizedText& tok, const DecodeConfig& cfg) {
  const std::size_t n = out.num_columns();
  check(n > 0, ErrorKind::Contract, "model output has no columns");
  ScoredSketch res;
  SqlSketch& sk = res.sketch;
  sk.sel = argmax(out.p_sc);
  sk.agg = static_cast<AggOp>(argmax(out.p_sa.row(sk.sel)));
  res.parts.sel_column = safe_log(out.p_sc[sk.sel]);
  res.parts.sel_agg = safe_log(out.p_sa(sk.sel, static_cast<std::size_t>(sk.agg)));

  const std::size_t k_raw = argmax(out.p_wn);
  res.parts.where_number = safe_log(out.p_wn[k_raw]);
  const std::size_t k = std::min(k_raw, n);
  const auto cols = ranked_indices(out.p_wc);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t c = cols[i];
    const auto op = static_cast<CondOp>(argmax(out.p_wo.row(c)));
    const auto spans = ranked_spans(out.wv_start(c, op), out.wv_end(c, op), cfg.max_span, 1);
    check(!spans.empty(), ErrorKind::Contract, "no question tokens to take a value from");
    const ValueSpan& sp = spans.front();
    sk.conds.push_back({c, op, span_to_text(question, tok, sp.start, sp.end)});
    res.parts.where_column += safe_log(out.p_wc[c]);
    res.parts.where_op += safe_log(out.p_wo(c, static_cast<std::size_t>(op)));
    res.parts.where_value +=
        safe_log(out.wv_start(c, op)[sp.start]) + safe_log(out.wv_end(c, op)[sp.end]);
  }
  res.log_prob = res.parts.total();
  return res;
}

}  // namespace sqlova
