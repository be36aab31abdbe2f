#include "sqlova/eg_decoder.hpp"

#include <algorithm>
#include <cmath>

#include "sqlova/error.hpp"
#include "sqlova/executor.hpp"

namespace sqlova {

namespace {

constexpr double kLogFloor = 1e-12;

double safe_log(double p) { return std::log(std::max(p, kLogFloor)); }

bool legal_pair(const Table& table, std::size_t sel, AggOp agg) {
  return !(is_numeric_agg(agg) && table.headers[sel].type == ColumnType::Text);
}

bool executes(const Table& table, std::size_t sel, AggOp agg, std::vector<Condition> conds) {
  return !is_empty(execute(SqlSketch{sel, agg, std::move(conds)}, table));
}

struct Option {
  Condition cond;
  double log_wc, log_wo, log_wv;
  double score() const { return log_wc + log_wo + log_wv; }
};

struct Candidate {
  std::vector<const Option*> picks;
  double score = 0.0;
};

// Every way of choosing one option for each of k distinct columns, in
// column-rank then option-rank order.
void enumerate(const std::vector<std::vector<Option>>& options, std::size_t k, std::size_t first,
               Candidate& cur, std::vector<Candidate>& out) {
  if (cur.picks.size() == k) {
    out.push_back(cur);
    return;
  }
  for (std::size_t c = first; c < options.size(); ++c) {
    if (options.size() - c < k - cur.picks.size()) break;
    for (const Option& o : options[c]) {
      cur.picks.push_back(&o);
      cur.score += o.score();
      enumerate(options, k, c + 1, cur, out);
      cur.score -= o.score();
      cur.picks.pop_back();
    }
  }
}

}  // namespace

void validate(const EgConfig& cfg) {
  check(cfg.n_agg_pairs > 0 && cfg.n_wc > 0 && cfg.n_ops > 0 && cfg.n_spans > 0 && cfg.n_wn > 0 &&
            cfg.max_span > 0,
        ErrorKind::Config, "execution-guided beam widths must be positive");
  check(cfg.n_ops <= kNumCondOps, ErrorKind::Config, "n_ops cannot exceed 3");
}

SelectChoice eg_select(const ModelOutput& out, const Table& table, const EgConfig& cfg) {
  validate(cfg);
  const std::size_t n = out.num_columns();
  check(n == table.num_columns(), ErrorKind::Contract, "model output and table disagree on N_h");
  auto choice = [&](std::size_t sel, AggOp agg) {
    SelectChoice c;
    c.sel = sel;
    c.agg = agg;
    c.log_sel_column = safe_log(out.p_sc[sel]);
    c.log_sel_agg = safe_log(out.p_sa(sel, static_cast<std::size_t>(agg)));
    return c;
  };

  const std::size_t greedy_sel = argmax(out.p_sc);
  const auto greedy_agg = static_cast<AggOp>(argmax(out.p_sa.row(greedy_sel)));
  if (legal_pair(table, greedy_sel, greedy_agg)) return choice(greedy_sel, greedy_agg);

  std::vector<double> joint(n * kNumAggOps);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < kNumAggOps; ++a) joint[s * kNumAggOps + a] = out.p_sc[s] * out.p_sa(s, a);
  const auto ranked = ranked_indices(joint);
  for (std::size_t i = 0; i < std::min(cfg.n_agg_pairs, ranked.size()); ++i) {
    const std::size_t sel = ranked[i] / kNumAggOps;
    const auto agg = static_cast<AggOp>(ranked[i] % kNumAggOps);
    if (legal_pair(table, sel, agg)) return choice(sel, agg);
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < n; ++s)
    if (joint[s * kNumAggOps] > joint[best * kNumAggOps]) best = s;
  SelectChoice c = choice(best, AggOp::None);
  c.fallback = true;
  return c;
}

WhereChoice eg_where(const ModelOutput& out, std::string_view question, const TokenizedText& tok,
                     const Table& table, std::size_t sel, AggOp agg, const EgConfig& cfg) {
  validate(cfg);
  const std::size_t n = out.num_columns();
  check(n == table.num_columns(), ErrorKind::Contract, "model output and table disagree on N_h");

  const ScoredSketch greedy = decode_greedy(out, question, tok, {cfg.max_span});
  WhereChoice greedy_choice;
  greedy_choice.conds = greedy.sketch.conds;
  greedy_choice.log_where_number = greedy.parts.where_number;
  greedy_choice.log_where_column = greedy.parts.where_column;
  greedy_choice.log_where_op = greedy.parts.where_op;
  greedy_choice.log_where_value = greedy.parts.where_value;

  auto all_pass = [&](const std::vector<Condition>& conds) {
    for (const auto& c : conds)
      if (!executes(table, sel, agg, {c})) return false;
    return executes(table, sel, agg, conds);
  };
  if (all_pass(greedy_choice.conds)) return greedy_choice;

  const auto col_rank = ranked_indices(out.p_wc);
  const auto k_rank = ranked_indices(out.p_wn);
  std::vector<bool> tried(n + 1, false);
  for (std::size_t i = 0; i < std::min(cfg.n_wn, k_rank.size()); ++i) {
    const std::size_t k = std::min(k_rank[i], n);
    if (tried[k]) continue;
    tried[k] = true;
    const double log_wn = safe_log(out.p_wn[k_rank[i]]);
    if (k == 0) {
      if (executes(table, sel, agg, {})) return WhereChoice{{}, log_wn, 0.0, 0.0, 0.0, false};
      continue;
    }

    const std::size_t pool = std::min(std::max(cfg.n_wc, k), n);
    std::vector<std::vector<Option>> options;
    for (std::size_t r = 0; r < pool; ++r) {
      const std::size_t c = col_rank[r];
      std::vector<Option> opts;
      const auto ops = ranked_indices(out.p_wo.row(c));
      for (std::size_t j = 0; j < cfg.n_ops; ++j) {
        const auto op = static_cast<CondOp>(ops[j]);
        for (const ValueSpan& sp :
             ranked_spans(out.wv_start(c, op), out.wv_end(c, op), cfg.max_span, cfg.n_spans)) {
          Condition cond{c, op, span_to_text(question, tok, sp.start, sp.end)};
          if (!executes(table, sel, agg, {cond})) continue;
          opts.push_back({std::move(cond), safe_log(out.p_wc[c]), safe_log(out.p_wo(c, ops[j])),
                          safe_log(out.wv_start(c, op)[sp.start]) +
                              safe_log(out.wv_end(c, op)[sp.end])});
        }
      }
      std::stable_sort(opts.begin(), opts.end(),
                       [](const Option& a, const Option& b) { return a.score() > b.score(); });
      if (!opts.empty()) options.push_back(std::move(opts));
    }
    if (options.size() < k) continue;

    std::vector<Candidate> candidates;
    Candidate cur;
    enumerate(options, k, 0, cur, candidates);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    for (const Candidate& cand : candidates) {
      std::vector<Condition> conds;
      for (const Option* o : cand.picks) conds.push_back(o->cond);
      if (!executes(table, sel, agg, conds)) continue;
      WhereChoice w;
      w.conds = std::move(conds);
      w.log_where_number = log_wn;
      for (const Option* o : cand.picks) {
        w.log_where_column += o->log_wc;
        w.log_where_op += o->log_wo;
        w.log_where_value += o->log_wv;
      }
      return w;
    }
  }
  greedy_choice.fallback = true;
  return greedy_choice;
}

EgResult decode_eg(const ModelOutput& out, std::string_view question, const TokenizedText& tok,
                   const Table& table, const EgConfig& cfg) {
  const SelectChoice s = eg_select(out, table, cfg);
  const WhereChoice w = eg_where(out, question, tok, table, s.sel, s.agg, cfg);
  EgResult r;
  r.scored.sketch = SqlSketch{s.sel, s.agg, w.conds};
  r.scored.parts = {s.log_sel_column, s.log_sel_agg,  w.log_where_number,
                    w.log_where_column, w.log_where_op, w.log_where_value};
  r.scored.log_prob = r.scored.parts.total();
  r.select_fallback = s.fallback;
  r.where_fallback = w.fallback;
  return r;
}

}  // namespace sqlova
