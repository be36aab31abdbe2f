#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "sqlova/autograd.hpp"
#include "sqlova/encoder.hpp"
#include "sqlova/model_output.hpp"
#include "sqlova/sql.hpp"

namespace sqlova {

/// Differentiable sketch-decoder outputs for one question.
struct HeadOutput {
  Var p_sc;  // [1 x N_h]
  Var p_sa;  // [N_h x 6]
  Var p_wn;  // [1 x (max_conds + 1)]
  Var p_wc;  // [1 x N_h]
  Var p_wo;  // [N_h x 3]
  /// (p_start, p_end), each [1 x L], keyed by column * 3 + op. Only the
  /// requested pairs are present.
  std::map<std::size_t, std::pair<Var, Var>> wv;
};

inline std::size_t value_slot(std::size_t column, CondOp op) {
  return column * kNumCondOps + static_cast<std::size_t>(op);
}

/// Which (column, op) pairs get where-value distributions; nullopt means all.
using ValueRequest = std::optional<std::vector<std::pair<std::size_t, CondOp>>>;

/// A decoding layer turns encoder output into sketch probabilities.
class DecodingLayer {
 public:
  virtual ~DecodingLayer() = default;
  virtual HeadOutput forward(Graph& g, const ParamStore& params, const EncoderOutput& enc,
                             const ValueRequest& values) const = 0;
};

/// Copies values out of the graph; every (column, op) slot must be present.
ModelOutput to_model_output(const HeadOutput& head);

}  // namespace sqlova
