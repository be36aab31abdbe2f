#pragma once

#include <array>
#include <cstddef>
#include <utility>

#include "sqlova/head.hpp"
#include "sqlova/params.hpp"

namespace sqlova {

struct ShallowConfig {
  std::size_t value_end_offset = 100;
  std::size_t max_headers = 44;
  std::size_t max_conds = kDefaultMaxConds;
};

/// Throws Config unless d_out >= offset + max_headers, offset >= max_headers
/// and the fixed components 0..10 exist.
void validate(const ShallowConfig& cfg, std::size_t d_out);

/// Encoder component holding the score of each CondOp, indexed by CondOp
/// code. Components 8, 9, 10 read as >, =, <.
inline constexpr std::array<std::size_t, kNumCondOps> kShallowOpComponent = {9, 8, 10};
inline constexpr std::size_t kShallowSelectComponent = 0;
inline constexpr std::size_t kShallowAggComponent = 1;  // 1..6 in AggOp order
inline constexpr std::size_t kShallowWhereComponent = 7;

/// Each takes the stacked first-token vectors of the headers [N_h x d_out].
Var shallow_select_column(Var header_first);  // [1 x N_h]
Var shallow_select_agg(Var header_first);     // [N_h x 6]
Var shallow_where_column(Var header_first);   // [1 x N_h]
Var shallow_where_operator(Var header_first); // [N_h x 3], CondOp order
/// Softmax of the packed affine w [(max_conds+1) x (d_out+1)] applied to H_cls.
Var shallow_where_number(Var cls, Var w);
/// Start and end distributions [1 x L] for column mu over question rows.
std::pair<Var, Var> shallow_where_value(Var question, std::size_t mu, const ShallowConfig& cfg);

/// Decoding layer that reads probabilities from fixed encoder components.
/// Its only array is "shallow.where_number".
class ShallowLayer : public DecodingLayer {
 public:
  ShallowLayer(ShallowConfig cfg, std::size_t d_out);

  void register_params(ParamStore& store, Rng& rng);
  void bind(const ParamStore& store);

  HeadOutput forward(Graph& g, const ParamStore& params, const EncoderOutput& enc,
                     const ValueRequest& values) const override;

  const ShallowConfig& config() const { return cfg_; }

 private:
  ShallowConfig cfg_;
  std::size_t d_out_;
  ParamId where_number_ = 0;
  bool bound_ = false;
};

}  // namespace sqlova
