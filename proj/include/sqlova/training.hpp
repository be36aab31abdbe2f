#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sqlova/dataset_io.hpp"
#include "sqlova/model.hpp"

namespace sqlova {

struct OptimConfig {
  double lr_encoder = 1e-5;
  double lr_head = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
};

/// Throws Config on negative rates, betas outside (0, 1) or a zero batch.
void validate(const OptimConfig& cfg);

/// Supervision derived from a gold sketch; spans are inclusive subtoken
/// indices into the question.
struct GoldLabels {
  std::size_t sel = 0;
  AggOp agg = AggOp::None;
  std::vector<Condition> conds;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // one per condition
};

/// nullopt (unlocatable) when some condition value does not occur in the
/// question as a run of whole words, compared case-insensitively.
std::optional<GoldLabels> make_labels(const SqlSketch& gold, std::string_view question,
                                      const TokenizedText& tok);

/// The (column, op) pairs whose where-value output the loss needs.
std::vector<std::pair<std::size_t, CondOp>> value_pairs(const GoldLabels& gold);

/// Sum of negative log-likelihoods; the where-column term is a binary
/// cross-entropy over every column. Logs are clamped at 1e-12.
Var loss(const HeadOutput& head, const GoldLabels& gold);
double loss(const ModelOutput& out, const GoldLabels& gold);

class Adam {
 public:
  Adam(const ParamStore& store, const OptimConfig& cfg);
  /// One update; arrays without a gradient in `grads` are left alone, as are
  /// groups whose learning rate is zero.
  void step(ParamStore& store, const GradBuffer& grads);
  std::size_t steps() const { return t_; }

 private:
  OptimConfig cfg_;
  std::vector<Matrix> m_, v_;
  std::size_t t_ = 0;
};

struct TrainExample {
  PreparedExample prepared;
  GoldLabels labels;
  SqlSketch gold;
};

struct PrepareStats {
  std::size_t unlocatable = 0;
  std::size_t too_long = 0;
};

/// Tokenizes, assembles and labels the examples, skipping (and counting)
/// unlocatable values and over-long inputs. Tables must outlive the result.
std::vector<TrainExample> prepare_training_set(const Model& model,
                                               const std::vector<Example>& examples,
                                               const TableMap& tables, const Vocabulary& vocab,
                                               PrepareStats* stats = nullptr);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean per example
  // Slot accuracies read off the training forward passes, with the gold
  // column and operator given for the value span.
  double sel_column = 0.0, sel_agg = 0.0, where_number = 0.0, where_column = 0.0,
         where_op = 0.0, where_value = 0.0;
  std::optional<double> lf_accuracy;  // greedy decoding, when evaluated
};

nlohmann::json to_json(const EpochRecord& rec);

struct TrainConfig {
  OptimConfig optim;
  std::uint64_t seed = 7;
  std::size_t threads = 0;     // 0: hardware concurrency
  std::size_t eval_every = 0;  // greedy LF on the training set every n epochs; 0 never
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t used = 0;
  PrepareStats skipped;
};

/// Mini-batch Adam. Gradients of a batch are reduced over a fixed number of
/// shards in a fixed order, so results do not depend on the thread count.
/// Throws Usage when no example is usable.
TrainReport train(Model& model, const std::vector<Example>& examples, const TableMap& tables,
                  const Vocabulary& vocab, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Greedy-decodes every prepared example (in parallel, order preserved).
std::vector<ScoredSketch> predict_greedy(const Model& model,
                                         const std::vector<TrainExample>& examples,
                                         std::size_t threads = 0, std::size_t max_span = 12);

struct GradCheckConfig {
  double epsilon = 1e-5;
  std::size_t samples_per_array = 3;
  std::uint64_t seed = 1;
  /// Coordinates whose analytic gradient is below this magnitude are checked
  /// against max_abs_error instead of the relative measure.
  double relative_floor = 1e-6;
  /// Arrays whose name starts with one of these are checked; empty means all.
  std::vector<std::string> prefixes;
  /// Fault injection: scale the analytic gradient of this array.
  std::optional<std::string> corrupt_array;
  double corrupt_factor = 2.0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;  // over coordinates below the relative floor
  std::string worst_array;
  std::size_t coords_checked = 0;
};

/// Central finite differences of the training loss against backpropagation,
/// |a - n| / max(1e-8, |a| + |n|) maximised over sampled coordinates.
GradCheckResult grad_check(Model& model, const PreparedExample& ex, const GoldLabels& gold,
                           const GradCheckConfig& cfg = {});

}  // namespace sqlova
