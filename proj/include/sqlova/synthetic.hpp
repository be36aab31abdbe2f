#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqlova/dataset_io.hpp"
#include "sqlova/tokenizer.hpp"

namespace sqlova {

struct SyntheticConfig {
  std::size_t train_examples = 200;
  std::size_t dev_examples = 100;
  std::uint64_t seed = 7;
};

/// Templated questions over ten small generated tables. Every aggregation,
/// operator and condition count 0..4 occurs; numeric aggregations only on
/// Real columns; condition values are copied from (or offset from) the cells
/// of one anchor row, so every gold query returns a non-Empty result.
struct SyntheticData {
  TableMap tables;
  std::vector<Example> train;
  std::vector<Example> dev;
  Vocabulary vocab;
};

SyntheticData generate_synthetic(const SyntheticConfig& cfg = {});

/// Question words (basic tokenizer) and header words (whitespace split).
std::vector<std::string> corpus_words(const std::vector<Example>& examples, const TableMap& tables);

}  // namespace sqlova
