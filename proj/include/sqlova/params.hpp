#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sqlova/matrix.hpp"

namespace sqlova {

using ParamId = std::uint32_t;
using Rng = std::mt19937_64;

/// Optimizer learning-rate group a parameter belongs to.
enum class ParamGroup { Encoder, Head };

/// Named, ordered collection of trainable arrays. Ids are dense and follow
/// insertion order, which is also checkpoint order.
class ParamStore {
 public:
  ParamId add(std::string name, Matrix init, ParamGroup group);

  std::optional<ParamId> find(std::string_view name) const;
  ParamId id(std::string_view name) const;  // throws Contract on unknown name

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  const std::string& name(ParamId id) const { return entries_.at(id).name; }
  ParamGroup group(ParamId id) const { return entries_.at(id).group; }
  const Matrix& value(ParamId id) const { return entries_.at(id).value; }
  Matrix& value(ParamId id) { return entries_.at(id).value; }

 private:
  struct Entry {
    std::string name;
    Matrix value;
    ParamGroup group;
  };
  std::vector<Entry> entries_;
  std::map<std::string, ParamId, std::less<>> index_;
};

/// Gradient accumulator aligned with a ParamStore; arrays allocate on first touch.
class GradBuffer {
 public:
  GradBuffer() = default;
  explicit GradBuffer(const ParamStore& store);

  Matrix& at(ParamId id);
  const Matrix* find(ParamId id) const;
  std::size_t size() const { return grads_.size(); }

  void add(const GradBuffer& other);
  void scale(double s);
  void clear();

 private:
  const ParamStore* store_ = nullptr;
  std::vector<Matrix> grads_;
  std::vector<bool> touched_;
};

void init_uniform(Matrix& m, Rng& rng, double bound);
void init_normal(Matrix& m, Rng& rng, double stddev);

// ---------------------------------------------------------------------------
// Checkpoint container (see docs/checkpoint_format.md):
//   "SQLVCKPT" | u32 version | u32 meta_len | meta (UTF-8 JSON)
//   | u32 n_arrays | n x { u32 name_len | name | u32 rank | u64 dims[rank]
//   | f64 data[prod(dims)] }
// All integers and doubles little-endian.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string meta;  // model configuration as JSON text
  std::vector<std::pair<std::string, Matrix>> arrays;
};

Checkpoint snapshot(const ParamStore& store, std::string meta);
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Copies every array of `ckpt` into the same-named parameter. Missing or
/// misshapen arrays are Config errors; extra arrays are ignored unless strict.
void restore(ParamStore& store, const Checkpoint& ckpt, bool strict = true);

}  // namespace sqlova
