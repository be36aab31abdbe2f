#include "sqlova/params.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sqlova/error.hpp"

namespace sqlova {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

ParamId ParamStore::add(std::string name, Matrix init, ParamGroup group) {
  check(!index_.contains(name), ErrorKind::Internal, "duplicate parameter " + name);
  const auto id = static_cast<ParamId>(entries_.size());
  index_.emplace(name, id);
  entries_.push_back({std::move(name), std::move(init), group});
  return id;
}

std::optional<ParamId> ParamStore::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ParamId ParamStore::id(std::string_view name) const {
  auto found = find(name);
  if (!found) fail(ErrorKind::Contract, "unknown parameter " + std::string(name));
  return *found;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

GradBuffer::GradBuffer(const ParamStore& store)
    : store_(&store), grads_(store.size()), touched_(store.size(), false) {}

Matrix& GradBuffer::at(ParamId id) {
  if (!touched_.at(id)) {
    const Matrix& v = store_->value(id);
    grads_[id] = Matrix(v.rows(), v.cols());
    touched_[id] = true;
  }
  return grads_[id];
}

const Matrix* GradBuffer::find(ParamId id) const {
  return touched_.at(id) ? &grads_[id] : nullptr;
}

void GradBuffer::add(const GradBuffer& other) {
  check(other.grads_.size() == grads_.size(), ErrorKind::Internal,
        "gradient buffers of different stores");
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    if (!other.touched_[i]) continue;
    Matrix& dst = at(static_cast<ParamId>(i));
    const Matrix& src = other.grads_[i];
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
}

void GradBuffer::scale(double s) {
  for (std::size_t i = 0; i < grads_.size(); ++i)
    if (touched_[i])
      for (double& v : grads_[i].values()) v *= s;
}

void GradBuffer::clear() {
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    grads_[i] = Matrix();
    touched_[i] = false;
  }
}

void init_uniform(Matrix& m, Rng& rng, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : m.values()) v = dist(rng);
}

void init_normal(Matrix& m, Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : m.values()) v = dist(rng);
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'Q', 'L', 'V', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorKind::Parse, "truncated checkpoint");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint snapshot(const ParamStore& store, std::string meta) {
  Checkpoint ckpt{std::move(meta), {}};
  ckpt.arrays.reserve(store.size());
  for (ParamId id = 0; id < store.size(); ++id)
    ckpt.arrays.emplace_back(store.name(id), store.value(id));
  return ckpt;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.meta.size()));
  out += ckpt.meta;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& [name, m] : ckpt.arrays) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, m.rows());
    put<std::uint64_t>(out, m.cols());
    out.append(reinterpret_cast<const char*>(m.data()), m.size() * sizeof(double));
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic)))
    fail(ErrorKind::Parse, "not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  check(version == kCheckpointVersion, ErrorKind::Parse,
        "unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.meta = std::string(r.take(r.get<std::uint32_t>()));
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.take(r.get<std::uint32_t>()));
    const auto rank = r.get<std::uint32_t>();
    check(rank >= 1 && rank <= 2, ErrorKind::Parse, "array " + name + " has unsupported rank");
    std::uint64_t rows = 1, cols = r.get<std::uint64_t>();
    if (rank == 2) {
      rows = cols;
      cols = r.get<std::uint64_t>();
    }
    auto raw = r.take(rows * cols * sizeof(double));
    std::vector<double> data(rows * cols);
    std::memcpy(data.data(), raw.data(), raw.size());
    ckpt.arrays.emplace_back(std::move(name), Matrix(rows, cols, std::move(data)));
  }
  check(r.done(), ErrorKind::Parse, "trailing bytes after checkpoint");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  const std::string bytes = encode_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

void restore(ParamStore& store, const Checkpoint& ckpt, bool strict) {
  std::vector<bool> seen(store.size(), false);
  for (const auto& [name, m] : ckpt.arrays) {
    auto id = store.find(name);
    if (!id) {
      if (strict) fail(ErrorKind::Config, "checkpoint array " + name + " has no parameter");
      continue;
    }
    Matrix& dst = store.value(*id);
    check(dst.same_shape(m), ErrorKind::Config, "checkpoint array " + name + " has wrong shape");
    dst = m;
    seen[*id] = true;
  }
  for (ParamId id = 0; id < store.size(); ++id)
    check(seen[id], ErrorKind::Config, "checkpoint lacks parameter " + store.name(id));
}

}  // namespace sqlova
