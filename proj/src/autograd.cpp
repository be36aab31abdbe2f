#include "sqlova/autograd.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "sqlova/error.hpp"
#include "sqlova/kernels.hpp"

namespace sqlova {

const Matrix& Var::value() const { return graph->value(*this); }

double Var::scalar() const {
  const Matrix& m = value();
  check(m.size() == 1, ErrorKind::Internal, "scalar() on a non 1x1 node");
  return m[0];
}

Var Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::constant(Matrix m) {
  Node n;
  n.owned = std::move(m);
  return push(std::move(n));
}

Var Graph::variable(Matrix m) {
  Node n;
  n.owned = std::move(m);
  n.requires_grad = track_;
  return push(std::move(n));
}

Var Graph::param(const ParamStore& store, ParamId id) {
  if (auto it = param_nodes_.find(id); it != param_nodes_.end()) return Var{this, it->second};
  Node n;
  n.external = &store.value(id);
  n.requires_grad = track_;
  n.param = id;
  Var v = push(std::move(n));
  param_nodes_.emplace(id, v.id);
  return v;
}

const Matrix* Graph::grad_of(Var v) const {
  const Node& n = nodes_[v.id];
  return n.has_grad ? &n.grad : nullptr;
}

Matrix& Graph::grad(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    const Matrix& v = n.get();
    n.grad = Matrix(v.rows(), v.cols());
    n.has_grad = true;
  }
  return n.grad;
}

Var Graph::emit(Matrix value, std::span<const Var> parents, Backward back) {
  Node n;
  n.owned = std::move(value);
  if (track_) {
    for (const Var& p : parents) {
      check(p.graph == this, ErrorKind::Internal, "mixing nodes of different graphs");
      n.requires_grad = n.requires_grad || nodes_[p.id].requires_grad;
    }
    if (n.requires_grad) n.back = std::move(back);
  }
  return push(std::move(n));
}

void Graph::backward(Var out) {
  check(track_, ErrorKind::Internal, "backward on an untracked graph");
  check(value(out).size() == 1, ErrorKind::Internal, "backward needs a scalar output");
  for (Node& n : nodes_) {
    n.grad = Matrix();
    n.has_grad = false;
  }
  grad(out.id)[0] = 1.0;
  for (std::int64_t id = out.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.has_grad && n.back) n.back(*this, static_cast<std::uint32_t>(id));
  }
}

void Graph::accumulate(GradBuffer& buf) const {
  for (const Node& n : nodes_) {
    if (n.param < 0 || !n.has_grad) continue;
    Matrix& dst = buf.at(static_cast<ParamId>(n.param));
    const auto& k = kernels::active();
    k.axpy(1.0, n.grad.data(), dst.data(), dst.size());
  }
}

// ---------------------------------------------------------------------------

namespace ad {
namespace {

const kernels::KernelSet& K() { return kernels::active(); }

void require(bool cond, const char* op, const std::string& detail) {
  if (!cond) fail(ErrorKind::Internal, std::string(op) + ": " + detail);
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

bool wants(Graph& g, Var v) { return g.requires_grad(v); }

template <typename F>
Var unary(Var a, F f, double (*deriv_from_out)(double x, double y)) {
  Graph& g = *a.graph;
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return g.emit(std::move(y), {a}, [a, deriv_from_out](Graph& g, std::uint32_t self) {
    const Matrix& x = g.value(a);
    const Matrix& y = g.value(self);
    const Matrix& gy = g.grad(self);
    Matrix& gx = g.grad(a.id);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += gy[i] * deriv_from_out(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  require(A.cols() == B.rows(), "matmul", shape(A) + " * " + shape(B));
  Matrix c(A.rows(), B.cols());
  matmul_nn_acc(A, B, c);
  return a.graph->emit(std::move(c), {a, b}, [a, b](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    if (wants(g, a)) matmul_nt_acc(gc, g.value(b), g.grad(a.id));  // dA = dC B^T
    if (wants(g, b)) matmul_tn_acc(g.value(a), gc, g.grad(b.id));  // dB = A^T dC
  });
}

Var matmul_nt(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  require(A.cols() == B.cols(), "matmul_nt", shape(A) + " * " + shape(B) + "^T");
  Matrix c(A.rows(), B.rows());
  matmul_nt_acc(A, B, c);
  return a.graph->emit(std::move(c), {a, b}, [a, b](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    if (wants(g, a)) matmul_nn_acc(gc, g.value(b), g.grad(a.id));  // dA = dC B
    if (wants(g, b)) matmul_tn_acc(gc, g.value(a), g.grad(b.id));  // dB = dC^T A
  });
}

Var affine(Var x, Var w) {
  const Matrix& X = x.value();
  const Matrix& W = w.value();
  const std::size_t in = X.cols();
  require(W.cols() == in + 1, "affine", "input " + shape(X) + " weights " + shape(W));
  const std::size_t n = X.rows();
  const std::size_t out = W.rows();
  Matrix y(n, out);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t o = 0; o < out; ++o) y(i, o) = W(o, in);
  K().gemm_nt(X.data(), in, W.data(), in + 1, y.data(), out, n, in, out);
  return x.graph->emit(std::move(y), {x, w}, [x, w](Graph& g, std::uint32_t self) {
    const Matrix& X = g.value(x);
    const Matrix& W = g.value(w);
    const Matrix& gy = g.grad(self);
    const std::size_t in = X.cols(), n = X.rows(), out = W.rows();
    if (wants(g, x)) {
      Matrix& gx = g.grad(x.id);
      K().gemm_nn(gy.data(), out, W.data(), in + 1, gx.data(), in, n, out, in);
    }
    if (wants(g, w)) {
      Matrix& gw = g.grad(w.id);
      K().gemm_tn(gy.data(), out, X.data(), in, gw.data(), in + 1, out, n, in);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < out; ++o) gw(o, in) += gy(i, o);
    }
  });
}

Var add(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  require(A.same_shape(B), "add", shape(A) + " + " + shape(B));
  Matrix c = A;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += B[i];
  return a.graph->emit(std::move(c), {a, b}, [a, b](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    for (Var p : {a, b})
      if (wants(g, p)) K().axpy(1.0, gc.data(), g.grad(p.id).data(), gc.size());
  });
}

Var add_row(Var a, Var row) {
  const Matrix& A = a.value();
  const Matrix& R = row.value();
  require(R.rows() == 1 && R.cols() == A.cols(), "add_row", shape(A) + " + " + shape(R));
  Matrix c = A;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) += R[j];
  return a.graph->emit(std::move(c), {a, row}, [a, row](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    if (wants(g, a)) K().axpy(1.0, gc.data(), g.grad(a.id).data(), gc.size());
    if (wants(g, row)) {
      Matrix& gr = g.grad(row.id);
      for (std::size_t i = 0; i < gc.rows(); ++i) K().axpy(1.0, gc.row(i).data(), gr.data(), gr.size());
    }
  });
}

Var add_n(std::span<const Var> terms) {
  require(!terms.empty(), "add_n", "no terms");
  Matrix c = terms[0].value();
  for (std::size_t t = 1; t < terms.size(); ++t) {
    const Matrix& m = terms[t].value();
    require(m.same_shape(c), "add_n", shape(c) + " + " + shape(m));
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += m[i];
  }
  std::vector<Var> ps(terms.begin(), terms.end());
  return terms[0].graph->emit(std::move(c), terms, [ps](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    for (Var p : ps)
      if (wants(g, p)) K().axpy(1.0, gc.data(), g.grad(p.id).data(), gc.size());
  });
}

Var mul(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  require(A.same_shape(B), "mul", shape(A) + " * " + shape(B));
  Matrix c = A;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= B[i];
  return a.graph->emit(std::move(c), {a, b}, [a, b](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    if (wants(g, a)) {
      Matrix& ga = g.grad(a.id);
      const Matrix& B = g.value(b);
      for (std::size_t i = 0; i < gc.size(); ++i) ga[i] += gc[i] * B[i];
    }
    if (wants(g, b)) {
      Matrix& gb = g.grad(b.id);
      const Matrix& A = g.value(a);
      for (std::size_t i = 0; i < gc.size(); ++i) gb[i] += gc[i] * A[i];
    }
  });
}

Var scale(Var a, double s) {
  Matrix c = a.value();
  for (double& v : c.values()) v *= s;
  return a.graph->emit(std::move(c), {a}, [a, s](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    K().axpy(s, gc.data(), g.grad(a.id).data(), gc.size());
  });
}

Var shift(Var a, double s) {
  Matrix c = a.value();
  for (double& v : c.values()) v += s;
  return a.graph->emit(std::move(c), {a}, [a](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    K().axpy(1.0, gc.data(), g.grad(a.id).data(), gc.size());
  });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var gelu(Var a) {
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); },
      [](double x, double) {
        const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        return cdf + x * pdf;
      });
}

Var softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    auto yr = y.row(r);
    double mx = xr.empty() ? 0.0 : xr[0];
    for (double v : xr) mx = std::max(mx, v);
    double z = 0.0;
    for (std::size_t j = 0; j < xr.size(); ++j) z += (yr[j] = std::exp(xr[j] - mx));
    for (double& v : yr) v /= z;
  }
  return a.graph->emit(std::move(y), {a}, [a](Graph& g, std::uint32_t self) {
    const Matrix& y = g.value(self);
    const Matrix& gy = g.grad(self);
    Matrix& gx = g.grad(a.id);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      auto yr = y.row(r);
      auto gyr = gy.row(r);
      const double dot = K().dot(yr.data(), gyr.data(), yr.size());
      auto gxr = gx.row(r);
      for (std::size_t j = 0; j < yr.size(); ++j) gxr[j] += yr[j] * (gyr[j] - dot);
    }
  });
}

Var log_clamped(Var a, double floor) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::log(std::max(x[i], floor));
  return a.graph->emit(std::move(y), {a}, [a, floor](Graph& g, std::uint32_t self) {
    const Matrix& x = g.value(a);
    const Matrix& gy = g.grad(self);
    Matrix& gx = g.grad(a.id);
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] > floor) gx[i] += gy[i] / x[i];
  });
}

Var layer_norm(Var x, Var gb, double eps) {
  const Matrix& X = x.value();
  const Matrix& GB = gb.value();
  const std::size_t n = X.rows(), d = X.cols();
  require(GB.rows() == 2 && GB.cols() == d, "layer_norm", shape(X) + " with " + shape(GB));
  auto xhat = std::make_shared<Matrix>(n, d);
  auto inv_std = std::make_shared<std::vector<double>>(n);
  Matrix y(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    auto xr = X.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xr[j] - mean) * is;
      (*xhat)(r, j) = h;
      y(r, j) = GB(0, j) * h + GB(1, j);
    }
  }
  return x.graph->emit(std::move(y), {x, gb}, [x, gb, xhat, inv_std](Graph& g, std::uint32_t self) {
    const Matrix& gy = g.grad(self);
    const Matrix& GB = g.value(gb);
    const std::size_t n = gy.rows(), d = gy.cols();
    if (wants(g, gb)) {
      Matrix& ggb = g.grad(gb.id);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < d; ++j) {
          ggb(0, j) += gy(r, j) * (*xhat)(r, j);
          ggb(1, j) += gy(r, j);
        }
    }
    if (wants(g, x)) {
      Matrix& gx = g.grad(x.id);
      std::vector<double> dh(d);
      for (std::size_t r = 0; r < n; ++r) {
        double mean_dh = 0.0, mean_dh_h = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          dh[j] = gy(r, j) * GB(0, j);
          mean_dh += dh[j];
          mean_dh_h += dh[j] * (*xhat)(r, j);
        }
        mean_dh /= static_cast<double>(d);
        mean_dh_h /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j)
          gx(r, j) += (*inv_std)[r] * (dh[j] - mean_dh - (*xhat)(r, j) * mean_dh_h);
      }
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no parts");
  const std::size_t n = parts[0].rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require(p.rows() == n, "concat_cols", "row count mismatch");
    total += p.cols();
  }
  Matrix c(n, total);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Matrix& m = p.value();
    for (std::size_t r = 0; r < n; ++r)
      std::copy(m.row(r).begin(), m.row(r).end(), c.row(r).begin() + static_cast<long>(off));
    off += m.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return parts[0].graph->emit(std::move(c), parts, [ps](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    std::size_t off = 0;
    for (Var p : ps) {
      const std::size_t w = g.value(p).cols();
      if (wants(g, p)) {
        Matrix& gp = g.grad(p.id);
        for (std::size_t r = 0; r < gc.rows(); ++r)
          K().axpy(1.0, gc.row(r).data() + off, gp.row(r).data(), w);
      }
      off += w;
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows", "no parts");
  const std::size_t d = parts[0].cols();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require(p.cols() == d, "concat_rows", "column count mismatch");
    total += p.rows();
  }
  Matrix c(total, d);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Matrix& m = p.value();
    std::copy(m.values().begin(), m.values().end(), c.data() + off * d);
    off += m.rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return parts[0].graph->emit(std::move(c), parts, [ps](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    std::size_t off = 0;
    for (Var p : ps) {
      const Matrix& v = g.value(p);
      if (wants(g, p)) K().axpy(1.0, gc.data() + off * gc.cols(), g.grad(p.id).data(), v.size());
      off += v.rows();
    }
  });
}

Var slice_rows(Var a, std::size_t start, std::size_t count) {
  const Matrix& A = a.value();
  require(start + count <= A.rows(), "slice_rows", "range past " + shape(A));
  const std::size_t d = A.cols();
  Matrix c(count, d, std::vector<double>(A.data() + start * d, A.data() + (start + count) * d));
  return a.graph->emit(std::move(c), {a}, [a, start](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    Matrix& ga = g.grad(a.id);
    K().axpy(1.0, gc.data(), ga.data() + start * ga.cols(), gc.size());
  });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  const Matrix& A = a.value();
  require(start + count <= A.cols(), "slice_cols", "range past " + shape(A));
  Matrix c(A.rows(), count);
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t j = 0; j < count; ++j) c(r, j) = A(r, start + j);
  return a.graph->emit(std::move(c), {a}, [a, start](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    Matrix& ga = g.grad(a.id);
    for (std::size_t r = 0; r < gc.rows(); ++r)
      K().axpy(1.0, gc.row(r).data(), ga.row(r).data() + start, gc.cols());
  });
}

Var transpose(Var a) {
  return a.graph->emit(sqlova::transpose(a.value()), {a}, [a](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    Matrix& ga = g.grad(a.id);
    for (std::size_t r = 0; r < gc.rows(); ++r)
      for (std::size_t c = 0; c < gc.cols(); ++c) ga(c, r) += gc(r, c);
  });
}

Var repeat_rows(Var row, std::size_t n) {
  const Matrix& R = row.value();
  require(R.rows() == 1, "repeat_rows", "expects a row vector, got " + shape(R));
  Matrix c(n, R.cols());
  for (std::size_t r = 0; r < n; ++r) std::copy(R.values().begin(), R.values().end(), c.row(r).begin());
  return row.graph->emit(std::move(c), {row}, [row](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    Matrix& gr = g.grad(row.id);
    for (std::size_t r = 0; r < gc.rows(); ++r) K().axpy(1.0, gc.row(r).data(), gr.data(), gr.size());
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  const Matrix& T = table.value();
  Matrix c(ids.size(), T.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= T.rows())
      fail(ErrorKind::Bounds, "row id " + std::to_string(ids[i]) + " outside table of " +
                                  std::to_string(T.rows()) + " rows");
    auto src = T.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), c.row(i).begin());
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return table.graph->emit(std::move(c), {table}, [table, idx](Graph& g, std::uint32_t self) {
    const Matrix& gc = g.grad(self);
    Matrix& gt = g.grad(table.id);
    for (std::size_t i = 0; i < idx.size(); ++i)
      K().axpy(1.0, gc.row(i).data(), gt.row(static_cast<std::size_t>(idx[i])).data(), gc.cols());
  });
}

Var pick(Var a, std::size_t r, std::size_t c) {
  const Matrix& A = a.value();
  require(r < A.rows() && c < A.cols(), "pick", "index outside " + shape(A));
  Matrix v(1, 1, A(r, c));
  return a.graph->emit(std::move(v), {a}, [a, r, c](Graph& g, std::uint32_t self) {
    g.grad(a.id)(r, c) += g.grad(self)[0];
  });
}

namespace {

double sigm(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct LstmTape {
  std::size_t len = 0, hidden = 0;
  bool reverse = false;
  Matrix gates;  // [L x 4H] post-activation i, f, g, o
  Matrix cell;   // [L x H]
  Matrix tanh_cell;
};

}  // namespace

Var lstm_sequence(Var xproj, Var w_h, Var h0, Var c0, bool reverse) {
  const Matrix& X = xproj.value();
  const Matrix& W = w_h.value();
  const std::size_t L = X.rows();
  const std::size_t H = W.cols();
  require(X.cols() == 4 * H && W.rows() == 4 * H, "lstm_sequence",
          "projections " + shape(X) + " recurrent " + shape(W));
  require(h0.rows() == 1 && h0.cols() == H && c0.rows() == 1 && c0.cols() == H,
          "lstm_sequence", "initial state shape");

  auto tape = std::make_shared<LstmTape>();
  tape->len = L;
  tape->hidden = H;
  tape->reverse = reverse;
  tape->gates = Matrix(L, 4 * H);
  tape->cell = Matrix(L, H);
  tape->tanh_cell = Matrix(L, H);
  Matrix out(L, H);

  std::vector<double> pre(4 * H);
  const double* h_prev = h0.value().data();
  const double* c_prev = c0.value().data();
  for (std::size_t s = 0; s < L; ++s) {
    const std::size_t t = reverse ? L - 1 - s : s;
    std::copy(X.row(t).begin(), X.row(t).end(), pre.begin());
    K().gemm_nt(h_prev, H, W.data(), H, pre.data(), 4 * H, 1, H, 4 * H);
    auto gt = tape->gates.row(t);
    for (std::size_t j = 0; j < H; ++j) {
      gt[j] = sigm(pre[j]);
      gt[H + j] = sigm(pre[H + j]);
      gt[2 * H + j] = std::tanh(pre[2 * H + j]);
      gt[3 * H + j] = sigm(pre[3 * H + j]);
      const double c = gt[H + j] * c_prev[j] + gt[j] * gt[2 * H + j];
      tape->cell(t, j) = c;
      tape->tanh_cell(t, j) = std::tanh(c);
      out(t, j) = gt[3 * H + j] * tape->tanh_cell(t, j);
    }
    h_prev = out.row(t).data();
    c_prev = tape->cell.row(t).data();
  }

  return xproj.graph->emit(
      std::move(out), {xproj, w_h, h0, c0},
      [xproj, w_h, h0, c0, tape](Graph& g, std::uint32_t self) {
        const std::size_t L = tape->len, H = tape->hidden;
        const Matrix& out = g.value(self);
        const Matrix& gout = g.grad(self);
        const Matrix& W = g.value(w_h);
        const bool want_x = wants(g, xproj), want_w = wants(g, w_h);
        Matrix* gw = want_w ? &g.grad(w_h.id) : nullptr;
        Matrix* gx = want_x ? &g.grad(xproj.id) : nullptr;

        std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dgates(4 * H);
        for (std::size_t s = L; s-- > 0;) {
          const std::size_t t = tape->reverse ? L - 1 - s : s;
          const bool first = (s == 0);
          const std::size_t tp = tape->reverse ? t + 1 : t - 1;  // previous step
          const double* h_prev = first ? g.value(h0).data() : out.row(tp).data();
          const double* c_prev = first ? g.value(c0).data() : tape->cell.row(tp).data();
          auto gt = tape->gates.row(t);
          for (std::size_t j = 0; j < H; ++j) {
            const double i = gt[j], f = gt[H + j], gg = gt[2 * H + j], o = gt[3 * H + j];
            const double tc = tape->tanh_cell(t, j);
            const double dh = gout(t, j) + dh_next[j];
            const double dc = dh * o * (1.0 - tc * tc) + dc_next[j];
            dgates[j] = dc * gg * i * (1.0 - i);
            dgates[H + j] = dc * c_prev[j] * f * (1.0 - f);
            dgates[2 * H + j] = dc * i * (1.0 - gg * gg);
            dgates[3 * H + j] = dh * tc * o * (1.0 - o);
            dc_next[j] = dc * f;
          }
          if (gx) K().axpy(1.0, dgates.data(), gx->row(t).data(), 4 * H);
          if (gw)
            for (std::size_t r = 0; r < 4 * H; ++r)
              K().axpy(dgates[r], h_prev, gw->row(r).data(), H);
          std::fill(dh_next.begin(), dh_next.end(), 0.0);
          K().gemm_nn(dgates.data(), 4 * H, W.data(), H, dh_next.data(), H, 1, 4 * H, H);
        }
        if (wants(g, h0)) K().axpy(1.0, dh_next.data(), g.grad(h0.id).data(), H);
        if (wants(g, c0)) K().axpy(1.0, dc_next.data(), g.grad(c0.id).data(), H);
      });
}

}  // namespace ad
}  // namespace sqlova
