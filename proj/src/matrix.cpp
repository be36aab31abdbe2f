#include "sqlova/matrix.hpp"

#include <algorithm>
#include <string>

#include "sqlova/error.hpp"
#include "sqlova/kernels.hpp"

namespace sqlova {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  check(data_.size() == rows_ * cols_, ErrorKind::Internal,
        "matrix data size does not match shape");
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    check(row.size() == c, ErrorKind::Internal, "ragged matrix literal");
    for (double v : row) m.data_[i++] = v;
  }
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

namespace {
[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b,
                              const Matrix& out) {
  fail(ErrorKind::Internal,
       std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
           std::to_string(a.cols()) + ", " + std::to_string(b.rows()) + "x" +
           std::to_string(b.cols()) + " -> " + std::to_string(out.rows()) + "x" +
           std::to_string(out.cols()));
}
}  // namespace

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows())
    shape_error("matmul_nt", a, b, out);
  kernels::active().gemm_nt(a.data(), a.cols(), b.data(), b.cols(), out.data(), out.cols(),
                            a.rows(), a.cols(), b.rows());
}

void matmul_nn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows() || out.rows() != a.rows() || out.cols() != b.cols())
    shape_error("matmul_nn", a, b, out);
  kernels::active().gemm_nn(a.data(), a.cols(), b.data(), b.cols(), out.data(), out.cols(),
                            a.rows(), a.cols(), b.cols());
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols())
    shape_error("matmul_tn", a, b, out);
  kernels::active().gemm_tn(a.data(), a.cols(), b.data(), b.cols(), out.data(), out.cols(),
                            a.cols(), a.rows(), b.cols());
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

}  // namespace sqlova
