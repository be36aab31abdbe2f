#include "sqlova/head.hpp"

#include "sqlova/error.hpp"

namespace sqlova {

ModelOutput to_model_output(const HeadOutput& head) {
  ModelOutput out;
  const Matrix& sc = head.p_sc.value();
  const std::size_t n = sc.cols();
  out.p_sc.assign(sc.data(), sc.data() + n);
  out.p_sa = head.p_sa.value();
  const Matrix& wn = head.p_wn.value();
  out.p_wn.assign(wn.data(), wn.data() + wn.cols());
  const Matrix& wc = head.p_wc.value();
  out.p_wc.assign(wc.data(), wc.data() + wc.cols());
  out.p_wo = head.p_wo.value();

  const auto first = head.wv.find(0);
  check(first != head.wv.end(), ErrorKind::Internal, "where-value output missing");
  const std::size_t len = first->second.first.cols();
  out.p_wv_start = Matrix(n * kNumCondOps, len);
  out.p_wv_end = Matrix(n * kNumCondOps, len);
  for (std::size_t slot = 0; slot < n * kNumCondOps; ++slot) {
    const auto it = head.wv.find(slot);
    check(it != head.wv.end(), ErrorKind::Internal, "where-value output missing");
    const Matrix& s = it->second.first.value();
    const Matrix& e = it->second.second.value();
    std::copy(s.data(), s.data() + len, out.p_wv_start.row(slot).begin());
    std::copy(e.data(), e.data() + len, out.p_wv_end.row(slot).begin());
  }
  return out;
}

}  // namespace sqlova
