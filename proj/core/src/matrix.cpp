#include "otseg/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace otseg {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m;
  m.rows_ = rows.size();
  m.cols_ = rows.size() ? rows.begin()->size() : 0;
  m.data_.reserve(m.rows_ * m.cols_);
  for (const auto& r : rows) {
    if (r.size() != m.cols_) throw std::invalid_argument("ragged initializer");
    m.data_.insert(m.data_.end(), r.begin(), r.end());
  }
  return m;
}

bool Matrix::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dimensions differ");
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* oi = out.data() + i * m;
    const double* ai = a.data() + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = ai[kk];
      const double* bk = b.data() + kk * m;
      for (std::size_t j = 0; j < m; ++j) oi[j] += aik * bk[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("matmul_nt: inner dimensions differ");
  const std::size_t n = a.rows(), m = b.rows(), d = a.cols();
  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data() + i * d;
    double* oi = out.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.data() + j * d;
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += ai[k] * bj[k];
      oi[j] = acc;
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw std::invalid_argument("matmul_tn: inner dimensions differ");
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  Matrix out(n, m);
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double* ak = a.data() + kk * n;
    const double* bk = b.data() + kk * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double aki = ak[i];
      double* oi = out.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) oi[j] += aki * bk[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  return out;
}

}  // namespace otseg
