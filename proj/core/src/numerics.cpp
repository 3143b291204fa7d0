#include "otseg/numerics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace otseg {

NormalizeResult l2_normalize_rows(const Matrix& m) {
  NormalizeResult out;
  out.values = m;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sq = 0.0;
    for (double x : m.row(r)) sq += x * x;
    if (sq == 0.0) {
      ++out.zero_rows;
      continue;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : out.values.row(r)) x *= inv;
  }
  return out;
}

Matrix row_softmax(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto in = m.row(r);
    double mx = in[0];
    for (double x : in) mx = std::max(mx, x);
    double sum = 0.0;
    auto o = out.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      o[c] = std::exp(in[c] - mx);
      sum += o[c];
    }
    const double inv = 1.0 / sum;
    for (double& x : o) x *= inv;
  }
  return out;
}

Matrix stable_log_softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto in = m.row(r);
    double mx = in[0];
    for (double x : in) mx = std::max(mx, x);
    double sum = 0.0;
    for (double x : in) sum += std::exp(x - mx);
    const double lse = mx + std::log(sum);
    auto o = out.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) o[c] = in[c] - lse;
  }
  return out;
}

ScatterMeanResult scatter_mean(const Matrix& values,
                               const std::vector<int>& index,
                               std::size_t group_count) {
  if (index.size() != values.rows())
    throw std::invalid_argument("scatter_mean: index length " +
                                std::to_string(index.size()) +
                                " != row count " + std::to_string(values.rows()));
  ScatterMeanResult out;
  out.means = Matrix(group_count, values.cols());
  out.empty_group.assign(group_count, true);
  std::vector<std::size_t> counts(group_count, 0);
  for (std::size_t r = 0; r < values.rows(); ++r) {
    const int g = index[r];
    if (g < 0 || static_cast<std::size_t>(g) >= group_count)
      throw std::invalid_argument("scatter_mean: index " + std::to_string(g) +
                                  " out of range at row " + std::to_string(r));
    ++counts[g];
    out.empty_group[g] = false;
    auto acc = out.means.row(g);
    const auto in = values.row(r);
    for (std::size_t c = 0; c < values.cols(); ++c) acc[c] += in[c];
  }
  for (std::size_t g = 0; g < group_count; ++g) {
    if (counts[g] == 0) continue;
    const double inv = 1.0 / static_cast<double>(counts[g]);
    for (double& x : out.means.row(g)) x *= inv;
  }
  return out;
}

}  // namespace otseg
