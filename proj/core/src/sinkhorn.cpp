#include "otseg/sinkhorn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "otseg/errors.hpp"

namespace otseg {

namespace {

constexpr double kKernelFloor = 1e-300;

void validate(const TransportProblem& p) {
  const auto& s = p.similarity;
  if (s.rows() == 0 || s.cols() == 0)
    throw std::invalid_argument("sinkhorn: empty similarity matrix");
  if (!(p.lambda > 0.0) || !std::isfinite(p.lambda))
    throw std::invalid_argument("sinkhorn: lambda must be positive, got " +
                                std::to_string(p.lambda));
  if (p.max_iters == 0)
    throw std::invalid_argument("sinkhorn: max_iters must be at least 1");
  if (!(p.tolerance > 0.0))
    throw std::invalid_argument("sinkhorn: tolerance must be positive");
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = s.data()[i];
    if (!std::isfinite(x) || x <= 0.0 || x >= 1.0)
      throw std::invalid_argument(
          "sinkhorn: similarity entries must lie in the open interval (0,1); "
          "entry " + std::to_string(i) + " is " + std::to_string(x));
  }
}

}  // namespace

AssignmentMatrix sinkhorn_solve(const TransportProblem& problem) {
  validate(problem);
  const std::size_t M = problem.similarity.rows();
  const std::size_t N = problem.similarity.cols();
  const double row_target = 1.0 / static_cast<double>(M);
  const double col_target = 1.0 / static_cast<double>(N);

  Matrix kernel(M, N);
  std::vector<double> col_max(N, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    double row_max = 0.0;
    const double* in = problem.similarity.data() + m * N;
    double* out = kernel.data() + m * N;
    for (std::size_t n = 0; n < N; ++n) {
      out[n] = std::pow(in[n], problem.lambda);
      row_max = std::max(row_max, out[n]);
      col_max[n] = std::max(col_max[n], out[n]);
    }
    if (row_max < kKernelFloor)
      throw SolverError("sinkhorn: kernel row " + std::to_string(m) +
                        " underflowed to zero (lambda too large for the given "
                        "similarities)");
  }
  for (std::size_t n = 0; n < N; ++n)
    if (col_max[n] < kKernelFloor)
      throw SolverError("sinkhorn: kernel column " + std::to_string(n) +
                        " underflowed to zero (lambda too large for the given "
                        "similarities)");

  AssignmentMatrix result;
  result.row_scaling.assign(M, 1.0);
  result.col_scaling.assign(N, 1.0);
  auto& u = result.row_scaling;
  auto& v = result.col_scaling;
  std::vector<double> col_mass(N);

  for (std::size_t iter = 1; iter <= problem.max_iters; ++iter) {
    // u <- row_target ./ (K v)
    for (std::size_t m = 0; m < M; ++m) {
      const double* k = kernel.data() + m * N;
      double acc = 0.0;
      for (std::size_t n = 0; n < N; ++n) acc += k[n] * v[n];
      u[m] = row_target / acc;
    }
    // column masses z = K^T u; converged when z .* v already meets the target
    for (std::size_t n = 0; n < N; ++n) col_mass[n] = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      const double* k = kernel.data() + m * N;
      const double um = u[m];
      for (std::size_t n = 0; n < N; ++n) col_mass[n] += k[n] * um;
    }
    double worst = 0.0;
    for (std::size_t n = 0; n < N; ++n)
      worst = std::max(worst, std::abs(col_mass[n] * v[n] - col_target));
    result.iters_used = iter;
    if (worst <= problem.tolerance) {
      result.converged = true;
      break;
    }
    for (std::size_t n = 0; n < N; ++n) v[n] = col_target / col_mass[n];
  }

  result.plan = Matrix(M, N);
  for (std::size_t m = 0; m < M; ++m) {
    const double* k = kernel.data() + m * N;
    double* a = result.plan.data() + m * N;
    const double um = u[m];
    for (std::size_t n = 0; n < N; ++n) a[n] = um * k[n] * v[n];
  }
  if (!result.plan.all_finite())
    throw SolverError("sinkhorn: scaling overflowed; the kernel is too "
                      "ill-conditioned for fixed-precision iteration");
  return result;
}

std::vector<int> harden(const AssignmentMatrix& assignment) {
  const auto& a = assignment.plan;
  std::vector<int> labels(a.cols());
  for (std::size_t n = 0; n < a.cols(); ++n) {
    std::size_t best = 0;
    double best_mass = a(0, n);
    for (std::size_t m = 1; m < a.rows(); ++m) {
      if (a(m, n) > best_mass) {
        best_mass = a(m, n);
        best = m;
      }
    }
    labels[n] = static_cast<int>(best);
  }
  return labels;
}

std::pair<double, double> marginal_residuals(const AssignmentMatrix& assignment) {
  const auto& a = assignment.plan;
  const double row_target = 1.0 / static_cast<double>(a.rows());
  const double col_target = 1.0 / static_cast<double>(a.cols());
  double row_worst = 0.0;
  std::vector<double> col_sum(a.cols(), 0.0);
  for (std::size_t m = 0; m < a.rows(); ++m) {
    double s = 0.0;
    const double* row = a.data() + m * a.cols();
    for (std::size_t n = 0; n < a.cols(); ++n) {
      s += row[n];
      col_sum[n] += row[n];
    }
    row_worst = std::max(row_worst, std::abs(s - row_target));
  }
  double col_worst = 0.0;
  for (double s : col_sum) col_worst = std::max(col_worst, std::abs(s - col_target));
  return {row_worst, col_worst};
}

}  // namespace otseg
