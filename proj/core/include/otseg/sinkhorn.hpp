#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "otseg/matrix.hpp"

namespace otseg {

// Entropic transport between M clusters (rows) and N points (columns).
// `similarity` holds probabilities in (0,1); the kernel is similarity^lambda.
// Target marginals are uniform: every row must receive 1/M of the mass and
// every column 1/N.
struct TransportProblem {
  Matrix similarity;       // M x N
  double lambda = 25.0;    // sharpness; higher means closer to hard argmax
  std::size_t max_iters = 100;
  double tolerance = 1e-8;  // max column-marginal violation
};

struct AssignmentMatrix {
  Matrix plan;                      // M x N, nonnegative
  std::vector<double> row_scaling;  // u, length M
  std::vector<double> col_scaling;  // v, length N
  std::size_t iters_used = 0;
  bool converged = false;
};

// Sinkhorn scaling on the M x N kernel. Throws std::invalid_argument on bad
// inputs and SolverError when the kernel degenerates (a row or column of
// similarity^lambda underflows to zero, naming the offending index).
AssignmentMatrix sinkhorn_solve(const TransportProblem& problem);

// Column-wise argmax of the plan; ties resolve to the lowest row index.
std::vector<int> harden(const AssignmentMatrix& assignment);

// Max absolute violation of (row, column) marginals against 1/M and 1/N.
std::pair<double, double> marginal_residuals(const AssignmentMatrix& assignment);

}  // namespace otseg
