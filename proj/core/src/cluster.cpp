#include "otseg/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "otseg/binio.hpp"
#include "otseg/errors.hpp"
#include "otseg/numerics.hpp"
#include "otseg/rng.hpp"

namespace otseg {

namespace {
constexpr char kMagic[5] = "CBNK";
constexpr std::uint32_t kVersion = 1;
}  // namespace

CenterBank init_centers(std::size_t class_count, std::size_t clusters_per_class,
                        std::size_t dim, std::uint64_t seed) {
  if (class_count == 0 || clusters_per_class == 0 || dim == 0)
    throw std::invalid_argument("init_centers: all dimensions must be positive");
  CenterBank bank;
  bank.class_count = class_count;
  bank.clusters_per_class = clusters_per_class;
  bank.dim = dim;
  bank.centers = Matrix(class_count * clusters_per_class, dim);
  Rng rng(seed);
  for (std::size_t r = 0; r < bank.centers.rows(); ++r) {
    auto row = bank.centers.row(r);
    double sq = 0.0;
    do {
      sq = 0.0;
      for (auto& x : row) {
        x = rng.normal();
        sq += x * x;
      }
    } while (sq == 0.0);
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : row) x *= inv;
  }
  return bank;
}

ClusterOutcome assign_subclass_labels(const Matrix& embeddings,
                                      const std::vector<int>& class_labels,
                                      const CenterBank& bank,
                                      const AssignSettings& settings) {
  if (class_labels.size() != embeddings.rows())
    throw std::invalid_argument("assign_subclass_labels: label count " +
                                std::to_string(class_labels.size()) +
                                " != point count " +
                                std::to_string(embeddings.rows()));
  if (embeddings.cols() != bank.dim)
    throw std::invalid_argument("assign_subclass_labels: embedding dim " +
                                std::to_string(embeddings.cols()) +
                                " != center dim " + std::to_string(bank.dim));

  const std::size_t M = bank.clusters_per_class;
  ClusterOutcome out;
  out.subclass_labels.assign(embeddings.rows(), -1);
  out.batch_means = Matrix(bank.subclass_count(), bank.dim);
  out.occupied.assign(bank.subclass_count(), false);

  std::vector<std::vector<std::size_t>> members(bank.class_count);
  for (std::size_t i = 0; i < class_labels.size(); ++i) {
    const int c = class_labels[i];
    if (c < 0 || static_cast<std::size_t>(c) >= bank.class_count)
      throw std::invalid_argument("assign_subclass_labels: class label " +
                                  std::to_string(c) + " out of range at point " +
                                  std::to_string(i));
    members[c].push_back(i);
  }

  for (std::size_t c = 0; c < bank.class_count; ++c) {
    const auto& idx = members[c];
    if (idx.empty()) continue;

    Matrix emb(idx.size(), bank.dim);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto src = embeddings.row(idx[k]);
      std::copy(src.begin(), src.end(), emb.row(k).begin());
    }

    std::vector<int> local(idx.size(), 0);
    if (M == 1) {
      // One cluster per class: balance is forced, no transport to solve.
    } else {
      Matrix centers(M, bank.dim);
      for (std::size_t m = 0; m < M; ++m) {
        const auto src = bank.center(c * M + m);
        std::copy(src.begin(), src.end(), centers.row(m).begin());
      }
      TransportProblem problem;
      problem.similarity = transpose(row_softmax(matmul_nt(emb, centers)));
      problem.lambda = settings.lambda;
      problem.max_iters = settings.max_iters;
      problem.tolerance = settings.tolerance;
      AssignmentMatrix assignment;
      try {
        assignment = sinkhorn_solve(problem);
      } catch (const SolverError& e) {
        throw SolverError("class " + std::to_string(c) + ": " + e.what());
      }
      local = harden(assignment);
    }

    for (std::size_t k = 0; k < idx.size(); ++k)
      out.subclass_labels[idx[k]] = static_cast<int>(c * M) + local[k];

    const auto means = scatter_mean(emb, local, M);
    for (std::size_t m = 0; m < M; ++m) {
      if (means.empty_group[m]) continue;
      out.occupied[c * M + m] = true;
      const auto src = means.means.row(m);
      std::copy(src.begin(), src.end(), out.batch_means.row(c * M + m).begin());
    }
  }
  return out;
}

void momentum_update(CenterBank& bank, const ClusterOutcome& outcome, double mu) {
  if (!(mu >= 0.0 && mu <= 1.0))
    throw std::invalid_argument("momentum_update: mu must lie in [0,1], got " +
                                std::to_string(mu));
  if (outcome.occupied.size() != bank.subclass_count() ||
      outcome.batch_means.rows() != bank.subclass_count() ||
      outcome.batch_means.cols() != bank.dim)
    throw std::invalid_argument("momentum_update: outcome shape does not match bank");

  for (std::size_t g = 0; g < bank.subclass_count(); ++g) {
    if (!outcome.occupied[g]) continue;
    auto center = bank.centers.row(g);
    const auto mean = outcome.batch_means.row(g);
    double sq = 0.0;
    for (std::size_t d = 0; d < bank.dim; ++d) {
      center[d] = mu * center[d] + (1.0 - mu) * mean[d];
      sq += center[d] * center[d];
    }
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : center) x *= inv;
  }
}

void save_center_bank(const CenterBank& bank, const std::string& path,
                      std::uint64_t seed, std::uint64_t step_count) {
  auto os = binio::open_out(path);
  binio::put_magic(os, kMagic);
  binio::put_u32(os, kVersion);
  binio::put_u32(os, static_cast<std::uint32_t>(bank.class_count));
  binio::put_u32(os, static_cast<std::uint32_t>(bank.clusters_per_class));
  binio::put_u32(os, static_cast<std::uint32_t>(bank.dim));
  for (std::size_t i = 0; i < bank.centers.size(); ++i)
    binio::put_f64(os, bank.centers.data()[i]);
  if (!os) throw IoError("failed writing " + path);
  os.close();

  nlohmann::ordered_json side;
  side["seed"] = seed;
  side["steps"] = step_count;
  std::ofstream js(path + ".json", std::ios::trunc);
  if (!js) throw IoError("cannot open " + path + ".json for writing");
  js << side.dump(2) << "\n";
}

CenterBankFile load_center_bank(const std::string& path) {
  auto is = binio::open_in(path);
  binio::expect_magic(is, kMagic, path);
  const auto version = binio::get_u32(is, "version");
  if (version != kVersion)
    throw IoError(path + ": unsupported center bank version " +
                  std::to_string(version));
  CenterBankFile out;
  out.bank.class_count = binio::get_u32(is, "class count");
  out.bank.clusters_per_class = binio::get_u32(is, "clusters per class");
  out.bank.dim = binio::get_u32(is, "dim");
  if (out.bank.class_count == 0 || out.bank.clusters_per_class == 0 ||
      out.bank.dim == 0)
    throw IoError(path + ": zero dimension in header");
  out.bank.centers = Matrix(out.bank.subclass_count(), out.bank.dim);
  for (std::size_t i = 0; i < out.bank.centers.size(); ++i)
    out.bank.centers.data()[i] = binio::get_f64(is, "center payload");

  std::ifstream js(path + ".json");
  if (!js) throw IoError("missing sidecar " + path + ".json");
  nlohmann::json side;
  try {
    js >> side;
    out.seed = side.at("seed").get<std::uint64_t>();
    out.step_count = side.at("steps").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ".json: " + e.what());
  }
  return out;
}

}  // namespace otseg
