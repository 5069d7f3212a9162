#include "hybridopt/subsolver.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace hybridopt {

namespace {

void check_block_size(int k) {
  if (k < 1) throw std::invalid_argument("block subproblem: empty block");
  if (k > kMaxBlockSize) {
    throw std::invalid_argument(
        "block subproblem: k = " + std::to_string(k) + " exceeds the 2^k cap (" +
        std::to_string(kMaxBlockSize) + "); lower the working-set size");
  }
}

// In-place Cholesky solve of M w = rhs for small symmetric M. Returns false
// if M is not positive definite. Both arguments are scratch.
bool small_chol_solve(MatrixXd& M, VectorXd& rhs) {
  const int m = static_cast<int>(M.rows());
  for (int j = 0; j < m; ++j) {
    double d = M(j, j);
    for (int t = 0; t < j; ++t) d -= M(j, t) * M(j, t);
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    M(j, j) = d;
    for (int i = j + 1; i < m; ++i) {
      double v = M(i, j);
      for (int t = 0; t < j; ++t) v -= M(i, t) * M(j, t);
      M(i, j) = v / d;
    }
  }
  for (int i = 0; i < m; ++i) {
    double v = rhs[i];
    for (int t = 0; t < i; ++t) v -= M(i, t) * rhs[t];
    rhs[i] = v / M(i, i);
  }
  for (int i = m - 1; i >= 0; --i) {
    double v = rhs[i];
    for (int t = i + 1; t < m; ++t) v -= M(t, i) * rhs[t];
    rhs[i] = v / M(i, i);
  }
  return true;
}

double block_penalty_value(const Penalty& penalty, const VectorXd& v) {
  switch (penalty.kind()) {
    case PenaltyKind::SparseL0: {
      if (penalty.rho() != kInf &&
          v.size() > 0 && v.cwiseAbs().maxCoeff() > penalty.rho()) {
        return kInf;
      }
      int nnz = 0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] != 0.0) ++nnz;
      }
      return penalty.lambda() * nnz;
    }
    default:
      return 0.0;
  }
}

double full_value(const ReducedQuadratic& red, double theta,
                  const Penalty& penalty, const VectorXd& v) {
  return 0.5 * v.dot(red.H * v) + v.dot(red.r) + block_penalty_value(penalty, v) +
         0.5 * theta * (v - red.xB).squaredNorm();
}

}  // namespace

double keep_value(const ReducedQuadratic& red, const Penalty& penalty) {
  return 0.5 * red.xB.dot(red.H * red.xB) + red.xB.dot(red.r) +
         block_penalty_value(penalty, red.xB);
}

SubproblemResult solve_block_binary(const ReducedQuadratic& red, double theta) {
  const int k = red.k();
  check_block_size(k);
  if (theta < 0.0) throw std::invalid_argument("theta must be nonnegative");

  // For v in {-1,1}^k both v'v and the theta*||v||^2 share are constant, so
  // the walk only needs the H part and the linear term r - theta*xB.
  const VectorXd rtil = red.r - theta * red.xB;
  const double cst = 0.5 * theta * (static_cast<double>(k) + red.xB.squaredNorm());

  VectorXd v = VectorXd::Ones(k);  // pattern 0 = all +1
  VectorXd q = red.H * v + rtil;
  double val = 0.5 * v.dot(red.H * v) + v.dot(rtil) + cst;

  double best_val = val;
  std::uint32_t best_pat = 0;
  std::uint32_t pat = 0;
  const std::uint64_t total = std::uint64_t{1} << k;
  for (std::uint64_t t = 1; t < total; ++t) {
    const int j = std::countr_zero(t);  // Gray code: flip lowest set bit of t
    const double delta = -2.0 * v[j];
    val += delta * q[j] + 2.0 * red.H(j, j);
    q.noalias() += delta * red.H.col(j);
    v[j] = -v[j];
    pat ^= std::uint32_t{1} << j;
    if (val < best_val || (val == best_val && pat < best_pat)) {
      best_val = val;
      best_pat = pat;
    }
  }

  SubproblemResult out;
  out.pattern = best_pat;
  out.candidates_evaluated = static_cast<std::int64_t>(total);
  out.v.resize(k);
  for (int j = 0; j < k; ++j) out.v[j] = (best_pat >> j) & 1u ? -1.0 : 1.0;
  // Recompute from scratch: kills the accumulated drift of the walk.
  out.value = full_value(red, theta, Penalty::binary(), out.v);
  return out;
}

VectorXd box_qp_min(const MatrixXd& M, const VectorXd& q, double rho) {
  const int m = static_cast<int>(M.rows());
  const double tol = 1e-10 * std::max(1.0, q.cwiseAbs().maxCoeff());

  // Start from the clipped unconstrained minimizer when M is invertible.
  VectorXd w;
  {
    MatrixXd Mc = M;
    VectorXd rhs = -q;
    if (small_chol_solve(Mc, rhs)) {
      w = rhs.cwiseMax(-rho).cwiseMin(rho);
    } else {
      w = VectorXd::Zero(m);
    }
  }

  auto phi = [&](const VectorXd& u) { return 0.5 * u.dot(M * u) + q.dot(u); };

  for (int iter = 0; iter < 200; ++iter) {
    const VectorXd g = M * w + q;

    // Projected gradient: zero where the bound blocks the descent direction.
    double pg_norm = 0.0;
    std::vector<int> free_set;
    free_set.reserve(m);
    for (int i = 0; i < m; ++i) {
      const bool at_lo = w[i] <= -rho + 1e-14 && g[i] > 0.0;
      const bool at_hi = w[i] >= rho - 1e-14 && g[i] < 0.0;
      if (!at_lo && !at_hi) {
        free_set.push_back(i);
        pg_norm = std::max(pg_norm, std::abs(g[i]));
      }
    }
    if (pg_norm <= tol || free_set.empty()) break;

    const int f = static_cast<int>(free_set.size());
    MatrixXd Mf(f, f);
    VectorXd gf(f);
    for (int cj = 0; cj < f; ++cj) {
      gf[cj] = -g[free_set[cj]];
      for (int ri = 0; ri < f; ++ri) Mf(ri, cj) = M(free_set[ri], free_set[cj]);
    }
    if (!small_chol_solve(Mf, gf)) {
      throw std::runtime_error("box QP: restricted system not positive definite");
    }
    VectorXd d = VectorXd::Zero(m);
    for (int cj = 0; cj < f; ++cj) d[free_set[cj]] = gf[cj];

    // Projected backtracking line search (Armijo on the projected point).
    const double phi0 = phi(w);
    double alpha = 1.0;
    VectorXd w_new;
    for (int ls = 0; ls < 60; ++ls) {
      w_new = (w + alpha * d).cwiseMax(-rho).cwiseMin(rho);
      const double decrease = g.dot(w_new - w);
      if (phi(w_new) <= phi0 + 1e-4 * decrease && decrease < 0.0) break;
      if ((w_new - w).cwiseAbs().maxCoeff() == 0.0) break;
      alpha *= 0.5;
    }
    if ((w_new - w).cwiseAbs().maxCoeff() == 0.0) break;
    w = w_new;
  }
  return w;
}

namespace {

// Shared support-enumeration engine for SparseL0 (lambda > 0, optional box)
// and SparseCardinality (lambda = 0, popcount limited by max_support).
SubproblemResult enumerate_supports(const ReducedQuadratic& red, double theta,
                                    double lambda, double rho, int max_support,
                                    const Penalty& value_penalty) {
  const int k = red.k();
  check_block_size(k);
  if (theta < 0.0) throw std::invalid_argument("theta must be nonnegative");

  const std::uint64_t total = std::uint64_t{1} << k;
  double best_val = kInf;
  std::uint32_t best_pat = 0;
  VectorXd best_v = VectorXd::Zero(k);
  std::int64_t evaluated = 0;

  std::vector<int> supp;
  supp.reserve(k);

  for (std::uint64_t mask = 0; mask < total; ++mask) {
    const int ssize = std::popcount(mask);
    if (ssize > max_support) continue;
    ++evaluated;

    VectorXd v = VectorXd::Zero(k);
    if (ssize > 0) {
      supp.clear();
      for (int j = 0; j < k; ++j) {
        if ((mask >> j) & 1u) supp.push_back(j);
      }
      MatrixXd M(ssize, ssize);
      VectorXd rhs(ssize);
      for (int cj = 0; cj < ssize; ++cj) {
        rhs[cj] = theta * red.xB[supp[cj]] - red.r[supp[cj]];
        for (int ri = 0; ri < ssize; ++ri) {
          M(ri, cj) = red.H(supp[ri], supp[cj]);
        }
        M(cj, cj) += theta;
      }
      VectorXd vs;
      if (rho == kInf) {
        MatrixXd Mc = M;
        VectorXd sol = rhs;
        if (!small_chol_solve(Mc, sol)) {
          if (theta == 0.0) {
            throw std::runtime_error(
                "block subproblem: restricted system not positive definite "
                "with theta = 0; use theta > 0");
          }
          throw std::runtime_error(
              "block subproblem: H + theta*I not positive definite on a support");
        }
        vs = sol;
      } else {
        vs = box_qp_min(M, -rhs, rho);
      }
      for (int cj = 0; cj < ssize; ++cj) v[supp[cj]] = vs[cj];
    }

    double val = full_value(red, theta, value_penalty, v);
    // Snap near-zero solved coordinates to exact zero when that does not
    // make the candidate worse (re-evaluated, since the l0 term changes).
    for (int j = 0; j < k; ++j) {
      if (v[j] != 0.0 && std::abs(v[j]) < 1e-12) {
        VectorXd v2 = v;
        v2[j] = 0.0;
        const double val2 = full_value(red, theta, value_penalty, v2);
        if (val2 <= val) {
          v = std::move(v2);
          val = val2;
        }
      }
    }

    const std::uint32_t pat = static_cast<std::uint32_t>(mask);
    if (val < best_val || (val == best_val && pat < best_pat)) {
      best_val = val;
      best_pat = pat;
      best_v = v;
    }
  }
  (void)lambda;
  (void)Mbuf;
  (void)rhsbuf;

  SubproblemResult out;
  out.v = std::move(best_v);
  out.value = best_val;
  out.pattern = best_pat;
  out.candidates_evaluated = evaluated;
  return out;
}

}  // namespace

SubproblemResult solve_block_sparse(const ReducedQuadratic& red, double theta,
                                    double lambda, double rho) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("solve_block_sparse: lambda must be positive");
  }
  if (!(rho > 0.0)) {
    throw std::invalid_argument("solve_block_sparse: rho must be positive");
  }
  return enumerate_supports(red, theta, lambda, rho, red.k(),
                            Penalty::sparse_l0(lambda, rho));
}

SubproblemResult solve_block_cardinality(const ReducedQuadratic& red,
                                         double theta, const Penalty& penalty,
                                         int budget) {
  const int k = red.k();
  check_block_size(k);
  if (theta < 0.0) throw std::invalid_argument("theta must be nonnegative");

  if (penalty.kind() == PenaltyKind::SparseCardinality) {
    if (budget < 0) {
      throw std::invalid_argument(
          "solve_block_cardinality: negative budget (corrupted solver state)");
    }
    // Inner solves as in the sparse case with lambda = 0 and no box.
    Penalty card = penalty;
    return enumerate_supports(red, theta, 0.0, kInf, std::min(k, budget), card);
  }
  if (penalty.kind() != PenaltyKind::BinaryCardinality) {
    throw std::invalid_argument(
        "solve_block_cardinality: penalty must be a cardinality constraint");
  }
  if (budget < 0 || budget > k) {
    throw std::invalid_argument(
        "solve_block_cardinality: budget outside [0,k] (corrupted solver state)");
  }

  // Gray-code walk over {0,1}^k with O(k) updates; only patterns with exactly
  // `budget` ones are candidates.
  const MatrixXd M = red.H + theta * MatrixXd::Identity(k, k);
  const VectorXd rtil = red.r - theta * red.xB;
  const double cst = 0.5 * theta * red.xB.squaredNorm();

  VectorXd v = VectorXd::Zero(k);
  VectorXd q = rtil;  // M v + rtil at v = 0
  double val = cst;

  double best_val = kInf;
  std::uint32_t best_pat = 0;
  std::int64_t evaluated = 0;
  std::uint32_t pat = 0;
  if (budget == 0) {
    best_val = val;
    best_pat = 0;
    evaluated = 1;
  }
  const std::uint64_t total = std::uint64_t{1} << k;
  for (std::uint64_t t = 1; t < total; ++t) {
    const int j = std::countr_zero(t);
    const double delta = v[j] == 0.0 ? 1.0 : -1.0;
    val += delta * q[j] + 0.5 * M(j, j);
    q.noalias() += delta * M.col(j);
    v[j] += delta;
    pat ^= std::uint32_t{1} << j;
    if (std::popcount(pat) == budget) {
      ++evaluated;
      if (val < best_val || (val == best_val && pat < best_pat)) {
        best_val = val;
        best_pat = pat;
      }
    }
  }

  SubproblemResult out;
  out.pattern = best_pat;
  out.candidates_evaluated = evaluated;
  out.v.resize(k);
  for (int j = 0; j < k; ++j) out.v[j] = (best_pat >> j) & 1u ? 1.0 : 0.0;
  out.value = full_value(red, theta, penalty, out.v);
  return out;
}

SubproblemResult solve_block(const ReducedQuadratic& red, double theta,
                             const Penalty& penalty, int budget) {
  switch (penalty.kind()) {
    case PenaltyKind::Binary:
      return solve_block_binary(red, theta);
    case PenaltyKind::SparseL0:
      return solve_block_sparse(red, theta, penalty.lambda(), penalty.rho());
    case PenaltyKind::BinaryCardinality:
    case PenaltyKind::SparseCardinality:
      return solve_block_cardinality(red, theta, penalty, budget);
  }
  throw std::logic_error("unknown penalty kind");
}

}  // namespace hybridopt
