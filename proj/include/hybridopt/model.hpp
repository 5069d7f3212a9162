#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

namespace hybridopt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ObjectiveKind { Quadratic, LeastSquares };

struct ReducedQuadratic;

// Smooth convex part f of the objective: either a dense quadratic
// f(x) = 1/2 x'Qx + <x,p> or a least-squares term f(x) = 1/2 ||Ax - b||^2.
// Immutable after construction and safe to share across threads.
class Objective {
 public:
  static Objective quadratic(MatrixXd Q, VectorXd p);
  static Objective least_squares(MatrixXd A, VectorXd b);

  ObjectiveKind kind() const { return kind_; }
  int dim() const { return n_; }

  double value(const VectorXd& x) const;
  VectorXd gradient(const VectorXd& x) const;

  // Diagonal of the implied Q (Q_ii, or ||A col i||^2), precomputed once.
  const VectorXd& quad_diag() const { return diag_; }

  // Restriction of f to the coordinates in B with the rest frozen at x:
  // f(x with x_B replaced by v) = 1/2 v'Hv + <v,r> + c0.
  ReducedQuadratic reduce_to_block(const VectorXd& x,
                                   const std::vector<int>& B) const;

  // Raw spectral norm estimate (power iteration, converges from below).
  double spectral_estimate() const;

  const MatrixXd& Q() const;
  const VectorXd& p() const;
  const MatrixXd& A() const;
  const VectorXd& b() const;

 private:
  Objective() = default;
  ObjectiveKind kind_ = ObjectiveKind::Quadratic;
  int n_ = 0;
  MatrixXd Q_;   // quadratic
  VectorXd p_;
  MatrixXd A_;   // least squares
  VectorXd b_;
  VectorXd diag_;
};

enum class PenaltyKind { Binary, SparseL0, BinaryCardinality, SparseCardinality };

// Nonsmooth part h: sign constraint, l0 penalty with box, or a cardinality
// constraint. Extended-real valued: value() is finite iff x is feasible.
class Penalty {
 public:
  static Penalty binary();
  static Penalty sparse_l0(double lambda, double rho = kInf);
  static Penalty binary_cardinality(int s);
  static Penalty sparse_cardinality(int s);

  PenaltyKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double rho() const { return rho_; }
  int s() const { return s_; }

  double value(const VectorXd& x) const;
  bool feasible(const VectorXd& x) const;

  // argmin_x t/2 ||x - a||^2 + h(x). Binary: sign(a) with sign(0) = +1.
  // SparseL0: per-coordinate hard threshold against the box, ties to 0.
  // Cardinality kinds: keep the s best entries (by value resp. magnitude),
  // ties to the lower index.
  VectorXd prox(const VectorXd& a, double t) const;

  // Throws if the penalty cannot apply to dimension n (e.g. s > n).
  void check_dim(int n) const;

  std::string name() const;

 private:
  Penalty() = default;
  PenaltyKind kind_ = PenaltyKind::Binary;
  double lambda_ = 0.0;
  double rho_ = kInf;
  int s_ = 0;
};

struct Problem {
  Objective objective;
  Penalty penalty;
  int n = 0;

  Problem(Objective obj, Penalty pen);
};

// k-dimensional restriction of the smooth part to a working set B:
// phi(v) = 1/2 v'Hv + <v,r> + c0 with H = Q_BB and r the gradient
// contribution of the frozen coordinates plus the linear term.
struct ReducedQuadratic {
  MatrixXd H;
  VectorXd r;
  double c0 = 0.0;
  VectorXd xB;
  std::vector<int> B;

  int k() const { return static_cast<int>(B.size()); }
  double smooth_at(const VectorXd& v) const {
    return 0.5 * v.dot(H * v) + v.dot(r) + c0;
  }
};

// ---- spec operation surface ----

double eval_objective(const Problem& problem, const VectorXd& x);
VectorXd eval_gradient(const Objective& objective, const VectorXd& x);
double penalty_value(const Penalty& penalty, const VectorXd& x);

// L >= lambda_max within a 1.01 safety factor (power iteration, 200 rounds
// or relative change < 1e-10, times 1.01; floored at 1e-12).
double lipschitz_estimate(const Objective& objective);

VectorXd prox(const Penalty& penalty, const VectorXd& a, double t);
ReducedQuadratic reduce_to_block(const Objective& objective, const VectorXd& x,
                                 const std::vector<int>& B);

// Mutable iterate owned by a solver run. Keeps the caches that make block
// updates cheap: the gradient (quadratic) or the residual Ax - b (least
// squares, rank-k updates), plus the running smooth value.
class ObjectiveState {
 public:
  ObjectiveState(const Objective& objective, VectorXd x0);

  const VectorXd& x() const { return x_; }
  double smooth_value() const { return smooth_; }
  const VectorXd& gradient();

  ReducedQuadratic reduce(const std::vector<int>& B) const;
  void apply_block(const std::vector<int>& B, const VectorXd& v);

 private:
  const Objective* obj_;
  VectorXd x_;
  VectorXd grad_;      // quadratic: Qx + p, always current
  VectorXd residual_;  // least squares: Ax - b, always current
  bool grad_valid_ = false;
  double smooth_ = 0.0;
};

namespace detail {
void check_index_set(int n, const std::vector<int>& B);
}

}  // namespace hybridopt
