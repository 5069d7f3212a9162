#include "hybridopt/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hybridopt {

namespace {

void check_dim_match(int expected, Eigen::Index got, const char* what) {
  if (static_cast<Eigen::Index>(expected) != got) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(expected) + ", got " +
                                std::to_string(got));
  }
}

}  // namespace

Objective Objective::quadratic(MatrixXd Q, VectorXd p) {
  if (Q.rows() != Q.cols()) {
    throw std::invalid_argument("quadratic objective: Q must be square");
  }
  if (Q.rows() != p.size()) {
    throw std::invalid_argument("quadratic objective: Q and p dimensions disagree");
  }
  const double asym = (Q - Q.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  if (asym > 1e-10 * scale) {
    throw std::invalid_argument("quadratic objective: Q is not symmetric within 1e-10");
  }
  Objective o;
  o.kind_ = ObjectiveKind::Quadratic;
  o.n_ = static_cast<int>(Q.rows());
  o.Q_ = 0.5 * (Q + Q.transpose());
  o.p_ = std::move(p);
  o.diag_ = o.Q_.diagonal();
  return o;
}

Objective Objective::least_squares(MatrixXd A, VectorXd b) {
  if (A.rows() != b.size()) {
    throw std::invalid_argument("least-squares objective: A rows and b length disagree");
  }
  Objective o;
  o.kind_ = ObjectiveKind::LeastSquares;
  o.n_ = static_cast<int>(A.cols());
  o.A_ = std::move(A);
  o.b_ = std::move(b);
  o.diag_ = o.A_.colwise().squaredNorm();
  return o;
}

double Objective::value(const VectorXd& x) const {
  check_dim_match(n_, x.size(), "objective value");
  if (kind_ == ObjectiveKind::Quadratic) {
    return 0.5 * x.dot(Q_ * x) + p_.dot(x);
  }
  return 0.5 * (A_ * x - b_).squaredNorm();
}

VectorXd Objective::gradient(const VectorXd& x) const {
  check_dim_match(n_, x.size(), "objective gradient");
  if (kind_ == ObjectiveKind::Quadratic) {
    return Q_ * x + p_;
  }
  return A_.transpose() * (A_ * x - b_);
}

ReducedQuadratic Objective::reduce_to_block(const VectorXd& x,
                                            const std::vector<int>& B) const {
  check_dim_match(n_, x.size(), "reduce_to_block");
  detail::check_index_set(n_, B);
  ObjectiveState state(*this, x);
  return state.reduce(B);
}

double Objective::spectral_estimate() const {
  const int n = n_;
  if (n == 0) return 1e-12;
  VectorXd v = VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double est = 0.0;
  for (int it = 0; it < 200; ++it) {
    VectorXd w;
    if (kind_ == ObjectiveKind::Quadratic) {
      w = Q_ * v;
    } else {
      w = A_.transpose() * (A_ * v);
    }
    const double norm = w.norm();
    if (norm <= 1e-300) {
      // Matrix annihilates the iterate; restart from a skewed direction.
      v.setZero();
      v[it % n] = 1.0;
      continue;
    }
    v = w / norm;
    double rayleigh;
    if (kind_ == ObjectiveKind::Quadratic) {
      rayleigh = std::abs(v.dot(Q_ * v));
    } else {
      rayleigh = (A_ * v).squaredNorm();
    }
    if (std::abs(rayleigh - est) <= 1e-10 * std::max(1.0, std::abs(rayleigh))) {
      est = rayleigh;
      break;
    }
    est = rayleigh;
  }
  return std::max(est, 1e-12);
}

const MatrixXd& Objective::Q() const {
  if (kind_ != ObjectiveKind::Quadratic) {
    throw std::logic_error("objective is not quadratic");
  }
  return Q_;
}
const VectorXd& Objective::p() const {
  if (kind_ != ObjectiveKind::Quadratic) {
    throw std::logic_error("objective is not quadratic");
  }
  return p_;
}
const MatrixXd& Objective::A() const {
  if (kind_ != ObjectiveKind::LeastSquares) {
    throw std::logic_error("objective is not least-squares");
  }
  return A_;
}
const VectorXd& Objective::b() const {
  if (kind_ != ObjectiveKind::LeastSquares) {
    throw std::logic_error("objective is not least-squares");
  }
  return b_;
}

Penalty Penalty::binary() {
  Penalty h;
  h.kind_ = PenaltyKind::Binary;
  return h;
}

Penalty Penalty::sparse_l0(double lambda, double rho) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("sparse_l0: lambda must be positive");
  }
  if (!(rho > 0.0)) {
    throw std::invalid_argument("sparse_l0: rho must be positive");
  }
  Penalty h;
  h.kind_ = PenaltyKind::SparseL0;
  h.lambda_ = lambda;
  h.rho_ = rho;
  return h;
}

Penalty Penalty::binary_cardinality(int s) {
  if (s < 0) throw std::invalid_argument("binary_cardinality: s must be >= 0");
  Penalty h;
  h.kind_ = PenaltyKind::BinaryCardinality;
  h.s_ = s;
  return h;
}

Penalty Penalty::sparse_cardinality(int s) {
  if (s < 0) throw std::invalid_argument("sparse_cardinality: s must be >= 0");
  Penalty h;
  h.kind_ = PenaltyKind::SparseCardinality;
  h.s_ = s;
  return h;
}

void Penalty::check_dim(int n) const {
  if ((kind_ == PenaltyKind::BinaryCardinality ||
       kind_ == PenaltyKind::SparseCardinality) &&
      s_ > n) {
    throw std::invalid_argument("cardinality penalty: s exceeds dimension");
  }
}

bool Penalty::feasible(const VectorXd& x) const {
  switch (kind_) {
    case PenaltyKind::Binary:
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] != 1.0 && x[i] != -1.0) return false;
      }
      return true;
    case PenaltyKind::SparseL0:
      if (rho_ == kInf) return true;
      return x.cwiseAbs().maxCoeff() <= rho_;
    case PenaltyKind::BinaryCardinality: {
      int ones = 0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] == 1.0) {
          ++ones;
        } else if (x[i] != 0.0) {
          return false;
        }
      }
      return ones == s_;
    }
    case PenaltyKind::SparseCardinality: {
      int nnz = 0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] != 0.0) ++nnz;
      }
      return nnz <= s_;
    }
  }
  return false;
}

double Penalty::value(const VectorXd& x) const {
  if (!feasible(x)) return kInf;
  if (kind_ == PenaltyKind::SparseL0) {
    int nnz = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x[i] != 0.0) ++nnz;
    }
    return lambda_ * nnz;
  }
  return 0.0;
}

VectorXd Penalty::prox(const VectorXd& a, double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("prox: t must be positive");
  const Eigen::Index n = a.size();
  VectorXd out = VectorXd::Zero(n);
  switch (kind_) {
    case PenaltyKind::Binary:
      for (Eigen::Index i = 0; i < n; ++i) out[i] = a[i] >= 0.0 ? 1.0 : -1.0;
      return out;
    case PenaltyKind::SparseL0: {
      const double thr = 2.0 * lambda_ / t;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double c = rho_ == kInf ? a[i] : std::clamp(a[i], -rho_, rho_);
        // Keeping the clipped value beats zero iff c(2a - c) > 2*lambda/t;
        // equality resolves to 0. Reduces to a^2 > 2*lambda/t when rho = inf.
        if (c * (2.0 * a[i] - c) > thr) out[i] = c;
      }
      return out;
    }
    case PenaltyKind::BinaryCardinality: {
      std::vector<int> idx(n);
      for (Eigen::Index i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
      std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) {
        if (a[i] != a[j]) return a[i] > a[j];
        return i < j;
      });
      for (int r = 0; r < s_ && r < static_cast<int>(n); ++r) out[idx[r]] = 1.0;
      return out;
    }
    case PenaltyKind::SparseCardinality: {
      std::vector<int> idx(n);
      for (Eigen::Index i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
      std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) {
        const double ai = std::abs(a[i]), aj = std::abs(a[j]);
        if (ai != aj) return ai > aj;
        return i < j;
      });
      for (int r = 0; r < s_ && r < static_cast<int>(n); ++r) {
        out[idx[r]] = a[idx[r]];
      }
      return out;
    }
  }
  return out;
}

std::string Penalty::name() const {
  switch (kind_) {
    case PenaltyKind::Binary: return "binary";
    case PenaltyKind::SparseL0: return "l0";
    case PenaltyKind::BinaryCardinality: return "card-binary";
    case PenaltyKind::SparseCardinality: return "card-sparse";
  }
  return "?";
}

Problem::Problem(Objective obj, Penalty pen)
    : objective(std::move(obj)), penalty(std::move(pen)), n(objective.dim()) {
  penalty.check_dim(n);
}

double eval_objective(const Problem& problem, const VectorXd& x) {
  const double h = problem.penalty.value(x);
  if (h == kInf) return kInf;
  return problem.objective.value(x) + h;
}

VectorXd eval_gradient(const Objective& objective, const VectorXd& x) {
  return objective.gradient(x);
}

double penalty_value(const Penalty& penalty, const VectorXd& x) {
  return penalty.value(x);
}

double lipschitz_estimate(const Objective& objective) {
  return std::max(1.01 * objective.spectral_estimate(), 1e-12);
}

VectorXd prox(const Penalty& penalty, const VectorXd& a, double t) {
  return penalty.prox(a, t);
}

ReducedQuadratic reduce_to_block(const Objective& objective, const VectorXd& x,
                                 const std::vector<int>& B) {
  return objective.reduce_to_block(x, B);
}

void detail::check_index_set(int n, const std::vector<int>& B) {
  if (B.empty()) throw std::invalid_argument("working set must be nonempty");
  std::vector<bool> seen(n, false);
  for (int i : B) {
    if (i < 0 || i >= n) {
      throw std::invalid_argument("working set index out of range: " +
                                  std::to_string(i));
    }
    if (seen[i]) {
      throw std::invalid_argument("working set has duplicate index: " +
                                  std::to_string(i));
    }
    seen[i] = true;
  }
}

ObjectiveState::ObjectiveState(const Objective& objective, VectorXd x0)
    : obj_(&objective), x_(std::move(x0)) {
  if (x_.size() != objective.dim()) {
    throw std::invalid_argument("iterate dimension does not match objective");
  }
  if (objective.kind() == ObjectiveKind::Quadratic) {
    grad_ = objective.Q() * x_ + objective.p();
    grad_valid_ = true;
    smooth_ = 0.5 * (x_.dot(grad_) + x_.dot(objective.p()));
  } else {
    residual_ = objective.A() * x_ - objective.b();
    smooth_ = 0.5 * residual_.squaredNorm();
    grad_valid_ = false;
  }
}

const VectorXd& ObjectiveState::gradient() {
  if (!grad_valid_) {
    grad_ = obj_->A().transpose() * residual_;
    grad_valid_ = true;
  }
  return grad_;
}

ReducedQuadratic ObjectiveState::reduce(const std::vector<int>& B) const {
  detail::check_index_set(obj_->dim(), B);
  const int k = static_cast<int>(B.size());
  ReducedQuadratic red;
  red.B = B;
  red.xB.resize(k);
  for (int j = 0; j < k; ++j) red.xB[j] = x_[B[j]];

  if (obj_->kind() == ObjectiveKind::Quadratic) {
    const MatrixXd& Q = obj_->Q();
    red.H.resize(k, k);
    for (int cj = 0; cj < k; ++cj) {
      for (int ri = 0; ri < k; ++ri) red.H(ri, cj) = Q(B[ri], B[cj]);
    }
    red.r.resize(k);
    for (int j = 0; j < k; ++j) red.r[j] = grad_[B[j]];
    red.r.noalias() -= red.H * red.xB;
    red.c0 = smooth_ - (0.5 * red.xB.dot(red.H * red.xB) + red.xB.dot(red.r));
  } else {
    const MatrixXd& A = obj_->A();
    MatrixXd AB(A.rows(), k);
    for (int j = 0; j < k; ++j) AB.col(j) = A.col(B[j]);
    const VectorXd res0 = residual_ - AB * red.xB;  // residual with x_B zeroed
    red.H.noalias() = AB.transpose() * AB;
    red.r.noalias() = AB.transpose() * res0;
    red.c0 = 0.5 * res0.squaredNorm();
  }
  return red;
}

void ObjectiveState::apply_block(const std::vector<int>& B, const VectorXd& v) {
  detail::check_index_set(obj_->dim(), B);
  const int k = static_cast<int>(B.size());
  if (v.size() != k) {
    throw std::invalid_argument("block update dimension does not match working set");
  }
  VectorXd delta(k);
  for (int j = 0; j < k; ++j) delta[j] = v[j] - x_[B[j]];

  if (obj_->kind() == ObjectiveKind::Quadratic) {
    const MatrixXd& Q = obj_->Q();
    // df = delta'g + 1/2 delta'Q_BB delta, with the pre-update gradient.
    double df = 0.0;
    for (int j = 0; j < k; ++j) df += delta[j] * grad_[B[j]];
    for (int cj = 0; cj < k; ++cj) {
      double acc = 0.0;
      for (int ri = 0; ri < k; ++ri) acc += Q(B[ri], B[cj]) * delta[ri];
      df += 0.5 * acc * delta[cj];
    }
    smooth_ += df;
    for (int j = 0; j < k; ++j) grad_.noalias() += Q.col(B[j]) * delta[j];
    for (int j = 0; j < k; ++j) x_[B[j]] = v[j];
  } else {
    const MatrixXd& A = obj_->A();
    for (int j = 0; j < k; ++j) residual_.noalias() += A.col(B[j]) * delta[j];
    smooth_ = 0.5 * residual_.squaredNorm();
    grad_valid_ = false;
    for (int j = 0; j < k; ++j) x_[B[j]] = v[j];
  }
}

}  // namespace hybridopt
