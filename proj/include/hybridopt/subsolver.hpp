#pragma once

#include <cstdint>

#include "hybridopt/model.hpp"

namespace hybridopt {

// Hard cap on the working-set size: enumeration is O(2^k), and the cap turns
// a silent blowup into an explicit error.
inline constexpr int kMaxBlockSize = 20;

// Exact minimizer of the block subproblem
//   min_v 1/2 v'Hv + <v,r> + h_block(v) + theta/2 ||v - xB||^2.
//
// `pattern` encodes the combinatorial choice made, bit j referring to block
// coordinate j: binary, bit set <=> v_j = -1 (so the all(+1) vector is
// pattern 0 and a tie at a coordinate resolves to +1); sparse kinds, bit set
// <=> v_j is in the support; binary-cardinality, bit set <=> v_j = 1. Ties in
// value resolve to the smallest pattern integer.
struct SubproblemResult {
  VectorXd v;
  double value = 0.0;
  std::uint32_t pattern = 0;
  std::int64_t candidates_evaluated = 0;
};

// Exhaustive search over the 2^k sign vectors, walked in Gray-code order with
// O(k) incremental objective updates; the winning value is recomputed from
// scratch before returning.
SubproblemResult solve_block_binary(const ReducedQuadratic& red, double theta);

// Enumerates all 2^k supports; per support solves the restricted strictly
// convex quadratic ((H_SS + theta I) v = theta xB_S - r_S, or the box
// constrained version by projected Newton when rho < inf), then adds
// lambda |S| and the proximal term. Solved coordinates with magnitude below
// 1e-12 are snapped to exact zero when that does not increase the value.
SubproblemResult solve_block_sparse(const ReducedQuadratic& red, double theta,
                                    double lambda, double rho);

// Cardinality-constrained block solves. `budget` is the number of ones
// (BinaryCardinality: exactly budget) or the support bound
// (SparseCardinality: at most budget) available inside the block, i.e.
// s minus the count held by the frozen coordinates.
SubproblemResult solve_block_cardinality(const ReducedQuadratic& red,
                                         double theta, const Penalty& penalty,
                                         int budget);

// Dispatch on penalty kind. `budget` is ignored for Binary/SparseL0.
SubproblemResult solve_block(const ReducedQuadratic& red, double theta,
                             const Penalty& penalty, int budget = -1);

// Reduced objective of keeping the current block values xB (the "stay"
// candidate the driver compares against): 1/2 xB'H xB + <xB,r> + h_block(xB).
double keep_value(const ReducedQuadratic& red, const Penalty& penalty);

// min 1/2 w'Mw + <w,q> over the box [-rho, rho]^k for symmetric positive
// definite M. Projected Newton with active-set identification; inner
// tolerance 1e-10 on the projected gradient.
VectorXd box_qp_min(const MatrixXd& M, const VectorXd& q, double rho);

}  // namespace hybridopt
