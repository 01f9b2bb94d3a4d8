#pragma once

#include <string>

#include "noisyrd/types.hpp"

namespace noisyrd {

/// Convex quadratic program in the form
///
///   minimize    0.5 x'Qx + c'x
///   subject to  A x  = b
///               G x <= h
///               x >= 0        (only when nonneg is set)
///
/// Q must be symmetric positive semidefinite (zero for a linear program).
/// Any of A/G may be empty.
struct IpProblem {
  Matrix Q;
  Vector c;
  Matrix A;
  Vector b;
  Matrix G;
  Vector h;
  bool nonneg = false;
};

struct IpOptions {
  double tol_feas = 1e-10;  // relative primal feasibility
  // Dual feasibility is reported, not certified: redundant constraint
  // families (collinear rows) leave the dual solution non-unique and its
  // residual floors well above the primal one.
  double tol_dual = 1e-7;
  double tol_gap = 1e-8;    // relative complementarity gap
  int max_iter = 100;
  double static_reg = 1e-12;  // Tikhonov term on the reduced KKT diagonal
  double tau = 0.995;         // fraction-to-boundary step factor
};

enum class IpStatus { Optimal, Infeasible, Unbounded, MaxIter, Numerical };

struct IpResult {
  IpStatus status = IpStatus::Numerical;
  Vector x;
  Vector eq_dual;
  Vector ineq_dual;
  double objective = 0.0;
  double primal_residual = 0.0;  // relative, on the original data
  double dual_residual = 0.0;
  double rel_gap = 0.0;
  int iterations = 0;
  bool ok() const { return status == IpStatus::Optimal; }
};

std::string to_string(IpStatus status);

/// Dense primal-dual interior-point solve (Mehrotra predictor-corrector).
IpResult solve_ip(const IpProblem& problem, const IpOptions& options = {});

}  // namespace noisyrd
