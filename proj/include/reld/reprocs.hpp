#pragma once

#include "reld/pcp.hpp"

#include <Eigen/Dense>

#include <vector>

namespace reld {

using SupportSet = std::vector<Eigen::Index>;

/// (I - P P^T) x, applied as x - P (P^T x).
Eigen::VectorXd project_perp(const SubspaceBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& m);

struct L1Options {
  /// Relative tolerance on the constraint ||y - Phi x|| <= xi.
  double constraint_rel_tol = 1e-3;
  /// Iteration cap of each inner proximal-gradient solve.
  int max_inner_iter = 2000;
  int max_bisection = 80;
  /// Stopping tolerance of the inner solver on successive iterates.
  double inner_tol = 1e-10;
};

struct L1Result {
  Eigen::VectorXd x;
  /// ||y - Phi x||_2 of the returned point.
  double residual = 0.0;
  /// Penalty weight of the final penalized subproblem.
  double lambda = 0.0;
  int inner_iterations = 0;
  /// False when the constraint could not be met within the caps; x is
  /// then the best feasible iterate found.
  bool converged = true;
};

/// min ||x||_1 s.t. ||y - Phi x||_2 <= xi with Phi = I - P P^T.
///
/// Solves min 0.5 ||y - Phi x||^2 + lambda ||x||_1 with FISTA (unit step,
/// since Phi is a projector) and bisects lambda on a log scale until the
/// residual lands within `constraint_rel_tol` of xi. Only uses Phi as an
/// operator.
L1Result solve_l1(const SubspaceBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& y, double xi,
                  const L1Options& options = {});

/// {i : |s_i| >= omega}, ascending.
SupportSet threshold_support(const Eigen::Ref<const Eigen::VectorXd>& s, double omega);

/// 3 * sqrt(||m||^2 / n).
double support_threshold(const Eigen::Ref<const Eigen::VectorXd>& m);

/// Least-squares estimate of x on `support` from y = Phi x.
///
/// The restricted Gram matrix Phi_T^T Phi_T = I - P_T P_T^T is inverted
/// through the r x r system I - P_T^T P_T, so the cost is O(|T| r^2).
/// Throws RankDeficientError when its condition number exceeds `max_condition`.
Eigen::VectorXd least_squares_on_support(const SubspaceBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& y,
                                         const SupportSet& support, double max_condition = 1e10);

/// Everything produced when one frame is split into sparse and low-rank parts.
struct FrameSplit {
  Eigen::VectorXd s_hat;
  Eigen::VectorXd l_hat;
  Eigen::VectorXd s_star;
  Eigen::VectorXd l_star;
  SupportSet support;
  double xi = 0.0;
  double omega = 0.0;
  /// False when the least-squares step was skipped (s_star = s_hat).
  bool debiased = true;
  bool l1_converged = true;
};

/// Splits frame m_t given the previous basis and the previous low-rank
/// estimate. l_hat = m - s_hat and l_star = m - s_star by construction.
FrameSplit split_frame(const SubspaceBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& previous_l_hat,
                       const Eigen::Ref<const Eigen::VectorXd>& m, const L1Options& options = {});

}  // namespace reld
