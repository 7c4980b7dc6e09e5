#include "reld/reprocs.hpp"

#include "reld/error.hpp"

#include <cmath>
#include <limits>

namespace reld {

namespace {

void check_dims(const SubspaceBasis& basis, Eigen::Index n, const char* where) {
  if (basis.dim() != n && !(basis.empty() && basis.dim() == 0)) {
    throw ShapeError(std::string(where) + ": basis has " + std::to_string(basis.dim()) + " rows, vector has " +
                     std::to_string(n));
  }
}

void soft_threshold_inplace(Eigen::VectorXd& v, double tau) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i)) - tau;
    v(i) = mag > 0.0 ? std::copysign(mag, v(i)) : 0.0;
  }
}

// FISTA with gradient-based adaptive restart on
//   0.5 ||y_proj - Phi x||^2 + lambda ||x||_1,
// warm-started from x. Phi is a projector so the step size is 1.
int fista(const SubspaceBasis& basis, const Eigen::VectorXd& y_proj, double lambda, const L1Options& options,
          Eigen::VectorXd& x) {
  Eigen::VectorXd z = x;
  Eigen::VectorXd x_prev = x;
  Eigen::VectorXd step(x.size());
  double t = 1.0;
  int it = 0;
  for (; it < options.max_inner_iter; ++it) {
    // z - grad = z - (Phi z - y_proj) = y_proj + P P^T z
    step = y_proj;
    if (!basis.empty()) step.noalias() += basis.P * (basis.P.transpose() * z);
    soft_threshold_inplace(step, lambda);

    x_prev.swap(x);
    x.swap(step);  // x = new iterate
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if ((z - x).dot(x - x_prev) > 0.0) {
      t = 1.0;
      z = x;
    } else {
      z = x + ((t - 1.0) / t_next) * (x - x_prev);
      t = t_next;
    }
    const double delta = (x - x_prev).norm();
    if (delta <= options.inner_tol * std::max(1.0, x.norm())) {
      ++it;
      break;
    }
  }
  return it;
}

double constraint_residual(const SubspaceBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::VectorXd& x) {
  return (y - project_perp(basis, x)).norm();
}

}  // namespace

Eigen::VectorXd project_perp(const SubspaceBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& m) {
  if (basis.empty()) return m;
  check_dims(basis, m.size(), "project_perp");
  Eigen::VectorXd out = m;
  out.noalias() -= basis.P * (basis.P.transpose() * m);
  return out;
}

L1Result solve_l1(const SubspaceBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& y, double xi,
                  const L1Options& options) {
  if (!(xi >= 0.0)) throw ArgumentError("solve_l1: xi must be >= 0");
  if (!basis.empty()) check_dims(basis, y.size(), "solve_l1");

  const Eigen::Index n = y.size();
  L1Result result;
  result.x = Eigen::VectorXd::Zero(n);
  result.residual = y.norm();
  if (result.residual <= xi) return result;

  const Eigen::VectorXd y_proj = project_perp(basis, y);
  const double upper_tol = xi * (1.0 + options.constraint_rel_tol);
  const double lower_tol = xi * (1.0 - options.constraint_rel_tol);

  // x = 0 is optimal for lambda >= ||Phi^T y||_inf. At the optimum the
  // residual r satisfies ||Phi r||_inf <= lambda, and r lies in range(Phi)
  // when y does, so lambda = xi / sqrt(n) is always feasible.
  double hi = y_proj.cwiseAbs().maxCoeff();
  double lo = std::max(xi / std::sqrt(static_cast<double>(n)), hi * 1e-14);
  if (lo >= hi) lo = hi * 0.5;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  bool have_feasible = false;
  double best_infeasible = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_infeasible_x = x;

  auto evaluate = [&](double lambda) {
    result.inner_iterations += fista(basis, y_proj, lambda, options, x);
    const double r = constraint_residual(basis, y, x);
    if (r <= upper_tol) {
      // Residual grows with lambda, so the last feasible point seen during
      // bisection has the largest feasible lambda (smallest l1 norm).
      if (!have_feasible || lambda >= result.lambda) {
        result.x = x;
        result.residual = r;
        result.lambda = lambda;
      }
      have_feasible = true;
    } else if (r < best_infeasible) {
      best_infeasible = r;
      best_infeasible_x = x;
    }
    return r;
  };

  for (int b = 0; b < options.max_bisection; ++b) {
    const double mid = std::sqrt(lo * hi);
    const double r = evaluate(mid);
    if (r <= upper_tol) {
      if (r >= lower_tol) break;
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi / lo < 1.0 + 1e-12) break;
  }

  if (!have_feasible) {
    // Fall back to the guaranteed-feasible end of the bracket with a cold,
    // longer solve.
    L1Options longer = options;
    longer.max_inner_iter = options.max_inner_iter * 5;
    x.setZero();
    const double lambda = std::max(xi / std::sqrt(static_cast<double>(n)), 1e-300);
    result.inner_iterations += fista(basis, y_proj, lambda, longer, x);
    const double r = constraint_residual(basis, y, x);
    if (r <= upper_tol) {
      result.x = x;
      result.residual = r;
      result.lambda = lambda;
      have_feasible = true;
    } else if (r < best_infeasible) {
      best_infeasible = r;
      best_infeasible_x = x;
    }
  }
  if (!have_feasible) {
    result.x = best_infeasible_x;
    result.residual = best_infeasible;
    result.converged = false;
  }
  return result;
}

SupportSet threshold_support(const Eigen::Ref<const Eigen::VectorXd>& s, double omega) {
  if (!(omega >= 0.0)) throw ArgumentError("threshold_support: omega must be >= 0");
  SupportSet support;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (std::abs(s(i)) >= omega) support.push_back(i);
  }
  return support;
}

double support_threshold(const Eigen::Ref<const Eigen::VectorXd>& m) {
  if (m.size() == 0) return 0.0;
  return 3.0 * std::sqrt(m.squaredNorm() / static_cast<double>(m.size()));
}

Eigen::VectorXd least_squares_on_support(const SubspaceBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& y,
                                         const SupportSet& support, double max_condition) {
  const Eigen::Index n = y.size();
  if (!basis.empty()) check_dims(basis, n, "least_squares_on_support");
  if (static_cast<Eigen::Index>(support.size()) > n) {
    throw ArgumentError("least_squares_on_support: support larger than n");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (support.empty()) return x;

  const auto k = static_cast<Eigen::Index>(support.size());
  const Eigen::VectorXd y_proj = project_perp(basis, y);
  Eigen::VectorXd rhs(k);  // Phi_T^T y = (Phi y)_T
  for (Eigen::Index i = 0; i < k; ++i) rhs(i) = y_proj(support[static_cast<std::size_t>(i)]);

  if (basis.empty()) {
    for (Eigen::Index i = 0; i < k; ++i) x(support[static_cast<std::size_t>(i)]) = rhs(i);
    return x;
  }

  const Eigen::Index r = basis.rank();
  Eigen::MatrixXd P_T(k, r);
  for (Eigen::Index i = 0; i < k; ++i) P_T.row(i) = basis.P.row(support[static_cast<std::size_t>(i)]);

  // Eigenvalues of I - P_T P_T^T are 1 - eig(P_T^T P_T) plus ones, so the
  // smallest eigenvalue of the r x r matrix G bounds the condition number.
  const Eigen::MatrixXd G = Eigen::MatrixXd::Identity(r, r) - P_T.transpose() * P_T;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  if (eig.info() != Eigen::Success) throw NumericalError("least_squares_on_support: eigensolver failed");
  const double smallest = eig.eigenvalues().minCoeff();
  const double largest = k > r ? 1.0 : std::max(eig.eigenvalues().maxCoeff(), smallest);
  if (!(smallest > 0.0) || largest / smallest > max_condition) {
    throw RankDeficientError("least_squares_on_support: restricted system is rank deficient");
  }

  // Woodbury: (I - P_T P_T^T)^{-1} = I + P_T G^{-1} P_T^T
  const Eigen::VectorXd coeff = eig.eigenvectors() *
                                (eig.eigenvalues().cwiseInverse().asDiagonal() *
                                 (eig.eigenvectors().transpose() * (P_T.transpose() * rhs)));
  const Eigen::VectorXd x_T = rhs + P_T * coeff;
  for (Eigen::Index i = 0; i < k; ++i) x(support[static_cast<std::size_t>(i)]) = x_T(i);
  return x;
}

FrameSplit split_frame(const SubspaceBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& previous_l_hat,
                       const Eigen::Ref<const Eigen::VectorXd>& m, const L1Options& options) {
  if (previous_l_hat.size() != m.size()) throw ShapeError("split_frame: previous estimate has wrong length");
  FrameSplit out;
  const Eigen::VectorXd y = project_perp(basis, m);
  out.xi = project_perp(basis, previous_l_hat).norm();

  L1Result l1 = solve_l1(basis, y, out.xi, options);
  out.l1_converged = l1.converged;
  out.s_hat = std::move(l1.x);

  out.omega = support_threshold(m);
  out.support = threshold_support(out.s_hat, out.omega);
  try {
    out.s_star = least_squares_on_support(basis, y, out.support);
  } catch (const RankDeficientError&) {
    out.s_star = out.s_hat;
    out.debiased = false;
  }

  out.l_hat = m - out.s_hat;
  out.l_star = m - out.s_star;
  return out;
}

}  // namespace reld
