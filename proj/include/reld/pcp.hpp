#pragma once

#include <Eigen/Dense>

#include <string>

namespace reld {

/// Orthonormal basis of an estimated low-rank subspace.
///
/// `P` is n x r with orthonormal columns; `singular_values` holds the r
/// singular values that produced it, in descending order. An empty basis
/// (r = 0) is allowed and acts as the zero subspace.
struct SubspaceBasis {
  Eigen::MatrixXd P;
  Eigen::VectorXd singular_values;

  Eigen::Index dim() const { return P.rows(); }
  Eigen::Index rank() const { return P.cols(); }
  bool empty() const { return P.cols() == 0; }

  static SubspaceBasis empty_basis(Eigen::Index n) { return {Eigen::MatrixXd(n, 0), Eigen::VectorXd(0)}; }

  /// Largest |(P^T P - I)_ij|.
  double orthonormality_error() const;
};

/// Entrywise sign(x) * max(|x| - tau, 0).
Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& X, double tau);

/// Singular value thresholding U * soft(Sigma, tau) * V^T.
Eigen::MatrixXd svt(const Eigen::MatrixXd& X, double tau);

struct PcpOptions {
  /// Sparsity weight; <= 0 selects 1 / sqrt(max(n, t)).
  double lambda = 0.0;
  double tol = 1e-7;
  int max_iter = 500;
  /// Initial mu = mu_scale / ||M||_2.
  double mu_scale = 1.25;
  double rho = 1.5;
};

struct PcpResult {
  Eigen::MatrixXd L_hat;
  Eigen::MatrixXd S_hat;
  int iterations = 0;
  /// ||M - L - S||_F / ||M||_F at exit.
  double final_residual = 0.0;
  bool converged = false;
  double lambda = 0.0;
};

/// Principal Component Pursuit, min ||L||_* + lambda ||S||_1 s.t. L + S = M,
/// solved with the inexact augmented Lagrange multiplier method.
///
/// Stops when the relative residual falls to `tol` or after `max_iter`
/// iterations; `converged` tells which. Throws ArgumentError on non-finite
/// input or fewer than two columns.
PcpResult pcp_decompose(const Eigen::MatrixXd& M, const PcpOptions& options = {});

/// What counts as the energy of a singular value.
enum class EnergyMeasure {
  squared,  // sigma^2 (Frobenius energy)
  linear,   // sigma
};

std::string to_string(EnergyMeasure measure);
EnergyMeasure energy_measure_from_string(const std::string& s);

/// Smallest set of leading left singular vectors whose singular-value
/// energy reaches `energy_percent` of the total.
SubspaceBasis approx_basis(const Eigen::MatrixXd& M, double energy_percent,
                           EnergyMeasure measure = EnergyMeasure::squared);

/// Singular-value threshold used by the tracker: the smallest retained
/// singular value divided by sqrt(columns), putting it on the same per-frame
/// scale as the 1/sqrt(alpha) normalized detection blocks.
double normalized_sigma_min(const SubspaceBasis& basis, Eigen::Index columns);

}  // namespace reld
