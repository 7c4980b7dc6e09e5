#include "reld/pcp.hpp"

#include "reld/error.hpp"

#include <algorithm>
#include <cmath>

namespace reld {

double SubspaceBasis::orthonormality_error() const {
  if (P.cols() == 0) return 0.0;
  const Eigen::MatrixXd gram = P.transpose() * P;
  return (gram - Eigen::MatrixXd::Identity(P.cols(), P.cols())).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& X, double tau) {
  if (!(tau >= 0.0)) throw ArgumentError("soft_threshold: tau must be >= 0");
  return X.unaryExpr([tau](double x) {
    const double mag = std::abs(x) - tau;
    return mag > 0.0 ? std::copysign(mag, x) : 0.0;
  });
}

Eigen::MatrixXd svt(const Eigen::MatrixXd& X, double tau) {
  if (!(tau >= 0.0)) throw ArgumentError("svt: tau must be >= 0");
  if (X.size() == 0) return X;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("svt: SVD failed");
  const Eigen::VectorXd& sv = svd.singularValues();
  Eigen::Index keep = 0;
  while (keep < sv.size() && sv(keep) > tau) ++keep;
  if (keep == 0) return Eigen::MatrixXd::Zero(X.rows(), X.cols());
  const Eigen::VectorXd shrunk = sv.head(keep).array() - tau;
  return svd.matrixU().leftCols(keep) * shrunk.asDiagonal() * svd.matrixV().leftCols(keep).transpose();
}

PcpResult pcp_decompose(const Eigen::MatrixXd& M, const PcpOptions& options) {
  if (M.cols() < 2) throw ArgumentError("pcp_decompose: need at least two columns");
  if (!M.allFinite()) throw ArgumentError("pcp_decompose: matrix has non-finite entries");
  if (!(options.tol > 0.0)) throw ArgumentError("pcp_decompose: tol must be > 0");

  PcpResult result;
  const double lambda = options.lambda > 0.0
                            ? options.lambda
                            : 1.0 / std::sqrt(static_cast<double>(std::max(M.rows(), M.cols())));
  result.lambda = lambda;
  result.L_hat = Eigen::MatrixXd::Zero(M.rows(), M.cols());
  result.S_hat = Eigen::MatrixXd::Zero(M.rows(), M.cols());

  const double norm_fro = M.norm();
  if (norm_fro == 0.0) {
    result.converged = true;
    return result;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> top(M);
  const double norm_two = top.singularValues()(0);
  const double norm_inf = M.cwiseAbs().maxCoeff() / lambda;

  // Dual variable scaled so that its spectral/inf dual norm equals one.
  Eigen::MatrixXd Y = M / std::max(norm_two, norm_inf);
  double mu = options.mu_scale / norm_two;
  const double mu_max = mu * 1e7;

  Eigen::MatrixXd residual = M;
  for (int it = 1; it <= options.max_iter; ++it) {
    result.S_hat = soft_threshold(M - result.L_hat + Y / mu, lambda / mu);
    result.L_hat = svt(M - result.S_hat + Y / mu, 1.0 / mu);
    residual = M - result.L_hat - result.S_hat;
    Y += mu * residual;
    mu = std::min(mu * options.rho, mu_max);

    result.iterations = it;
    result.final_residual = residual.norm() / norm_fro;
    if (result.final_residual <= options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

std::string to_string(EnergyMeasure measure) { return measure == EnergyMeasure::linear ? "linear" : "squared"; }

EnergyMeasure energy_measure_from_string(const std::string& s) {
  if (s == "squared") return EnergyMeasure::squared;
  if (s == "linear") return EnergyMeasure::linear;
  throw ConfigError("unknown energy measure '" + s + "' (expected squared or linear)");
}

SubspaceBasis approx_basis(const Eigen::MatrixXd& M, double energy_percent, EnergyMeasure measure) {
  if (!(energy_percent > 0.0 && energy_percent <= 100.0)) {
    throw ArgumentError("approx_basis: energy percent must be in (0, 100]");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) throw NumericalError("approx_basis: SVD failed");
  const Eigen::VectorXd& sv = svd.singularValues();
  const auto energy = [measure](double s) { return measure == EnergyMeasure::squared ? s * s : s; };
  const double total = measure == EnergyMeasure::squared ? sv.squaredNorm() : sv.sum();
  if (sv.size() == 0 || total == 0.0) throw ArgumentError("approx_basis: matrix is zero");

  const double target = energy_percent / 100.0 * total;
  double cumulative = 0.0;
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > 0.0) {
    cumulative += energy(sv(r));
    ++r;
    // Relative slack keeps exact-rank inputs from demanding one more
    // direction because of rounding in the running sum.
    if (cumulative >= target * (1.0 - 1e-12)) break;
  }
  return {svd.matrixU().leftCols(r), sv.head(r)};
}

double normalized_sigma_min(const SubspaceBasis& basis, Eigen::Index columns) {
  if (basis.empty()) throw ArgumentError("normalized_sigma_min: empty basis");
  if (columns <= 0) throw ArgumentError("normalized_sigma_min: columns must be positive");
  return basis.singular_values(basis.rank() - 1) / std::sqrt(static_cast<double>(columns));
}

}  // namespace reld
