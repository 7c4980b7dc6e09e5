#include "reld/subspace_tracker.hpp"

#include "reld/error.hpp"

#include <algorithm>
#include <cmath>

namespace reld {

void TrackerParams::validate() const {
  if (alpha < 3) throw ArgumentError("tracker alpha must be >= 3");
  if (K_min < 1 || K_min > K_max) throw ArgumentError("tracker needs 1 <= K_min <= K_max");
  if (!(detection_ratio_tol > 0.0)) throw ArgumentError("tracker detection_ratio_tol must be > 0");
}

std::string to_string(TrackerFlag flag) { return flag == TrackerFlag::detect ? "detect" : "pPCA"; }

namespace {

// Orthogonalizes `dirs` against `fixed` and against each other (two passes
// of modified Gram-Schmidt), dropping columns that collapse numerically.
Eigen::MatrixXd orthonormalize_against(const Eigen::MatrixXd& fixed, const Eigen::MatrixXd& dirs) {
  Eigen::MatrixXd out(dirs.rows(), dirs.cols());
  Eigen::Index kept = 0;
  for (Eigen::Index c = 0; c < dirs.cols(); ++c) {
    Eigen::VectorXd v = dirs.col(c);
    const double original = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index f = 0; f < fixed.cols(); ++f) v -= fixed.col(f).dot(v) * fixed.col(f);
      for (Eigen::Index f = 0; f < kept; ++f) v -= out.col(f).dot(v) * out.col(f);
    }
    const double norm = v.norm();
    if (norm <= 1e-8 * std::max(original, 1e-300)) continue;
    out.col(kept++) = v / norm;
  }
  return out.leftCols(kept);
}

}  // namespace

SubspaceTracker::SubspaceTracker(SubspaceBasis initial, double sigma_min, long initial_time, TrackerParams params)
    : params_(params), settled_(std::move(initial)), sigma_min_(sigma_min), t_hat_(initial_time) {
  params_.validate();
  if (!(sigma_min_ >= 0.0)) throw ArgumentError("tracker sigma_min must be >= 0");
  current_ = settled_;
}

void SubspaceTracker::push(long t, const Eigen::Ref<const Eigen::VectorXd>& l_star) {
  if (!buffer_.empty() && buffer_.back().size() != l_star.size()) {
    throw ShapeError("tracker: frame length changed");
  }
  buffer_.emplace_back(l_star);
  while (buffer_.size() > static_cast<std::size_t>(params_.alpha)) buffer_.pop_front();
  maybe_update(t);
}

bool SubspaceTracker::gate_open(long t) const {
  const long offset = t - t_hat_ + 1;
  return offset > 0 && offset % params_.alpha == 0;
}

void SubspaceTracker::maybe_update(long t) {
  if (buffer_.size() < static_cast<std::size_t>(params_.alpha)) return;
  if (flag_ == TrackerFlag::detect && gate_open(t)) detect_step(t, block_matrix());
  // A detection moves t_hat to the start of this block, so the gate stays
  // open and the first projection-PCA iteration uses the same block.
  if (flag_ == TrackerFlag::ppca && gate_open(t)) ppca_step(t, block_matrix());
}

Eigen::MatrixXd SubspaceTracker::block_matrix() const {
  Eigen::MatrixXd block(buffer_.front().size(), static_cast<Eigen::Index>(buffer_.size()));
  for (std::size_t c = 0; c < buffer_.size(); ++c) block.col(static_cast<Eigen::Index>(c)) = buffer_[c];
  return block;
}

Eigen::MatrixXd SubspaceTracker::projected_block(const Eigen::MatrixXd& block) const {
  Eigen::MatrixXd proj = block;
  if (!settled_.empty()) proj.noalias() -= settled_.P * (settled_.P.transpose() * block);
  return proj / std::sqrt(static_cast<double>(params_.alpha));
}

bool SubspaceTracker::detect_step(long t, const Eigen::MatrixXd& block) {
  const Eigen::MatrixXd proj = projected_block(block);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(proj);
  if (svd.info() != Eigen::Success) throw NumericalError("tracker: SVD failed in detection");
  const Eigen::VectorXd& sv = svd.singularValues();
  const double top = sv.size() ? sv(0) : 0.0;
  const bool detected = sv.size() > 0 && top > sigma_min_;

  TrackerTraceRow row{t, flag_, current_.rank(), k_, top, "no-change"};
  if (detected) {
    flag_ = TrackerFlag::ppca;
    ++j_;
    ++detections_;
    t_hat_ = t - params_.alpha + 1;
    k_ = 1;
    recent_new_.clear();
    recent_new_.emplace_back(block.rows(), 0);
    row.flag = flag_;
    row.k = k_;
    row.event = "detect";
  }
  trace_.push_back(row);
  return detected;
}

double SubspaceTracker::stopping_ratio(const Eigen::MatrixXd& prev, const Eigen::MatrixXd& next,
                                       const Eigen::MatrixXd& block) const {
  const Eigen::VectorXd total = block.rowwise().sum();
  Eigen::VectorXd prev_part = Eigen::VectorXd::Zero(total.size());
  if (prev.cols() > 0) prev_part = prev * (prev.transpose() * total);
  Eigen::VectorXd next_part = Eigen::VectorXd::Zero(total.size());
  if (next.cols() > 0) next_part = next * (next.transpose() * total);
  const double denom = prev_part.norm();
  if (denom <= 1e-12) return 0.0;
  return (prev_part - next_part).norm() / denom;
}

void SubspaceTracker::rebuild_current(const Eigen::MatrixXd& new_dirs, const Eigen::VectorXd& new_sv) {
  const Eigen::MatrixXd ortho = orthonormalize_against(settled_.P, new_dirs);
  current_.P.resize(settled_.dim(), settled_.rank() + ortho.cols());
  current_.P << settled_.P, ortho;
  current_.singular_values.resize(settled_.rank() + ortho.cols());
  current_.singular_values << settled_.singular_values, new_sv.head(ortho.cols());
}

bool SubspaceTracker::ppca_step(long t, const Eigen::MatrixXd& block) {
  const Eigen::MatrixXd proj = projected_block(block);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(proj, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) throw NumericalError("tracker: SVD failed in projection-PCA");
  const Eigen::VectorXd& sv = svd.singularValues();
  Eigen::Index above = 0;
  while (above < sv.size() && sv(above) > sigma_min_) ++above;
  const Eigen::Index keep = std::min<Eigen::Index>(above, params_.max_new_directions());

  const Eigen::MatrixXd new_dirs = svd.matrixU().leftCols(keep);
  rebuild_current(new_dirs, sv.head(keep));
  recent_new_.push_back(current_.P.rightCols(current_.rank() - settled_.rank()));
  while (recent_new_.size() > 4) recent_new_.pop_front();

  bool stop = k_ >= params_.K_max;
  if (!stop && k_ >= params_.K_min && recent_new_.size() == 4) {
    stop = true;
    for (std::size_t i = 1; i < 4 && stop; ++i) {
      stop = stopping_ratio(recent_new_[i - 1], recent_new_[i], block) < params_.detection_ratio_tol;
    }
  }

  TrackerTraceRow row{t, flag_, current_.rank(), k_, sv.size() ? sv(0) : 0.0, "ppca"};
  if (stop) {
    settled_ = current_;
    flag_ = TrackerFlag::detect;
    recent_new_.clear();
    row.flag = flag_;
    row.event = "ppca-stop";
  } else {
    ++k_;
  }
  trace_.push_back(row);
  return stop;
}

double max_principal_angle(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& basis) {
  if (truth.cols() == 0) return 0.0;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(truth);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(truth.rows(), truth.cols());
  Eigen::MatrixXd residual = Q;
  if (basis.cols() > 0) residual.noalias() -= basis * (basis.transpose() * Q);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  return std::asin(std::min(1.0, svd.singularValues()(0)));
}

}  // namespace reld
