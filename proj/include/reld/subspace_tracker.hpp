#pragma once

#include "reld/pcp.hpp"

#include <Eigen/Dense>

#include <deque>
#include <string>
#include <vector>

namespace reld {

struct TrackerParams {
  /// Frames per update block.
  int alpha = 20;
  int K_min = 3;
  int K_max = 10;
  /// Stopping threshold on the relative change of successive new-direction
  /// estimates.
  double detection_ratio_tol = 0.01;

  void validate() const;
  /// At most floor(alpha / 3) directions are added per projection-PCA step.
  int max_new_directions() const { return alpha / 3; }
};

enum class TrackerFlag { detect, ppca };

std::string to_string(TrackerFlag flag);

/// One row of the optional per-block trace.
struct TrackerTraceRow {
  long t = 0;
  TrackerFlag flag = TrackerFlag::detect;  // flag after the update
  Eigen::Index rank = 0;                   // basis rank after the update
  int k = 0;
  double top_singular_value = 0.0;
  std::string event;  // "detect", "no-change", "ppca", "ppca-stop"
};

/// Detect / projection-PCA subspace update run every alpha frames.
///
/// Frame times are 1-based, as in the gating rule mod(t - t_hat_j + 1, alpha) = 0.
/// A change is detected when the projected, 1/sqrt(alpha)-scaled block of
/// debiased low-rank estimates has a singular value above sigma_min. The
/// next K_min..K_max blocks then re-estimate the new directions, stopping
/// once three consecutive estimates agree to `detection_ratio_tol`.
class SubspaceTracker {
 public:
  /// `initial_time` is t0: the first block ends at t0 + alpha - 1.
  SubspaceTracker(SubspaceBasis initial, double sigma_min, long initial_time, TrackerParams params);

  /// Appends l_star (the estimate for frame t) to the block buffer and runs
  /// the update when the gate for the current flag opens. Frames must be
  /// pushed in order.
  void push(long t, const Eigen::Ref<const Eigen::VectorXd>& l_star);

  /// True when frame t closes a block for the current change time.
  bool gate_open(long t) const;

  /// Runs the gated update for frame t with the buffered block. The detect
  /// branch runs first; when it fires, the projection-PCA branch runs on the
  /// same block within the same call.
  void maybe_update(long t);

  /// Detection test on `block` (n x alpha). Returns true on a detection.
  bool detect_step(long t, const Eigen::MatrixXd& block);
  /// One projection-PCA iteration on `block`. Returns true when it stopped.
  bool ppca_step(long t, const Eigen::MatrixXd& block);

  const SubspaceBasis& basis() const { return current_; }
  /// Basis as of the last completed change, P_(j).
  const SubspaceBasis& settled_basis() const { return settled_; }
  TrackerFlag flag() const { return flag_; }
  double sigma_min() const { return sigma_min_; }
  int change_count() const { return j_; }
  int ppca_iteration() const { return k_; }
  long change_time() const { return t_hat_; }
  const TrackerParams& params() const { return params_; }
  std::size_t buffered() const { return buffer_.size(); }
  const std::vector<TrackerTraceRow>& trace() const { return trace_; }
  int detections() const { return detections_; }

 private:
  Eigen::MatrixXd block_matrix() const;
  Eigen::MatrixXd projected_block(const Eigen::MatrixXd& block) const;
  double stopping_ratio(const Eigen::MatrixXd& prev, const Eigen::MatrixXd& next, const Eigen::MatrixXd& block) const;
  void rebuild_current(const Eigen::MatrixXd& new_dirs, const Eigen::VectorXd& new_sv);

  TrackerParams params_;
  SubspaceBasis settled_;
  SubspaceBasis current_;
  double sigma_min_;
  TrackerFlag flag_ = TrackerFlag::detect;
  int j_ = 0;
  int k_ = 0;
  long t_hat_;
  int detections_ = 0;
  std::deque<Eigen::VectorXd> buffer_;
  // New-direction estimates P_new,k-3 .. P_new,k for the stopping rule.
  // Entry 0 of a change is the empty basis.
  std::deque<Eigen::MatrixXd> recent_new_;
  std::vector<TrackerTraceRow> trace_;
};

/// Largest principal angle (radians) between span(truth) and span(basis):
/// asin ||(I - B B^T) Q||_2 where Q orthonormalizes `truth`. Zero when the
/// tracked subspace contains the true one.
double max_principal_angle(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& basis);

}  // namespace reld
