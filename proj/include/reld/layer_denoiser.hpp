#pragma once

#include "reld/video_matrix.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace reld {

/// Parameters of the block-matching collaborative filter.
struct DenoiserParams {
  int block_size = 8;
  /// Half-width of the spatial search region: candidates are offset by at
  /// most this many pixels from the reference position in each direction.
  int search_window = 16;
  /// Frames searched on each side of the reference frame.
  int temporal_radius = 4;
  int max_group = 16;
  /// Mean squared difference per pixel accepted as a match. denoise_sequence
  /// adds 2 sigma^2, the expected distance between two noisy copies.
  double match_threshold = 400.0;
  double hard_threshold_factor = 2.7;
  /// Spacing of reference blocks on each frame.
  int step = 4;

  void validate() const;
};

/// sigma_fg / sigma_bg passed to the layer denoisers.
struct NoiseEstimate {
  double sigma_fg = 0.0;
  double sigma_bg = 0.0;
};

/// Subtracts each column's mean, then returns the population standard
/// deviation of all entries. Requires at least two columns.
double std_est(const Eigen::MatrixXd& M);

/// Block position inside a sequence.
struct BlockRef {
  Eigen::Index frame = 0;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double distance = 0.0;

  bool operator==(const BlockRef& o) const { return frame == o.frame && row == o.row && col == o.col; }
};

/// Frames of a sequence as row-major images.
using FrameStack = std::vector<Eigen::MatrixXd>;

FrameStack to_frames(const VideoMatrix& video);
VideoMatrix from_frames(const FrameStack& frames, const FrameGeometry& geometry);

/// Finds up to max_group blocks similar to the reference block.
///
/// Candidates lie within search_window pixels of the reference position in
/// frames within temporal_radius of the reference frame. Distance is the mean
/// squared difference per pixel; only candidates with distance <=
/// `threshold` are kept. The reference block is always first; the rest are
/// ordered by distance, ties broken by (frame, row, col).
std::vector<BlockRef> block_match(const FrameStack& frames, const BlockRef& reference, const DenoiserParams& params,
                                  double threshold);
/// Same, with params.match_threshold as the threshold.
std::vector<BlockRef> block_match(const FrameStack& frames, const BlockRef& reference, const DenoiserParams& params);

/// Orthonormal DCT-II matrix of size n (rows are basis vectors).
Eigen::MatrixXd dct_matrix(int n);

/// A stack of equally sized square blocks.
using BlockGroup = std::vector<Eigen::MatrixXd>;

/// Separable orthonormal 3D DCT of a group and its inverse.
BlockGroup forward_dct3(const BlockGroup& group);
BlockGroup inverse_dct3(const BlockGroup& coefficients);

struct FilteredGroup {
  BlockGroup blocks;
  double weight = 1.0;
  int retained = 0;
};

/// Hard-thresholds the 3D DCT of `group` at hard_threshold_factor * sigma.
/// The zero-frequency coefficient is always kept. Aggregation weight is
/// 1 / (1 + retained coefficients).
FilteredGroup collaborative_filter(const BlockGroup& group, double sigma, const DenoiserParams& params);

/// Full grouping and collaborative filtering pass with overlap-add
/// aggregation. Operates on raw reals; nothing is clamped.
VideoMatrix denoise_sequence(const VideoMatrix& video, double sigma, const DenoiserParams& params);

/// Runs an external denoiser executable as `exe <in_dir> <sigma> <out_dir>`
/// on PGM frames and loads its output.
VideoMatrix denoise_external(const VideoMatrix& video, double sigma, const std::string& executable);

}  // namespace reld
