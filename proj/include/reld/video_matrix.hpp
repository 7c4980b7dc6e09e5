#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace reld {

/// Dimensions and intensity range shared by every frame of a sequence.
struct FrameGeometry {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  int bit_depth = 8;

  Eigen::Index pixels() const { return height * width; }
  double pixel_range_max() const { return static_cast<double>((1 << bit_depth) - 1); }

  /// Throws ArgumentError unless height*width > 0 and bit_depth == 8.
  void validate() const;

  bool operator==(const FrameGeometry&) const = default;
};

/// A frame sequence stored as an n x T matrix, one vectorized frame per column.
///
/// Pixels are stored row-major inside a column: pixel (row, col) of frame k
/// lives at data(row * width + col, k). Intensities are kept as unclamped
/// doubles; clamping only happens when frames are written to disk.
struct VideoMatrix {
  FrameGeometry geometry;
  Eigen::MatrixXd data;

  VideoMatrix() = default;
  VideoMatrix(FrameGeometry g, Eigen::MatrixXd d);

  Eigen::Index pixels() const { return data.rows(); }
  Eigen::Index frames() const { return data.cols(); }

  /// Frame k as a height x width row-major image.
  Eigen::MatrixXd frame(Eigen::Index k) const;
  void set_frame(Eigen::Index k, const Eigen::MatrixXd& image);

  /// Columns [first, first + count) as a new sequence.
  VideoMatrix slice(Eigen::Index first, Eigen::Index count) const;
};

/// Row-major flattening of a height x width image into an n-vector.
Eigen::VectorXd vectorize(const Eigen::MatrixXd& image);
/// Inverse of vectorize().
Eigen::MatrixXd devectorize(const Eigen::Ref<const Eigen::VectorXd>& column, const FrameGeometry& g);

// --- PGM (P5) frame IO -------------------------------------------------------

struct GrayImage {
  int height = 0;
  int width = 0;
  int maxval = 255;
  std::vector<std::uint8_t> pixels;  // row-major
};

GrayImage read_pgm(const std::filesystem::path& file);
void write_pgm(const std::filesystem::path& file, const GrayImage& image);

/// File name for frame index k: frame_%05d.pgm.
std::string frame_filename(std::size_t k);

/// Loads every frame_NNNNN.pgm in `dir`, ordered by frame index.
VideoMatrix load_frames(const std::filesystem::path& dir);

/// Writes each column as frame_NNNNN.pgm (starting at index 0), rounding to
/// nearest and clamping to [0, pixel_range_max]. Creates `dir` if needed.
void store_frames(const VideoMatrix& video, const std::filesystem::path& dir);

/// Round-to-nearest then clamp, the exact transform applied by store_frames.
double quantize_pixel(double v, double max_value);

// --- Quality metrics ---------------------------------------------------------

struct PsnrReport {
  /// Per-frame PSNR in dB; +infinity marks a frame with zero MSE.
  std::vector<double> per_frame_db;
  /// Mean over finite frames; +infinity when every frame is exact.
  double mean_db = std::numeric_limits<double>::infinity();
  std::size_t finite_frames = 0;
};

/// Frame-wise 10*log10(peak^2 / MSE) of `test` against `reference`.
PsnrReport psnr(const VideoMatrix& reference, const VideoMatrix& test);

/// Writes `frame,psnr_db` CSV; infinite frames are printed as "inf".
void write_psnr_csv(const PsnrReport& report, const std::filesystem::path& file);

/// Formats a dB value for CSV output, "inf" for the sentinel.
std::string format_db(double db);

/// Per-frame 256-bin histogram equalization.
///
/// Level v maps to floor(255 * cdf(v)), where cdf(v) is the fraction of pixels
/// with intensity <= v. A constant frame therefore maps to 255 and an already
/// uniform histogram is left unchanged. Inputs are rounded and clamped to
/// [0, 255] first.
VideoMatrix hist_equalize(const VideoMatrix& video);

}  // namespace reld
