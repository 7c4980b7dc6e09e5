#include "reld/layer_denoiser.hpp"

#include "reld/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>
#include <tuple>

namespace reld {

void DenoiserParams::validate() const {
  if (block_size <= 0 || search_window <= 0 || temporal_radius < 0 || max_group < 1 || step <= 0) {
    throw ArgumentError("denoiser parameters must be positive");
  }
  if (block_size > search_window) throw ArgumentError("denoiser block_size must not exceed search_window");
  if (!(match_threshold > 0.0) || !(hard_threshold_factor > 0.0)) {
    throw ArgumentError("denoiser thresholds must be positive");
  }
}

double std_est(const Eigen::MatrixXd& M) {
  if (M.cols() < 2) throw ArgumentError("std_est: need at least two columns");
  if (M.rows() == 0) return 0.0;
  const Eigen::RowVectorXd means = M.colwise().mean();
  const Eigen::MatrixXd centered = M.rowwise() - means;
  return std::sqrt(centered.squaredNorm() / static_cast<double>(M.size()));
}

FrameStack to_frames(const VideoMatrix& video) {
  FrameStack frames;
  frames.reserve(static_cast<std::size_t>(video.frames()));
  for (Eigen::Index k = 0; k < video.frames(); ++k) frames.push_back(video.frame(k));
  return frames;
}

VideoMatrix from_frames(const FrameStack& frames, const FrameGeometry& geometry) {
  VideoMatrix out(geometry, Eigen::MatrixXd(geometry.pixels(), static_cast<Eigen::Index>(frames.size())));
  for (std::size_t k = 0; k < frames.size(); ++k) out.set_frame(static_cast<Eigen::Index>(k), frames[k]);
  return out;
}

// --- Block matching ------------------------------------------------------------

std::vector<BlockRef> block_match(const FrameStack& frames, const BlockRef& reference, const DenoiserParams& params,
                                  double threshold) {
  const int bs = params.block_size;
  const auto nframes = static_cast<Eigen::Index>(frames.size());
  if (reference.frame < 0 || reference.frame >= nframes) throw ArgumentError("block_match: bad reference frame");
  const Eigen::MatrixXd& ref_frame = frames[static_cast<std::size_t>(reference.frame)];
  const Eigen::Index H = ref_frame.rows();
  const Eigen::Index W = ref_frame.cols();
  if (reference.row < 0 || reference.col < 0 || reference.row + bs > H || reference.col + bs > W) {
    throw ArgumentError("block_match: reference block outside frame");
  }
  const Eigen::MatrixXd ref_block = ref_frame.block(reference.row, reference.col, bs, bs);
  const double area = static_cast<double>(bs) * bs;
  const double budget = threshold * area;

  std::vector<BlockRef> candidates;
  const Eigen::Index f_lo = std::max<Eigen::Index>(0, reference.frame - params.temporal_radius);
  const Eigen::Index f_hi = std::min<Eigen::Index>(nframes - 1, reference.frame + params.temporal_radius);
  const Eigen::Index r_lo = std::max<Eigen::Index>(0, reference.row - params.search_window);
  const Eigen::Index r_hi = std::min<Eigen::Index>(H - bs, reference.row + params.search_window);
  const Eigen::Index c_lo = std::max<Eigen::Index>(0, reference.col - params.search_window);
  const Eigen::Index c_hi = std::min<Eigen::Index>(W - bs, reference.col + params.search_window);

  for (Eigen::Index f = f_lo; f <= f_hi; ++f) {
    const Eigen::MatrixXd& frame = frames[static_cast<std::size_t>(f)];
    for (Eigen::Index c = c_lo; c <= c_hi; ++c) {
      for (Eigen::Index r = r_lo; r <= r_hi; ++r) {
        if (f == reference.frame && r == reference.row && c == reference.col) continue;
        double sum = 0.0;
        // Column-wise with early exit once the budget is exceeded.
        for (int j = 0; j < bs && sum <= budget; ++j) {
          sum += (frame.col(c + j).segment(r, bs) - ref_block.col(j)).squaredNorm();
        }
        if (sum <= budget) candidates.push_back({f, r, c, sum / area});
      }
    }
  }

  const auto keep = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(params.max_group - 1));
  auto order = [](const BlockRef& a, const BlockRef& b) {
    return std::tie(a.distance, a.frame, a.row, a.col) < std::tie(b.distance, b.frame, b.row, b.col);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                    order);

  std::vector<BlockRef> group;
  group.reserve(keep + 1);
  group.push_back({reference.frame, reference.row, reference.col, 0.0});
  group.insert(group.end(), candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep));
  return group;
}

std::vector<BlockRef> block_match(const FrameStack& frames, const BlockRef& reference, const DenoiserParams& params) {
  return block_match(frames, reference, params, params.match_threshold);
}

// --- Transform -----------------------------------------------------------------

Eigen::MatrixXd dct_matrix(int n) {
  if (n <= 0) throw ArgumentError("dct_matrix: size must be positive");
  Eigen::MatrixXd D(n, n);
  const double nd = static_cast<double>(n);
  for (int k = 0; k < n; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd);
    for (int i = 0; i < n; ++i) D(k, i) = scale * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * nd));
  }
  return D;
}

namespace {

class GroupTransform {
 public:
  GroupTransform(int block_size, int max_group) : block_size_(block_size), spatial_(dct_matrix(block_size)) {
    for (int k = 1; k <= max_group; ++k) along_group_.push_back(dct_matrix(k));
  }

  // Columns of the result are the 2D-transformed blocks, flattened
  // column-major; right-multiplying by D_k^T transforms along the group.
  Eigen::MatrixXd forward(const BlockGroup& group) const {
    const auto k = static_cast<Eigen::Index>(group.size());
    Eigen::MatrixXd coeffs(block_size_ * block_size_, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::MatrixXd t = spatial_ * group[static_cast<std::size_t>(j)] * spatial_.transpose();
      coeffs.col(j) = Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
    }
    return coeffs * group_matrix(k).transpose();
  }

  BlockGroup inverse(const Eigen::MatrixXd& coeffs) const {
    const Eigen::Index k = coeffs.cols();
    const Eigen::MatrixXd planar = coeffs * group_matrix(k);
    BlockGroup out;
    out.reserve(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::Map<const Eigen::MatrixXd> t(planar.col(j).data(), block_size_, block_size_);
      out.push_back(spatial_.transpose() * t * spatial_);
    }
    return out;
  }

 private:
  const Eigen::MatrixXd& group_matrix(Eigen::Index k) const {
    if (k <= static_cast<Eigen::Index>(along_group_.size())) return along_group_[static_cast<std::size_t>(k - 1)];
    extra_ = dct_matrix(static_cast<int>(k));
    return extra_;
  }

  int block_size_;
  Eigen::MatrixXd spatial_;
  std::vector<Eigen::MatrixXd> along_group_;
  mutable Eigen::MatrixXd extra_;
};

int check_group(const BlockGroup& group) {
  if (group.empty()) throw ArgumentError("collaborative filter: empty group");
  const auto bs = group.front().rows();
  for (const auto& b : group) {
    if (b.rows() != bs || b.cols() != bs) throw ShapeError("collaborative filter: blocks must be equal squares");
  }
  return static_cast<int>(bs);
}

FilteredGroup filter_with(const GroupTransform& transform, const BlockGroup& group, double sigma,
                          double threshold_factor) {
  Eigen::MatrixXd coeffs = transform.forward(group);
  const double threshold = threshold_factor * sigma;
  FilteredGroup out;
  out.retained = 0;
  for (Eigen::Index j = 0; j < coeffs.cols(); ++j) {
    for (Eigen::Index i = 0; i < coeffs.rows(); ++i) {
      const bool dc = (i == 0 && j == 0);
      if (!dc && std::abs(coeffs(i, j)) < threshold) {
        coeffs(i, j) = 0.0;
      } else {
        ++out.retained;
      }
    }
  }
  out.blocks = transform.inverse(coeffs);
  out.weight = 1.0 / (1.0 + out.retained);
  return out;
}

}  // namespace

BlockGroup forward_dct3(const BlockGroup& group) {
  const int bs = check_group(group);
  const GroupTransform transform(bs, static_cast<int>(group.size()));
  const Eigen::MatrixXd coeffs = transform.forward(group);
  BlockGroup out;
  for (Eigen::Index j = 0; j < coeffs.cols(); ++j) {
    out.push_back(Eigen::Map<const Eigen::MatrixXd>(coeffs.col(j).data(), bs, bs));
  }
  return out;
}

BlockGroup inverse_dct3(const BlockGroup& coefficients) {
  const int bs = check_group(coefficients);
  const GroupTransform transform(bs, static_cast<int>(coefficients.size()));
  Eigen::MatrixXd coeffs(bs * bs, static_cast<Eigen::Index>(coefficients.size()));
  for (std::size_t j = 0; j < coefficients.size(); ++j) {
    coeffs.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(coefficients[j].data(), bs * bs);
  }
  return transform.inverse(coeffs);
}

FilteredGroup collaborative_filter(const BlockGroup& group, double sigma, const DenoiserParams& params) {
  if (!(sigma >= 0.0)) throw ArgumentError("collaborative filter: sigma must be >= 0");
  const int bs = check_group(group);
  const GroupTransform transform(bs, static_cast<int>(group.size()));
  return filter_with(transform, group, sigma, params.hard_threshold_factor);
}

// --- Full pass -------------------------------------------------------------------

namespace {

std::vector<Eigen::Index> grid_positions(Eigen::Index extent, int block, int step) {
  std::vector<Eigen::Index> pos;
  for (Eigen::Index p = 0; p + block <= extent; p += step) pos.push_back(p);
  if (pos.back() != extent - block) pos.push_back(extent - block);
  return pos;
}

}  // namespace

VideoMatrix denoise_sequence(const VideoMatrix& video, double sigma, const DenoiserParams& params) {
  params.validate();
  if (!(sigma >= 0.0)) throw ArgumentError("denoise_sequence: sigma must be >= 0");
  const int bs = params.block_size;
  const auto& g = video.geometry;
  if (g.height < bs || g.width < bs) throw ShapeError("denoise_sequence: frames smaller than block size");

  const FrameStack frames = to_frames(video);
  FrameStack numerator(frames.size(), Eigen::MatrixXd::Zero(g.height, g.width));
  FrameStack denominator(frames.size(), Eigen::MatrixXd::Zero(g.height, g.width));
  const GroupTransform transform(bs, params.max_group);
  const double threshold = params.match_threshold + 2.0 * sigma * sigma;
  const auto rows = grid_positions(g.height, bs, params.step);
  const auto cols = grid_positions(g.width, bs, params.step);

  BlockGroup group;
  for (Eigen::Index f = 0; f < video.frames(); ++f) {
    for (const Eigen::Index r : rows) {
      for (const Eigen::Index c : cols) {
        const auto matches = block_match(frames, {f, r, c, 0.0}, params, threshold);
        group.clear();
        for (const auto& m : matches) {
          group.push_back(frames[static_cast<std::size_t>(m.frame)].block(m.row, m.col, bs, bs));
        }
        const FilteredGroup filtered = filter_with(transform, group, sigma, params.hard_threshold_factor);
        for (std::size_t i = 0; i < matches.size(); ++i) {
          const auto& m = matches[i];
          const auto fi = static_cast<std::size_t>(m.frame);
          numerator[fi].block(m.row, m.col, bs, bs) += filtered.weight * filtered.blocks[i];
          denominator[fi].block(m.row, m.col, bs, bs).array() += filtered.weight;
        }
      }
    }
  }

  FrameStack out(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) out[k] = numerator[k].cwiseQuotient(denominator[k]);
  return from_frames(out, g);
}

VideoMatrix denoise_external(const VideoMatrix& video, double sigma, const std::string& executable) {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / ("reld_ext_" + std::to_string(std::random_device{}()));
  const fs::path in_dir = base / "in";
  const fs::path out_dir = base / "out";
  fs::create_directories(in_dir);
  fs::create_directories(out_dir);
  store_frames(video, in_dir);
  std::ostringstream cmd;
  cmd << '"' << executable << "\" \"" << in_dir.string() << "\" " << sigma << " \"" << out_dir.string() << '"';
  const int status = std::system(cmd.str().c_str());
  if (status != 0) {
    fs::remove_all(base);
    throw IoError("external denoiser failed with status " + std::to_string(status));
  }
  VideoMatrix result = load_frames(out_dir);
  fs::remove_all(base);
  if (result.geometry != video.geometry || result.frames() != video.frames()) {
    throw ShapeError("external denoiser returned a sequence of a different shape");
  }
  return result;
}

}  // namespace reld
