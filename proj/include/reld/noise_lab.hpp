#pragma once

#include "reld/video_matrix.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace reld {

enum class NoiseKind { gaussian, salt_pepper, gaussian_plus_salt_pepper };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& s);

/// Synthetic corruption parameters. Identical spec and seed give identical output.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double sigma = 25.0;
  double sp_fraction = 0.08;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Seeded random source: mt19937_64 seeded through SplitMix64.
///
/// Uniform doubles take the top 53 bits of each draw; Gaussian samples use
/// the Box-Muller transform. Both are spelled out here instead of using
/// <random> distributions so the sample stream does not depend on the
/// standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Standard normal.
  double gaussian();

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer, used to derive independent per-frame seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// V + N with N i.i.d. N(0, sigma^2). Not clamped. Frame k draws from the
/// stream seeded with mix_seed(seed, k).
VideoMatrix add_gaussian(const VideoMatrix& video, double sigma, std::uint64_t seed);

/// Replaces each pixel with probability `fraction` by 0 or the peak value
/// with equal odds.
VideoMatrix add_salt_pepper(const VideoMatrix& video, double fraction, std::uint64_t seed);

/// Applies the corruption described by `spec`. For the combined kind the
/// Gaussian component is applied first, then salt-and-pepper.
VideoMatrix apply_noise(const VideoMatrix& video, const NoiseSpec& spec);

/// x = s + w with s holding the entries of magnitude above b0.
struct SparseBoundedSplit {
  Eigen::VectorXd s;
  Eigen::VectorXd w;
  double b0 = 0.0;
  std::vector<Eigen::Index> support;
};

SparseBoundedSplit split_bounded_sparse(const Eigen::Ref<const Eigen::VectorXd>& x, double b0);

/// Standard normal CDF.
double normal_cdf(double z);

/// 2 * (1 - Phi(b0 / sigma)): expected fraction of N(0, sigma^2) entries
/// exceeding b0 in magnitude. Evaluated through erfc so the far tail keeps
/// full relative precision.
double predicted_sparse_fraction(double b0, double sigma);

}  // namespace reld
