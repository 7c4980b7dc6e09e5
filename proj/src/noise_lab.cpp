#include "reld/noise_lab.hpp"

#include "reld/error.hpp"

#include <cmath>
#include <numbers>

namespace reld {

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gaussian:
      return "gaussian";
    case NoiseKind::salt_pepper:
      return "salt_pepper";
    case NoiseKind::gaussian_plus_salt_pepper:
      return "gaussian_plus_salt_pepper";
  }
  return "gaussian";
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "gaussian") return NoiseKind::gaussian;
  if (s == "salt_pepper") return NoiseKind::salt_pepper;
  if (s == "gaussian_plus_salt_pepper") return NoiseKind::gaussian_plus_salt_pepper;
  throw ConfigError("unknown noise kind '" + s + "'");
}

void NoiseSpec::validate() const {
  if (!(sigma >= 0.0)) throw ArgumentError("noise sigma must be >= 0");
  if (!(sp_fraction >= 0.0 && sp_fraction <= 1.0)) throw ArgumentError("salt-and-pepper fraction must be in [0, 1]");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : engine_(mix_seed(seed, 0)) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

VideoMatrix add_gaussian(const VideoMatrix& video, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ArgumentError("add_gaussian: sigma must be >= 0");
  VideoMatrix out = video;
  if (sigma == 0.0) return out;
  for (Eigen::Index k = 0; k < out.frames(); ++k) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    for (Eigen::Index i = 0; i < out.pixels(); ++i) out.data(i, k) += sigma * rng.gaussian();
  }
  return out;
}

VideoMatrix add_salt_pepper(const VideoMatrix& video, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ArgumentError("add_salt_pepper: fraction must be in [0, 1]");
  VideoMatrix out = video;
  if (fraction == 0.0) return out;
  const double peak = video.geometry.pixel_range_max();
  for (Eigen::Index k = 0; k < out.frames(); ++k) {
    // Separate stream from add_gaussian so combined noise stays independent.
    Rng rng(mix_seed(~seed, static_cast<std::uint64_t>(k)));
    for (Eigen::Index i = 0; i < out.pixels(); ++i) {
      const double u = rng.uniform();
      if (u < fraction) out.data(i, k) = (u < 0.5 * fraction) ? 0.0 : peak;
    }
  }
  return out;
}

VideoMatrix apply_noise(const VideoMatrix& video, const NoiseSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case NoiseKind::gaussian:
      return add_gaussian(video, spec.sigma, spec.seed);
    case NoiseKind::salt_pepper:
      return add_salt_pepper(video, spec.sp_fraction, spec.seed);
    case NoiseKind::gaussian_plus_salt_pepper:
      return add_salt_pepper(add_gaussian(video, spec.sigma, spec.seed), spec.sp_fraction, spec.seed);
  }
  return video;
}

SparseBoundedSplit split_bounded_sparse(const Eigen::Ref<const Eigen::VectorXd>& x, double b0) {
  if (!(b0 >= 0.0)) throw ArgumentError("split_bounded_sparse: b0 must be >= 0");
  SparseBoundedSplit out;
  out.b0 = b0;
  out.s = Eigen::VectorXd::Zero(x.size());
  out.w = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x(i)) > b0) {
      out.s(i) = x(i);
      out.support.push_back(i);
    } else {
      out.w(i) = x(i);
    }
  }
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double predicted_sparse_fraction(double b0, double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("predicted_sparse_fraction: sigma must be > 0");
  if (!(b0 >= 0.0)) throw ArgumentError("predicted_sparse_fraction: b0 must be >= 0");
  // 1 - beta(z) = 2 (1 - Phi(z)) = erfc(z / sqrt 2)
  return std::erfc(b0 / sigma / std::numbers::sqrt2);
}

}  // namespace reld
