#include "reld/pipeline.hpp"

#include "reld/error.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>

namespace reld {

std::string to_string(OutputMode mode) {
  switch (mode) {
    case OutputMode::S_raw:
      return "S_raw";
    case OutputMode::S_denoised:
      return "S_denoised";
    case OutputMode::L_denoised:
      return "L_denoised";
    case OutputMode::I_denoised:
      return "I_denoised";
  }
  return "I_denoised";
}

OutputMode output_mode_from_string(const std::string& s) {
  if (s == "S_raw") return OutputMode::S_raw;
  if (s == "S_denoised") return OutputMode::S_denoised;
  if (s == "L_denoised") return OutputMode::L_denoised;
  if (s == "I_denoised") return OutputMode::I_denoised;
  throw ConfigError("unknown output_mode '" + s + "'");
}

std::string to_string(StdEstWindow window) { return window == StdEstWindow::full ? "full" : "post_init"; }

StdEstWindow std_est_window_from_string(const std::string& s) {
  if (s == "full") return StdEstWindow::full;
  if (s == "post_init") return StdEstWindow::post_init;
  throw ConfigError("unknown std_est_window '" + s + "'");
}

void PipelineConfig::validate() const {
  if (t0 < 2) throw ConfigError("t0 must be >= 2");
  if (!(basis_energy_percent > 0.0 && basis_energy_percent <= 100.0)) {
    throw ConfigError("basis_energy_percent must be in (0, 100]");
  }
  tracker.validate();
  denoiser.validate();
  if (noise) noise->validate();
}

const VideoMatrix& ReldOutputs::select(OutputMode mode) const {
  switch (mode) {
    case OutputMode::S_raw:
      return S_raw;
    case OutputMode::S_denoised:
      return S_denoised;
    case OutputMode::L_denoised:
      return L_denoised;
    case OutputMode::I_denoised:
      return I_denoised;
  }
  return I_denoised;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

VideoMatrix denoise_layer(const PipelineConfig& config, const VideoMatrix& layer, double sigma) {
  if (!config.external_denoiser.empty()) return denoise_external(layer, sigma, config.external_denoiser);
  return denoise_sequence(layer, sigma, config.denoiser);
}

Eigen::MatrixXd estimation_window(const PipelineConfig& config, const VideoMatrix& layer) {
  if (config.std_est_window == StdEstWindow::post_init && layer.frames() - config.t0 >= 2) {
    return layer.data.rightCols(layer.frames() - config.t0);
  }
  return layer.data;
}

}  // namespace

Layering decompose_layers(const PipelineConfig& config, const VideoMatrix& noisy, RunReport& report) {
  config.validate();
  const Eigen::Index T = noisy.frames();
  const Eigen::Index t0 = config.t0;
  if (T <= t0) {
    throw ArgumentError("sequence has " + std::to_string(T) + " frames; need more than t0 = " + std::to_string(t0));
  }
  report.frames = T;

  // Initialization block.
  auto start = Clock::now();
  const Eigen::MatrixXd M0 = noisy.data.leftCols(t0);
  const PcpResult pcp = pcp_decompose(M0, config.pcp);
  report.pcp_iterations = pcp.iterations;
  report.pcp_residual = pcp.final_residual;
  report.pcp_converged = pcp.converged;
  if (!pcp.converged) {
    std::cerr << "warning: PCP stopped after " << pcp.iterations << " iterations at relative residual "
              << pcp.final_residual << "; using the last iterate\n";
  }
  const SubspaceBasis initial = approx_basis(pcp.L_hat, config.basis_energy_percent, config.basis_energy);
  const double sigma_min = normalized_sigma_min(initial, t0);
  report.initial_rank = initial.rank();
  report.sigma_min = sigma_min;

  Layering layers{noisy, noisy, noisy, noisy, {}, {}};
  layers.S.data.leftCols(t0) = pcp.S_hat;
  layers.S_star.data.leftCols(t0) = pcp.S_hat;
  // The PCP residual goes to the low-rank layer so S + L = M on every frame.
  layers.L.data.leftCols(t0) = M0 - pcp.S_hat;
  layers.L_star.data.leftCols(t0) = layers.L.data.leftCols(t0);

  if (!config.dump_init_dir.empty()) {
    const std::filesystem::path dump(config.dump_init_dir);
    store_frames(VideoMatrix(noisy.geometry, pcp.L_hat), dump / "L0");
    store_frames(rescale_for_display(VideoMatrix(noisy.geometry, pcp.S_hat)), dump / "S0");
  }
  report.phase_seconds["init"] = seconds_since(start);

  // Online splitting and tracking; frame times are 1-based.
  start = Clock::now();
  SubspaceTracker tracker(initial, sigma_min, t0, config.tracker);
  Eigen::VectorXd previous_l = pcp.L_hat.col(t0 - 1);
  tracker.push(t0, previous_l);
  for (Eigen::Index c = t0; c < T; ++c) {
    const FrameSplit split = split_frame(tracker.basis(), previous_l, noisy.data.col(c), config.l1);
    layers.S.data.col(c) = split.s_hat;
    layers.L.data.col(c) = split.l_hat;
    layers.S_star.data.col(c) = split.s_star;
    layers.L_star.data.col(c) = split.l_star;
    layers.supports.push_back(split.support);
    if (!split.debiased) ++report.debias_fallbacks;
    if (!split.l1_converged) ++report.l1_nonconverged;
    previous_l = split.l_hat;
    tracker.push(static_cast<long>(c + 1), split.l_star);
  }
  if (report.debias_fallbacks > 0) {
    std::cerr << "note: least-squares debiasing skipped on " << report.debias_fallbacks
              << " frames (rank-deficient support)\n";
  }
  report.phase_seconds["split"] = seconds_since(start);
  report.final_rank = tracker.basis().rank();
  report.detections = tracker.detections();
  report.tracker_trace = tracker.trace();
  layers.final_basis = tracker.basis();
  return layers;
}

ReldOutputs run_reld(const PipelineConfig& config, const VideoMatrix& noisy,
                     const std::optional<VideoMatrix>& reference) {
  RunReport report;
  Layering layers = decompose_layers(config, noisy, report);

  const VideoMatrix& s_in = config.denoise_debiased_layers ? layers.S_star : layers.S;
  const VideoMatrix& l_in = config.denoise_debiased_layers ? layers.L_star : layers.L;

  const auto start = Clock::now();
  report.sigma_fg = std_est(estimation_window(config, s_in));
  report.sigma_bg = std_est(estimation_window(config, l_in));
  VideoMatrix s_den = denoise_layer(config, s_in, report.sigma_fg);
  VideoMatrix l_den = denoise_layer(config, l_in, report.sigma_bg);
  VideoMatrix i_den(noisy.geometry, s_den.data + l_den.data);
  report.phase_seconds["denoise"] = seconds_since(start);

  ReldOutputs out{std::move(layers.S), std::move(s_den), std::move(l_den), std::move(i_den), std::move(layers.L),
                  std::move(report)};
  if (reference) {
    out.report.psnr_noisy = psnr(*reference, noisy);
    out.report.psnr_denoised = psnr(*reference, out.select(config.output_mode));
  }
  return out;
}

BaselineOutputs run_baseline_denoise(const PipelineConfig& config, const VideoMatrix& noisy,
                                     const std::optional<VideoMatrix>& reference) {
  config.denoiser.validate();
  BaselineOutputs out;
  out.report.frames = noisy.frames();
  const auto start = Clock::now();
  const double sigma = std_est(noisy.data);
  out.report.sigma_bg = sigma;
  out.denoised = denoise_layer(config, noisy, sigma);
  out.report.phase_seconds["denoise"] = seconds_since(start);
  if (reference) {
    out.report.psnr_noisy = psnr(*reference, noisy);
    out.report.psnr_denoised = psnr(*reference, out.denoised);
  }
  return out;
}

VideoMatrix rescale_for_display(const VideoMatrix& video) {
  VideoMatrix out = video;
  const double lo = video.data.minCoeff();
  const double hi = video.data.maxCoeff();
  if (hi > lo) {
    out.data = (video.data.array() - lo) * (255.0 / (hi - lo));
  } else {
    out.data.setZero();
  }
  return out;
}

LowlightOutputs run_lowlight(const PipelineConfig& config, const VideoMatrix& frames) {
  LowlightOutputs out;
  Layering layers = decompose_layers(config, frames, out.report);
  out.S_raw = std::move(layers.S);
  out.S_display = rescale_for_display(out.S_raw);
  out.hist_eq = hist_equalize(frames);
  return out;
}

void emit_report(const RunReport& report, const std::filesystem::path& stem) {
  if (!stem.parent_path().empty()) {
    std::error_code ec;
    std::filesystem::create_directories(stem.parent_path(), ec);
  }
  std::filesystem::path csv = stem;
  csv += ".csv";
  std::ofstream out(csv);
  if (!out) throw IoError("cannot write " + csv.string());
  const bool with_psnr = report.psnr_noisy && report.psnr_denoised;
  out << (with_psnr ? "frame,psnr_noisy_db,psnr_denoised_db\n" : "frame\n");
  for (Eigen::Index k = 0; k < report.frames; ++k) {
    out << k;
    if (with_psnr) {
      const auto i = static_cast<std::size_t>(k);
      out << ',' << format_db(report.psnr_noisy->per_frame_db[i]) << ','
          << format_db(report.psnr_denoised->per_frame_db[i]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + csv.string());

  std::filesystem::path json = stem;
  json += ".json";
  std::ofstream js(json);
  if (!js) throw IoError("cannot write " + json.string());
  js << report_to_json_string(report) << '\n';
  if (!js) throw IoError("write failed for " + json.string());
}

}  // namespace reld
