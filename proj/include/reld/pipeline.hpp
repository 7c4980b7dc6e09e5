#pragma once

#include "reld/layer_denoiser.hpp"
#include "reld/noise_lab.hpp"
#include "reld/pcp.hpp"
#include "reld/reprocs.hpp"
#include "reld/subspace_tracker.hpp"
#include "reld/video_matrix.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace reld {

enum class OutputMode { S_raw, S_denoised, L_denoised, I_denoised };

std::string to_string(OutputMode mode);
OutputMode output_mode_from_string(const std::string& s);

/// Which frames feed the noise-level estimates of the two layers.
enum class StdEstWindow {
  full,       // every frame, initialization block included
  post_init,  // only frames split online (t > t0)
};

std::string to_string(StdEstWindow window);
StdEstWindow std_est_window_from_string(const std::string& s);

struct PipelinePaths {
  std::string input;
  std::string output;
  std::string reference;
};

struct PipelineConfig {
  int t0 = 50;
  TrackerParams tracker;
  double basis_energy_percent = 90.0;
  EnergyMeasure basis_energy = EnergyMeasure::squared;
  std::optional<NoiseSpec> noise;
  DenoiserParams denoiser;
  OutputMode output_mode = OutputMode::I_denoised;
  std::uint64_t seed = 0;
  PipelinePaths paths;

  PcpOptions pcp;
  L1Options l1;
  StdEstWindow std_est_window = StdEstWindow::full;
  /// Feed the least-squares debiased layers (s_star, l_star) to the
  /// denoisers instead of the raw l1 split.
  bool denoise_debiased_layers = false;
  /// Optional external denoiser executable; empty uses the built-in one.
  std::string external_denoiser;
  /// Dump the initialization layers as frame directories under this path.
  std::string dump_init_dir;

  void validate() const;
};

/// Timings, tracker summary and PSNR table of one run.
struct RunReport {
  Eigen::Index frames = 0;
  std::map<std::string, double> phase_seconds;
  int pcp_iterations = 0;
  double pcp_residual = 0.0;
  bool pcp_converged = true;
  Eigen::Index initial_rank = 0;
  Eigen::Index final_rank = 0;
  double sigma_min = 0.0;
  int detections = 0;
  int debias_fallbacks = 0;
  int l1_nonconverged = 0;
  double sigma_fg = 0.0;
  double sigma_bg = 0.0;
  std::vector<TrackerTraceRow> tracker_trace;
  /// Present only when a reference sequence was supplied.
  std::optional<PsnrReport> psnr_noisy;
  std::optional<PsnrReport> psnr_denoised;
};

/// Raw layers before denoising.
struct Layering {
  VideoMatrix S;        // s_hat per frame (initialization block: PCP sparse part)
  VideoMatrix L;        // m_t - s_hat per frame
  VideoMatrix S_star;   // debiased sparse estimates (initialization block: PCP sparse part)
  VideoMatrix L_star;   // m_t - s_star
  SubspaceBasis final_basis;
  /// Thresholded support of every online frame (entry k is frame t0 + k, 0-based).
  std::vector<SupportSet> supports;
};

struct ReldOutputs {
  VideoMatrix S_raw;
  VideoMatrix S_denoised;
  VideoMatrix L_denoised;
  VideoMatrix I_denoised;
  /// L_raw = noisy - S_raw, kept for inspection.
  VideoMatrix L_raw;
  RunReport report;

  /// The layer selected by `mode`.
  const VideoMatrix& select(OutputMode mode) const;
};

/// Initialization plus online splitting and subspace tracking (no denoising).
Layering decompose_layers(const PipelineConfig& config, const VideoMatrix& noisy, RunReport& report);

/// Full layering-then-denoising pipeline. When `reference` is given the
/// report carries PSNR of the noisy input and of the selected output.
ReldOutputs run_reld(const PipelineConfig& config, const VideoMatrix& noisy,
                     const std::optional<VideoMatrix>& reference = std::nullopt);

struct BaselineOutputs {
  VideoMatrix denoised;
  RunReport report;
};

/// Denoiser applied directly to the noisy sequence with a Std-est sigma.
BaselineOutputs run_baseline_denoise(const PipelineConfig& config, const VideoMatrix& noisy,
                                     const std::optional<VideoMatrix>& reference = std::nullopt);

struct LowlightOutputs {
  VideoMatrix S_raw;
  /// S_raw affinely mapped from [min, max] to [0, 255].
  VideoMatrix S_display;
  VideoMatrix hist_eq;
  RunReport report;
};

LowlightOutputs run_lowlight(const PipelineConfig& config, const VideoMatrix& frames);

/// Affine map of the global [min, max] of `video` onto [0, 255]. A constant
/// sequence maps to 0.
VideoMatrix rescale_for_display(const VideoMatrix& video);

/// Writes `<stem>.csv` (per-frame PSNR) and `<stem>.json` (summary).
/// Without PSNR data the CSV header is just `frame`.
void emit_report(const RunReport& report, const std::filesystem::path& stem);

// --- JSON configuration ---------------------------------------------------------

/// Parses a config JSON document; unknown keys raise ConfigError.
PipelineConfig config_from_json_string(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& file);
std::string config_to_json_string(const PipelineConfig& config);
/// Summary JSON of a report with a fixed key order.
std::string report_to_json_string(const RunReport& report);

}  // namespace reld
