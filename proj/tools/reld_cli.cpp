// reld: layering-then-denoising for grayscale PGM frame sequences.

#include "reld/error.hpp"
#include "reld/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace reld;

namespace {

struct CommonFlags {
  std::string config;
  std::string in;
  std::string out;
  std::string ref;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool wants_out = true, bool wants_ref = true) {
  cmd->add_option("--config", f.config, "JSON configuration file");
  cmd->add_option("--in", f.in, "input frame directory (frame_%05d.pgm)");
  if (wants_out) cmd->add_option("--out", f.out, "output directory");
  if (wants_ref) cmd->add_option("--ref", f.ref, "clean reference frame directory for PSNR");
  cmd->add_option("--seed", f.seed, "random seed (overrides the config)");
}

// Defaults, then the config file, then flags.
PipelineConfig resolve(const CommonFlags& f) {
  PipelineConfig c = f.config.empty() ? PipelineConfig{} : load_config(f.config);
  if (!f.in.empty()) c.paths.input = f.in;
  if (!f.out.empty()) c.paths.output = f.out;
  if (!f.ref.empty()) c.paths.reference = f.ref;
  if (f.seed) {
    c.seed = *f.seed;
    if (c.noise) c.noise->seed = *f.seed;
  }
  return c;
}

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw ArgumentError(std::string("missing ") + flag + " (flag or config paths)");
  return value;
}

std::optional<VideoMatrix> maybe_load(const std::string& dir) {
  if (dir.empty()) return std::nullopt;
  return load_frames(dir);
}

// Signed layers are shown through an affine rescale; the others are stored as is.
void store_layer(const VideoMatrix& v, OutputMode mode, const fs::path& dir) {
  const bool is_signed = mode == OutputMode::S_raw || mode == OutputMode::S_denoised;
  store_frames(is_signed ? rescale_for_display(v) : v, dir);
}

void print_summary(const RunReport& r) {
  std::cout << "frames: " << r.frames << '\n';
  if (r.initial_rank > 0) {
    std::cout << "basis rank: " << r.initial_rank << " -> " << r.final_rank << ", detections: " << r.detections
              << '\n';
  }
  if (r.psnr_noisy && r.psnr_denoised) {
    std::cout << "mean PSNR noisy: " << format_db(r.psnr_noisy->mean_db)
              << " dB, output: " << format_db(r.psnr_denoised->mean_db) << " dB\n";
  }
}

int cmd_add_noise(const CommonFlags& f, const std::string& kind, std::optional<double> sigma,
                  std::optional<double> sp) {
  PipelineConfig c = resolve(f);
  NoiseSpec spec = c.noise.value_or(NoiseSpec{});
  if (!kind.empty()) spec.kind = noise_kind_from_string(kind);
  if (sigma) spec.sigma = *sigma;
  if (sp) spec.sp_fraction = *sp;
  if (f.seed) spec.seed = *f.seed;
  spec.validate();
  const VideoMatrix clean = load_frames(require(c.paths.input, "--in"));
  store_frames(apply_noise(clean, spec), require(c.paths.output, "--out"));
  return 0;
}

// With a noise spec in the config, the input is treated as clean: it is
// corrupted first and becomes the PSNR reference unless --ref is given.
std::pair<VideoMatrix, std::optional<VideoMatrix>> load_inputs(const PipelineConfig& c) {
  VideoMatrix input = load_frames(require(c.paths.input, "--in"));
  std::optional<VideoMatrix> reference = maybe_load(c.paths.reference);
  if (c.noise) {
    if (!reference) reference = input;
    input = apply_noise(input, *c.noise);
  }
  return {std::move(input), std::move(reference)};
}

int cmd_decompose(const CommonFlags& f) {
  const PipelineConfig c = resolve(f);
  const auto [noisy, reference] = load_inputs(c);
  const fs::path out = require(c.paths.output, "--out");
  RunReport report;
  const Layering layers = decompose_layers(c, noisy, report);
  store_frames(rescale_for_display(layers.S), out / "S");
  store_frames(layers.L, out / "L");
  emit_report(report, out / "report");
  print_summary(report);
  return 0;
}

int cmd_denoise(const CommonFlags& f) {
  const PipelineConfig c = resolve(f);
  const auto [noisy, reference] = load_inputs(c);
  const fs::path out = require(c.paths.output, "--out");
  const BaselineOutputs result = run_baseline_denoise(c, noisy, reference);
  store_frames(result.denoised, out);
  emit_report(result.report, out / "report");
  print_summary(result.report);
  return 0;
}

int cmd_reld(const CommonFlags& f, const std::string& mode, bool all_layers) {
  PipelineConfig c = resolve(f);
  if (!mode.empty()) c.output_mode = output_mode_from_string(mode);
  const auto [noisy, reference] = load_inputs(c);
  const fs::path out = require(c.paths.output, "--out");
  const ReldOutputs result = run_reld(c, noisy, reference);
  store_layer(result.select(c.output_mode), c.output_mode, out);
  if (all_layers) {
    for (OutputMode m : {OutputMode::S_raw, OutputMode::S_denoised, OutputMode::L_denoised, OutputMode::I_denoised}) {
      store_layer(result.select(m), m, out / "layers" / to_string(m));
    }
  }
  emit_report(result.report, out / "report");
  print_summary(result.report);
  return 0;
}

int cmd_lowlight(const CommonFlags& f) {
  const PipelineConfig c = resolve(f);
  const VideoMatrix frames = load_frames(require(c.paths.input, "--in"));
  const fs::path out = require(c.paths.output, "--out");
  const LowlightOutputs result = run_lowlight(c, frames);
  store_frames(result.S_display, out / "S");
  store_frames(result.hist_eq, out / "hist_eq");
  emit_report(result.report, out / "report");
  print_summary(result.report);
  return 0;
}

int cmd_psnr(const CommonFlags& f, const std::string& csv) {
  const PipelineConfig c = resolve(f);
  const VideoMatrix ref = load_frames(require(c.paths.reference, "--ref"));
  const VideoMatrix test = load_frames(require(c.paths.input, "--in"));
  const PsnrReport r = psnr(ref, test);
  if (!csv.empty()) write_psnr_csv(r, csv);
  std::cout << "mean PSNR: " << format_db(r.mean_db) << " dB over " << r.finite_frames << " finite frames of "
            << r.per_frame_db.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered video denoising: sparse plus low-rank split, then per-layer denoising"};
  app.require_subcommand(1);

  CommonFlags noise_f, decompose_f, denoise_f, reld_f, lowlight_f, psnr_f;
  std::string kind, mode, csv;
  std::optional<double> sigma, sp;
  bool all_layers = false;

  auto* add_noise = app.add_subcommand("add-noise", "corrupt a clean sequence");
  add_common(add_noise, noise_f, true, false);
  add_noise->add_option("--kind", kind, "gaussian, salt_pepper or gaussian_plus_salt_pepper");
  add_noise->add_option("--sigma", sigma, "Gaussian standard deviation");
  add_noise->add_option("--sp-fraction", sp, "fraction of salt-and-pepper pixels");

  auto* decompose = app.add_subcommand("decompose", "write the sparse and low-rank layers only");
  add_common(decompose, decompose_f);
  auto* denoise = app.add_subcommand("denoise", "denoise the sequence directly (baseline)");
  add_common(denoise, denoise_f);
  auto* reld = app.add_subcommand("reld", "layering followed by per-layer denoising");
  add_common(reld, reld_f);
  reld->add_option("--mode", mode, "S_raw, S_denoised, L_denoised or I_denoised");
  reld->add_flag("--all-layers", all_layers, "also write every output layer under <out>/layers");
  auto* lowlight = app.add_subcommand("lowlight", "sparse-layer extraction for dark videos");
  add_common(lowlight, lowlight_f, true, false);
  auto* psnr_cmd = app.add_subcommand("psnr", "per-frame PSNR of --in against --ref");
  add_common(psnr_cmd, psnr_f, false, true);
  psnr_cmd->add_option("--csv", csv, "write per-frame values to this CSV file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*add_noise) return cmd_add_noise(noise_f, kind, sigma, sp);
    if (*decompose) return cmd_decompose(decompose_f);
    if (*denoise) return cmd_denoise(denoise_f);
    if (*reld) return cmd_reld(reld_f, mode, all_layers);
    if (*lowlight) return cmd_lowlight(lowlight_f);
    if (*psnr_cmd) return cmd_psnr(psnr_f, csv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
