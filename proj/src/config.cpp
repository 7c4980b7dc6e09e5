#include "reld/error.hpp"
#include "reld/pipeline.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace reld {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

using FieldHandlers = std::map<std::string, std::function<void(const json&)>>;

// Applies one handler per key and rejects keys without a handler.
void read_object(const json& j, const std::string& where, const FieldHandlers& handlers) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = handlers.find(key);
    if (it == handlers.end()) throw ConfigError("unknown key '" + key + "' in " + where);
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError("bad value for '" + key + "' in " + where + ": " + e.what());
    }
  }
}

template <class T>
std::function<void(const json&)> assign(T& target) {
  return [&target](const json& v) { target = v.get<T>(); };
}

void read_tracker(const json& j, TrackerParams& p) {
  read_object(j, "tracker", {{"alpha", assign(p.alpha)},
                             {"K_min", assign(p.K_min)},
                             {"K_max", assign(p.K_max)},
                             {"detection_ratio_tol", assign(p.detection_ratio_tol)}});
}

void read_noise(const json& j, NoiseSpec& n) {
  read_object(j, "noise", {{"kind", [&n](const json& v) { n.kind = noise_kind_from_string(v.get<std::string>()); }},
                           {"sigma", assign(n.sigma)},
                           {"sp_fraction", assign(n.sp_fraction)},
                           {"seed", assign(n.seed)}});
}

void read_denoiser(const json& j, DenoiserParams& d) {
  read_object(j, "denoiser", {{"block_size", assign(d.block_size)},
                              {"search_window", assign(d.search_window)},
                              {"temporal_radius", assign(d.temporal_radius)},
                              {"max_group", assign(d.max_group)},
                              {"match_threshold", assign(d.match_threshold)},
                              {"hard_threshold_factor", assign(d.hard_threshold_factor)},
                              {"step", assign(d.step)}});
}

void read_pcp(const json& j, PcpOptions& p) {
  read_object(j, "pcp", {{"lambda", assign(p.lambda)},
                         {"tol", assign(p.tol)},
                         {"max_iter", assign(p.max_iter)},
                         {"mu_scale", assign(p.mu_scale)},
                         {"rho", assign(p.rho)}});
}

void read_l1(const json& j, L1Options& o) {
  read_object(j, "l1", {{"constraint_rel_tol", assign(o.constraint_rel_tol)},
                        {"max_inner_iter", assign(o.max_inner_iter)},
                        {"max_bisection", assign(o.max_bisection)},
                        {"inner_tol", assign(o.inner_tol)}});
}

void read_paths(const json& j, PipelinePaths& p) {
  read_object(j, "paths",
              {{"input", assign(p.input)}, {"output", assign(p.output)}, {"reference", assign(p.reference)}});
}

ordered_json db_value(double db) {
  if (std::isinf(db)) return "inf";
  return db;
}

}  // namespace

PipelineConfig config_from_json_string(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  read_object(root, "config",
              {{"t0", assign(c.t0)},
               {"tracker", [&c](const json& v) { read_tracker(v, c.tracker); }},
               {"basis_energy_percent", assign(c.basis_energy_percent)},
               {"basis_energy",
                [&c](const json& v) { c.basis_energy = energy_measure_from_string(v.get<std::string>()); }},
               {"noise",
                [&c](const json& v) {
                  if (v.is_null()) {
                    c.noise.reset();
                    return;
                  }
                  NoiseSpec n = c.noise.value_or(NoiseSpec{});
                  read_noise(v, n);
                  c.noise = n;
                }},
               {"denoiser", [&c](const json& v) { read_denoiser(v, c.denoiser); }},
               {"output_mode", [&c](const json& v) { c.output_mode = output_mode_from_string(v.get<std::string>()); }},
               {"seed", assign(c.seed)},
               {"paths", [&c](const json& v) { read_paths(v, c.paths); }},
               {"pcp", [&c](const json& v) { read_pcp(v, c.pcp); }},
               {"l1", [&c](const json& v) { read_l1(v, c.l1); }},
               {"std_est_window",
                [&c](const json& v) { c.std_est_window = std_est_window_from_string(v.get<std::string>()); }},
               {"denoise_debiased_layers", assign(c.denoise_debiased_layers)},
               {"external_denoiser", assign(c.external_denoiser)},
               {"dump_init_dir", assign(c.dump_init_dir)}});
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open config " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json_string(buf.str());
}

std::string config_to_json_string(const PipelineConfig& c) {
  ordered_json j;
  j["t0"] = c.t0;
  j["tracker"] = {{"alpha", c.tracker.alpha},
                  {"K_min", c.tracker.K_min},
                  {"K_max", c.tracker.K_max},
                  {"detection_ratio_tol", c.tracker.detection_ratio_tol}};
  j["basis_energy_percent"] = c.basis_energy_percent;
  j["basis_energy"] = to_string(c.basis_energy);
  if (c.noise) {
    j["noise"] = {{"kind", to_string(c.noise->kind)},
                  {"sigma", c.noise->sigma},
                  {"sp_fraction", c.noise->sp_fraction},
                  {"seed", c.noise->seed}};
  } else {
    j["noise"] = nullptr;
  }
  j["denoiser"] = {{"block_size", c.denoiser.block_size},
                   {"search_window", c.denoiser.search_window},
                   {"temporal_radius", c.denoiser.temporal_radius},
                   {"max_group", c.denoiser.max_group},
                   {"match_threshold", c.denoiser.match_threshold},
                   {"hard_threshold_factor", c.denoiser.hard_threshold_factor},
                   {"step", c.denoiser.step}};
  j["output_mode"] = to_string(c.output_mode);
  j["seed"] = c.seed;
  j["paths"] = {{"input", c.paths.input}, {"output", c.paths.output}, {"reference", c.paths.reference}};
  j["pcp"] = {{"lambda", c.pcp.lambda},
              {"tol", c.pcp.tol},
              {"max_iter", c.pcp.max_iter},
              {"mu_scale", c.pcp.mu_scale},
              {"rho", c.pcp.rho}};
  j["l1"] = {{"constraint_rel_tol", c.l1.constraint_rel_tol},
             {"max_inner_iter", c.l1.max_inner_iter},
             {"max_bisection", c.l1.max_bisection},
             {"inner_tol", c.l1.inner_tol}};
  j["std_est_window"] = to_string(c.std_est_window);
  j["denoise_debiased_layers"] = c.denoise_debiased_layers;
  j["external_denoiser"] = c.external_denoiser;
  j["dump_init_dir"] = c.dump_init_dir;
  return j.dump(2);
}

std::string report_to_json_string(const RunReport& r) {
  ordered_json j;
  j["frames"] = r.frames;
  ordered_json phases = ordered_json::object();
  for (const char* name : {"init", "split", "denoise"}) {
    if (const auto it = r.phase_seconds.find(name); it != r.phase_seconds.end()) phases[name] = it->second;
  }
  j["phase_seconds"] = phases;
  j["pcp"] = {{"iterations", r.pcp_iterations}, {"residual", r.pcp_residual}, {"converged", r.pcp_converged}};
  j["tracker"] = {{"initial_rank", r.initial_rank},
                  {"final_rank", r.final_rank},
                  {"sigma_min", r.sigma_min},
                  {"detections", r.detections}};
  j["debias_fallbacks"] = r.debias_fallbacks;
  j["l1_nonconverged"] = r.l1_nonconverged;
  j["sigma_fg"] = r.sigma_fg;
  j["sigma_bg"] = r.sigma_bg;
  if (r.psnr_noisy && r.psnr_denoised) {
    j["psnr"] = {{"noisy_mean_db", db_value(r.psnr_noisy->mean_db)},
                 {"denoised_mean_db", db_value(r.psnr_denoised->mean_db)}};
  }
  return j.dump(2);
}

}  // namespace reld
