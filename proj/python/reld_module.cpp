#include "reld/error.hpp"
#include "reld/pipeline.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

namespace py = pybind11;
using namespace reld;

namespace {

using FrameArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (frames, height, width) array <-> VideoMatrix with row-major frames.
VideoMatrix to_video(const FrameArray& a) {
  if (a.ndim() != 3) throw ShapeError("expected an array of shape (frames, height, width)");
  const auto T = static_cast<Eigen::Index>(a.shape(0));
  const auto H = static_cast<Eigen::Index>(a.shape(1));
  const auto W = static_cast<Eigen::Index>(a.shape(2));
  const Eigen::Map<const Eigen::MatrixXd> data(a.data(), H * W, T);
  return VideoMatrix(FrameGeometry{H, W, 8}, data);
}

FrameArray to_array(const VideoMatrix& v) {
  FrameArray a({v.frames(), v.geometry.height, v.geometry.width});
  Eigen::Map<Eigen::MatrixXd>(a.mutable_data(), v.pixels(), v.frames()) = v.data;
  return a;
}

std::optional<VideoMatrix> optional_video(const std::optional<FrameArray>& a) {
  if (!a) return std::nullopt;
  return to_video(*a);
}

py::dict report_dict(const RunReport& r) {
  py::dict d = py::module_::import("json").attr("loads")(report_to_json_string(r));
  if (r.psnr_noisy && r.psnr_denoised) {
    d["psnr_noisy_db"] = r.psnr_noisy->per_frame_db;
    d["psnr_denoised_db"] = r.psnr_denoised->per_frame_db;
  }
  return d;
}

SubspaceBasis basis_from(const Eigen::MatrixXd& P) { return {P, Eigen::VectorXd::Ones(P.cols())}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sparse plus low-rank video layering and per-layer denoising.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ArgumentError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const ShapeError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const IoError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    }
  });

  m.def("default_config", [] { return config_to_json_string(PipelineConfig{}); },
        "Default configuration as a JSON string.");

  m.def("load_frames", [](const std::string& dir) { return to_array(load_frames(dir)); }, py::arg("dir"));
  m.def("store_frames", [](const FrameArray& frames, const std::string& dir) { store_frames(to_video(frames), dir); },
        py::arg("frames"), py::arg("dir"));

  m.def("add_gaussian", [](const FrameArray& v, double sigma, std::uint64_t seed) {
    return to_array(add_gaussian(to_video(v), sigma, seed));
  }, py::arg("frames"), py::arg("sigma"), py::arg("seed") = 0);
  m.def("add_salt_pepper", [](const FrameArray& v, double fraction, std::uint64_t seed) {
    return to_array(add_salt_pepper(to_video(v), fraction, seed));
  }, py::arg("frames"), py::arg("fraction"), py::arg("seed") = 0);

  m.def("psnr", [](const FrameArray& ref, const FrameArray& test) {
    const PsnrReport r = psnr(to_video(ref), to_video(test));
    return py::make_tuple(r.per_frame_db, r.mean_db);
  }, py::arg("reference"), py::arg("test"), "Per-frame PSNR list (inf for exact frames) and finite mean.");
  m.def("hist_equalize", [](const FrameArray& v) { return to_array(hist_equalize(to_video(v))); });

  m.def("pcp_decompose", [](const Eigen::MatrixXd& M, double lambda, double tol, int max_iter) {
    PcpOptions o;
    o.lambda = lambda;
    o.tol = tol;
    o.max_iter = max_iter;
    const PcpResult r = pcp_decompose(M, o);
    py::dict d;
    d["L"] = r.L_hat;
    d["S"] = r.S_hat;
    d["iterations"] = r.iterations;
    d["residual"] = r.final_residual;
    d["converged"] = r.converged;
    d["lambda"] = r.lambda;
    return d;
  }, py::arg("M"), py::arg("lam") = 0.0, py::arg("tol") = 1e-7, py::arg("max_iter") = 500,
     "Principal component pursuit; lam = 0 uses 1/sqrt(max(n, t)).");
  m.def("approx_basis", [](const Eigen::MatrixXd& M, double percent, const std::string& measure) {
    const SubspaceBasis b = approx_basis(M, percent, energy_measure_from_string(measure));
    return py::make_tuple(b.P, b.singular_values);
  }, py::arg("M"), py::arg("energy_percent") = 90.0, py::arg("energy") = "squared",
     "energy is 'squared' (sigma^2) or 'linear' (sigma).");

  m.def("project_perp", [](const Eigen::MatrixXd& P, const Eigen::VectorXd& x) {
    return project_perp(basis_from(P), x);
  }, py::arg("P"), py::arg("x"));
  m.def("solve_l1", [](const Eigen::MatrixXd& P, const Eigen::VectorXd& y, double xi) {
    const L1Result r = solve_l1(basis_from(P), y, xi);
    return py::make_tuple(r.x, r.residual, r.converged);
  }, py::arg("P"), py::arg("y"), py::arg("xi"), "min ||x||_1 s.t. ||y - (I - PP^T) x|| <= xi.");
  m.def("split_frame", [](const Eigen::MatrixXd& P, const Eigen::VectorXd& previous_l, const Eigen::VectorXd& m_t) {
    const FrameSplit f = split_frame(basis_from(P), previous_l, m_t);
    py::dict d;
    d["s_hat"] = f.s_hat;
    d["l_hat"] = f.l_hat;
    d["s_star"] = f.s_star;
    d["l_star"] = f.l_star;
    d["support"] = f.support;
    d["xi"] = f.xi;
    d["omega"] = f.omega;
    d["debiased"] = f.debiased;
    return d;
  }, py::arg("P"), py::arg("previous_l"), py::arg("m"));

  m.def("std_est", [](const Eigen::MatrixXd& M) { return std_est(M); }, py::arg("M"));
  m.def("denoise_sequence", [](const FrameArray& v, double sigma, const std::string& config_json) {
    const PipelineConfig c = config_from_json_string(config_json);
    return to_array(denoise_sequence(to_video(v), sigma, c.denoiser));
  }, py::arg("frames"), py::arg("sigma"), py::arg("config_json") = "{}");

  m.def("run_reld", [](const FrameArray& noisy, const std::string& config_json, std::optional<FrameArray> ref) {
    const PipelineConfig c = config_from_json_string(config_json);
    const ReldOutputs out = run_reld(c, to_video(noisy), optional_video(ref));
    py::dict d;
    d["S_raw"] = to_array(out.S_raw);
    d["S_denoised"] = to_array(out.S_denoised);
    d["L_denoised"] = to_array(out.L_denoised);
    d["I_denoised"] = to_array(out.I_denoised);
    d["L_raw"] = to_array(out.L_raw);
    d["report"] = report_dict(out.report);
    return d;
  }, py::arg("noisy"), py::arg("config_json") = "{}", py::arg("reference") = py::none());
  m.def("run_baseline_denoise", [](const FrameArray& noisy, const std::string& config_json,
                                   std::optional<FrameArray> ref) {
    const PipelineConfig c = config_from_json_string(config_json);
    const BaselineOutputs out = run_baseline_denoise(c, to_video(noisy), optional_video(ref));
    return py::make_tuple(to_array(out.denoised), report_dict(out.report));
  }, py::arg("noisy"), py::arg("config_json") = "{}", py::arg("reference") = py::none());
  m.def("run_lowlight", [](const FrameArray& frames, const std::string& config_json) {
    const PipelineConfig c = config_from_json_string(config_json);
    const LowlightOutputs out = run_lowlight(c, to_video(frames));
    py::dict d;
    d["S_raw"] = to_array(out.S_raw);
    d["S_display"] = to_array(out.S_display);
    d["hist_eq"] = to_array(out.hist_eq);
    d["report"] = report_dict(out.report);
    return d;
  }, py::arg("frames"), py::arg("config_json") = "{}");
}
