#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "rainmamba/blocks.hpp"
#include "rainmamba/cli.hpp"
#include "rainmamba/contrastive.hpp"
#include "rainmamba/losses.hpp"
#include "rainmamba/metrics.hpp"
#include "rainmamba/sfc.hpp"
#include "rainmamba/ssm.hpp"

namespace py = pybind11;
using namespace rainmamba;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

VideoTensor to_video(const Array& a) {
  if (a.ndim() != 4) throw Error("expected a (C, T, H, W) array");
  const auto* p = a.data();
  return VideoTensor(a.shape(0), a.shape(1), a.shape(2), a.shape(3),
                     std::vector<double>(p, p + a.size()));
}

Array from_video(const VideoTensor& v) {
  Array out({v.channels(), v.time(), v.height(), v.width()});
  std::copy(v.values().begin(), v.values().end(), out.mutable_data());
  return out;
}

SequenceTensor to_seq(const Array& a) {
  if (a.ndim() != 2) throw Error("expected a (channels, length) array");
  const auto* p = a.data();
  return SequenceTensor(a.shape(0), a.shape(1), std::vector<double>(p, p + a.size()));
}

Array from_seq(const SequenceTensor& s) {
  Array out({s.channels(), s.length()});
  std::copy(s.values().begin(), s.values().end(), out.mutable_data());
  return out;
}

std::vector<double> flat(const Array& a) { return {a.data(), a.data() + a.size()}; }

sfc::ScanOrder order_for(std::size_t T, std::size_t H, std::size_t W, const std::string& curve,
                         const std::string& direction) {
  if (curve == "zigzag") return sfc::zigzag_order(T, H, W);
  if (curve == "hilbert") return sfc::hilbert_order_3d(T, H, W, sfc::parse_direction(direction));
  throw Error("curve must be 'zigzag' or 'hilbert'");
}

ssm::LtiParams<double> lti_from(const Array& a, const Array& b, const Array& c, const Array& delta) {
  if (a.ndim() != 2) throw Error("a must be (channels, state)");
  ssm::LtiParams<double> p{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                           flat(a), flat(b), flat(c), flat(delta)};
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Scan orders, selective state-space kernels, the deraining forward pass and metrics";
  py::register_exception<Error>(m, "RainMambaError", PyExc_ValueError);

  m.def("scan_order",
        [](std::size_t T, std::size_t H, std::size_t W, const std::string& curve, const std::string& direction) {
          const auto o = order_for(T, H, W, curve, direction);
          py::array_t<std::uint64_t> perm(o.perm.size());
          std::copy(o.perm.begin(), o.perm.end(), perm.mutable_data());
          return perm;
        },
        py::arg("T"), py::arg("H"), py::arg("W"), py::arg("curve") = "hilbert", py::arg("direction") = "time",
        "Row-major voxel id visited at each sequence position.");

  m.def("locality_report",
        [](std::size_t T, std::size_t H, std::size_t W, const std::string& curve, const std::string& direction,
           std::uint64_t samples, std::uint64_t seed) {
          const auto o = order_for(T, H, W, curve, direction);
          const auto mode = samples == 0 ? sfc::LocalityMode::Exhaustive() : sfc::LocalityMode::Sampled(samples, seed);
          const auto r = sfc::locality_report(o, mode);
          py::list hist;
          for (const auto& b : r.histogram) hist.append(py::make_tuple(b.lo, b.hi, b.count));
          py::dict d;
          d["max_slr"] = r.max_slr;
          d["mean_slr_adjacent"] = r.mean_slr_adjacent;
          d["mean_index_gap_spatial"] = r.mean_index_gap_spatial;
          d["mean_index_gap_temporal"] = r.mean_index_gap_temporal;
          d["mean_index_gap_all"] = r.mean_index_gap_all;
          d["evaluated_pairs"] = r.evaluated_pairs;
          d["histogram"] = hist;
          return d;
        },
        py::arg("T"), py::arg("H"), py::arg("W"), py::arg("curve") = "hilbert", py::arg("direction") = "time",
        py::arg("samples") = 0, py::arg("seed") = 0, "samples=0 evaluates every pair.");

  m.def("flatten",
        [](const Array& x, const std::string& curve, const std::string& direction) {
          const auto v = to_video(x);
          return from_seq(sfc::flatten(v, order_for(v.time(), v.height(), v.width(), curve, direction)));
        },
        py::arg("x"), py::arg("curve") = "hilbert", py::arg("direction") = "time");

  m.def("unflatten",
        [](const Array& s, std::size_t T, std::size_t H, std::size_t W, const std::string& curve,
           const std::string& direction) {
          return from_video(sfc::unflatten(to_seq(s), order_for(T, H, W, curve, direction)));
        },
        py::arg("s"), py::arg("T"), py::arg("H"), py::arg("W"), py::arg("curve") = "hilbert",
        py::arg("direction") = "time");

  m.def("scan_recurrent",
        [](const Array& a, const Array& b, const Array& c, const Array& delta, const Array& x) {
          const auto p = lti_from(a, b, c, delta);
          return from_seq(ssm::scan_recurrent<double>(ssm::discretize_zoh(p), p.c, to_seq(x)));
        },
        py::arg("a"), py::arg("b"), py::arg("c"), py::arg("delta"), py::arg("x"),
        "Recurrent form of a diagonal LTI system; a, b, c are (channels, state).");

  m.def("scan_convolution",
        [](const Array& a, const Array& b, const Array& c, const Array& delta, const Array& x) {
          const auto p = lti_from(a, b, c, delta);
          const auto seq = to_seq(x);
          return from_seq(ssm::convolve(seq, ssm::build_kernel(p, seq.length())));
        },
        py::arg("a"), py::arg("b"), py::arg("c"), py::arg("delta"), py::arg("x"));

  m.def("ssm_check",
        [](std::uint64_t seed) {
          cli::SsmCheckOptions opt;
          opt.seed = seed;
          const auto r = cli::run_ssm_check(opt);
          py::dict d;
          d["equivalence_max_rel_err"] = r.equivalence_max_rel_err;
          d["equivalence_max_rel_err_f32"] = r.equivalence_max_rel_err_f32;
          d["gradient_max_rel_err"] = r.gradient_max_rel_err;
          d["selective_max_abs_diff"] = r.selective_max_abs_diff;
          d["pass"] = r.pass();
          return d;
        },
        py::arg("seed") = 0);

  m.def("derain",
        [](const Array& frames, std::uint64_t seed, const std::map<std::string, std::string>& config) {
          cli::KeyValues kv(config.begin(), config.end());
          const auto model = blocks::RainMambaModel::random(cli::model_config_from(kv), seed);
          const auto input = to_video(frames);
          py::gil_scoped_release release;
          auto out = blocks::model_forward(input, model);
          py::gil_scoped_acquire acquire;
          return from_video(out);
        },
        py::arg("frames"), py::arg("seed") = 0, py::arg("config") = std::map<std::string, std::string>{},
        "Seeded (untrained) model forward pass on a (3, T, H, W) clip.");

  m.def("synthetic_scene",
        [](std::size_t T, std::size_t H, std::size_t W, std::uint64_t seed) {
          Rng rng(seed);
          const auto s = contrastive::synthetic_scene(3, T, H, W, rng);
          py::dict d;
          d["background"] = from_video(s.background);
          d["streaks"] = from_video(s.streaks);
          d["drops"] = from_video(s.drops);
          d["mask"] = from_video(s.mask);
          d["rainy"] = from_video(contrastive::compose_rain(s));
          return d;
        },
        py::arg("T"), py::arg("H"), py::arg("W"), py::arg("seed") = 0);

  m.def("schedule",
        [](double e, double d0, double theta, double d_min, double p0, double p_max, double steps) {
          const auto r = contrastive::schedule(e, {d0, theta, d_min, p0, p_max, steps});
          return py::make_tuple(r.d, r.p);
        },
        py::arg("e"), py::arg("d0") = 64.0, py::arg("theta") = 0.5, py::arg("d_min") = 16.0, py::arg("p0") = 2.0,
        py::arg("p_max") = 8.0, py::arg("m") = 1000.0, "Returns (d, p).");

  m.def("psnr", [](const Array& pred, const Array& gt, double peak) { return metrics::psnr(to_video(pred), to_video(gt), peak); },
        py::arg("pred"), py::arg("gt"), py::arg("peak") = 1.0);
  m.def("ssim", [](const Array& pred, const Array& gt) { return metrics::ssim(to_video(pred), to_video(gt)); },
        py::arg("pred"), py::arg("gt"));
  m.def("charbonnier", [](const Array& pred, const Array& gt) { return losses::charbonnier(to_video(pred), to_video(gt)); },
        py::arg("pred"), py::arg("gt"));

  m.def("run_cli",
        [](std::vector<std::string> args) {
          args.insert(args.begin(), "rainmamba");
          std::ostringstream out, err;
          const int code = cli::dispatch(args, out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a command line in-process; returns (exit_code, stdout, stderr).");
}
