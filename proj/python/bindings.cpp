// Python bindings over the core operations: conversion, resizing, metrics,
// the schedule-free optimizer and the training harness.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "malimg/binimg/convert.hpp"
#include "malimg/binimg/dex.hpp"
#include "malimg/binimg/resize.hpp"
#include "malimg/harness/ablate.hpp"
#include "malimg/harness/config.hpp"
#include "malimg/harness/synth.hpp"
#include "malimg/harness/train.hpp"
#include "malimg/metrics/metrics.hpp"
#include "malimg/opt/schedule_free.hpp"

namespace py = pybind11;
using namespace malimg;

namespace {

py::array_t<double> image_to_array(const binimg::ImageTensor& img) {
  py::array_t<double> out({img.channels, img.height, img.width});
  std::memcpy(out.mutable_data(), img.data.data(), img.data.size() * sizeof(double));
  return out;
}

binimg::ImageTensor array_to_image(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  require(a.ndim() == 2 || a.ndim() == 3, Errc::ShapeError, "expected (H,W) or (K,H,W) array");
  binimg::ImageTensor img;
  if (a.ndim() == 2) {
    img.channels = 1;
    img.height = static_cast<int>(a.shape(0));
    img.width = static_cast<int>(a.shape(1));
  } else {
    img.channels = static_cast<int>(a.shape(0));
    img.height = static_cast<int>(a.shape(1));
    img.width = static_cast<int>(a.shape(2));
  }
  img.data.assign(a.data(), a.data() + a.size());
  return img;
}

std::span<const uint8_t> bytes_view(const py::bytes& b) {
  char* buf = nullptr;
  Py_ssize_t len = 0;
  if (PyBytes_AsStringAndSize(b.ptr(), &buf, &len) != 0) throw py::error_already_set();
  return {reinterpret_cast<const uint8_t*>(buf), static_cast<size_t>(len)};
}

py::dict range_dict(const binimg::ByteRange& r) {
  py::dict d;
  d["begin"] = r.begin;
  d["end"] = r.end;
  return d;
}

py::dict report_dict(const metrics::MetricsReport& r) {
  py::dict d;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f1"] = r.f1;
  d["auc"] = r.auc;
  d["p_macro"] = r.p_macro;
  d["r_macro"] = r.r_macro;
  d["f1_macro"] = r.f1_macro;
  d["auc_macro"] = r.auc_macro;
  d["mean_loss"] = r.mean_loss;
  d["example_count"] = r.example_count;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Malware-image classification toolkit (C++ core)";

  py::register_exception<Error>(m, "MalimgError");

  m.def(
      "parse_dex",
      [](const py::bytes& data) {
        const auto map = binimg::parse_dex(bytes_view(data));
        py::dict d;
        d["header"] = range_dict(map.header);
        d["identifiers"] = range_dict(map.identifiers);
        d["class_defs"] = range_dict(map.class_defs);
        d["data"] = range_dict(map.data);
        d["file_len"] = map.file_len;
        return d;
      },
      py::arg("data"), "Parse a DEX header into its section map");

  m.def(
      "convert",
      [](const py::bytes& data, int channels, int size) {
        const auto result =
            binimg::convert(bytes_view(data), channels, binimg::WidthRule::standard(), size);
        py::dict meta;
        meta["file_len"] = result.file_len;
        meta["grid_width"] = result.grid_width;
        meta["dex_fallback"] = result.dex_fallback;
        meta["is_dex"] = result.sections.has_value();
        return py::make_tuple(image_to_array(result.image), meta);
      },
      py::arg("data"), py::arg("channels") = 1, py::arg("size") = 256,
      "Bytes -> (image array (K,size,size), metadata dict)");

  m.def(
      "lanczos_resize",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img, int out_h,
         int out_w) { return image_to_array(binimg::lanczos_resize(array_to_image(img), out_h, out_w)); },
      py::arg("image"), py::arg("out_h"), py::arg("out_w"),
      "Separable Lanczos-3 resize of an (H,W) or (K,H,W) array in [0,1]");

  m.def(
      "macro_metrics",
      [](const std::vector<int>& preds, const std::vector<int>& truths, int num_classes) {
        const auto cm = metrics::confusion(preds, truths, num_classes);
        const auto prf = metrics::macro_prf(cm);
        py::dict d;
        d["precision"] = prf.precision;
        d["recall"] = prf.recall;
        d["f1"] = prf.f1;
        d["p_macro"] = prf.p_macro;
        d["r_macro"] = prf.r_macro;
        d["f1_macro"] = prf.f1_macro;
        return d;
      },
      py::arg("preds"), py::arg("truths"), py::arg("num_classes"),
      "Macro precision/recall/F1 from predicted and true labels");

  m.def(
      "macro_auc",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& scores,
         const std::vector<int>& truths) {
        require(scores.ndim() == 2, Errc::ShapeError, "scores must be (N, C)");
        const int C = static_cast<int>(scores.shape(1));
        const std::span<const double> flat{scores.data(), static_cast<size_t>(scores.size())};
        const auto res = metrics::macro_auc(flat, truths, C);
        py::dict d;
        d["auc"] = res.auc;
        d["contributes"] = res.contributes;
        d["auc_macro"] = res.auc_macro;
        return d;
      },
      py::arg("scores"), py::arg("truths"),
      "One-vs-rest macro AUC from an (N, C) score matrix");

  py::class_<opt::SfHyper>(m, "SfHyper")
      .def(py::init([](double lr, double weight_decay, long warmup_steps, double beta1,
                       double beta2, double eps) {
             opt::SfHyper h{lr, weight_decay, warmup_steps, beta1, beta2, eps};
             h.validate();
             return h;
           }),
           py::arg("lr") = 0.005, py::arg("weight_decay") = 0.0, py::arg("warmup_steps") = 0,
           py::arg("beta1") = 0.9, py::arg("beta2") = 0.999, py::arg("eps") = 1e-8)
      .def_readonly("lr", &opt::SfHyper::lr)
      .def_readonly("warmup_steps", &opt::SfHyper::warmup_steps);

  py::class_<opt::SfState>(m, "ScheduleFreeAdamW")
      .def(py::init([](const std::vector<double>& theta0) { return opt::sf_init(theta0); }),
           py::arg("theta0"))
      .def(
          "step",
          [](opt::SfState& s, const std::vector<double>& grad, const opt::SfHyper& h) {
            opt::sf_step(s, grad, h);
          },
          py::arg("grad"), py::arg("hyper"),
          "One update; the gradient must be evaluated at eval_point()")
      .def(
          "eval_point",
          [](const opt::SfState& s, const opt::SfHyper& h) { return opt::sf_eval_point(s, h); },
          py::arg("hyper"), "y = (1-beta1) z + beta1 x, the gradient point")
      .def_property_readonly("x", [](const opt::SfState& s) { return s.x; })
      .def_property_readonly("z", [](const opt::SfState& s) { return s.z; })
      .def_property_readonly("t", [](const opt::SfState& s) { return s.step_count; });

  m.def(
      "generate_corpus",
      [](const std::string& out_dir, int classes, int train, int val, int test, int size,
         int channels, uint64_t seed) {
        harness::SynthSpec spec{classes, train, val, test, size, channels, seed};
        return harness::generate_corpus(spec, out_dir);
      },
      py::arg("out_dir"), py::arg("classes") = 5, py::arg("train") = 200, py::arg("val") = 40,
      py::arg("test") = 40, py::arg("size") = 64, py::arg("channels") = 1, py::arg("seed") = 7,
      "Write the synthetic DEX-texture corpus; returns the image count");

  m.def(
      "train",
      [](const std::string& config_json, const std::string& out_dir) {
        const auto cfg = harness::RunConfig::from_json(nlohmann::json::parse(config_json));
        const auto index = harness::ingest(cfg.data_root);
        const auto tr = harness::train_run(cfg, index, out_dir);
        py::dict d;
        d["best_epoch"] = tr.best_epoch;
        d["checkpoint"] = tr.checkpoint_path;
        d["history"] = tr.history_path;
        d["val"] = report_dict(tr.best_val);
        return d;
      },
      py::arg("config_json"), py::arg("out_dir"),
      "Run one training configuration (config as a JSON string)");

  m.def(
      "evaluate",
      [](const std::string& checkpoint, const std::string& data_root, const std::string& split) {
        const auto index = harness::ingest(data_root);
        return report_dict(harness::evaluate_checkpoint(checkpoint, index, split));
      },
      py::arg("checkpoint"), py::arg("data_root"), py::arg("split") = "test",
      "Evaluate a checkpoint on one split");
}
