#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kfvio/core/error.hpp"
#include "kfvio/framecodec/codec.hpp"
#include "kfvio/geometry/so3.hpp"
#include "kfvio/pipeline/run.hpp"

namespace py = pybind11;
using namespace kfvio;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Frame to_frame(const U8Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D uint8 array");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  return Frame(w, h, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

U8Array to_array(const Frame& f) {
  U8Array out({f.height(), f.width()});
  std::copy(f.pixels().begin(), f.pixels().end(), out.mutable_data());
  return out;
}

py::array_t<double> trajectory_array(const std::vector<TrajectorySample>& traj) {
  py::array_t<double> out({static_cast<py::ssize_t>(traj.size()), py::ssize_t{11}});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const KFState& x = traj[i].state;
    const Eigen::Quaterniond q = to_quaternion(x.rotation);
    const double row[11] = {static_cast<double>(traj[i].timestamp_ns) * 1e-9,
                            x.position.x(), x.position.y(), x.position.z(), q.w(), q.x(), q.y(), q.z(),
                            x.velocity.x(), x.velocity.y(), x.velocity.z()};
    for (int c = 0; c < 11; ++c) m(static_cast<py::ssize_t>(i), c) = row[c];
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the kfvio keyframe VIO library";
  static py::exception<Error> error(m, "KfvioError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<PipelineConfig>(m, "Config")
      .def(py::init<>())
      .def_static("from_yaml", &parse_pipeline_config, py::arg("text"))
      .def_static("from_file", [](const std::string& path) { return load_pipeline_config(path); }, py::arg("path"))
      .def_static("preset", &adaptation_preset, py::arg("name"))
      .def_property("stereo", [](const PipelineConfig& c) { return c.stereo; },
                    [](PipelineConfig& c, bool v) { c.stereo = v; })
      .def_property("features_per_frame", [](const PipelineConfig& c) { return c.vfe.max_features; },
                    [](PipelineConfig& c, int v) { c.vfe.max_features = v; })
      .def_property("horizon", [](const PipelineConfig& c) { return c.backend.horizon; },
                    [](PipelineConfig& c, int v) { c.backend.horizon = v; })
      .def_property("feature_age", [](const PipelineConfig& c) { return c.backend.feature_age; },
                    [](PipelineConfig& c, int v) { c.backend.feature_age = v; })
      .def_property("compression", [](const PipelineConfig& c) { return c.vfe.compression; },
                    [](PipelineConfig& c, bool v) { c.vfe.compression = v; })
      .def_property("kf_policy", [](const PipelineConfig& c) { return c.keyframes.str(); },
                    [](PipelineConfig& c, const std::string& v) { c.keyframes = KeyframePolicy::parse(v); })
      .def_property(
          "frontend", [](const PipelineConfig& c) { return c.frontend == FrontendKind::kImage ? "image" : "oracle"; },
          [](PipelineConfig& c, const std::string& v) {
            if (v != "image" && v != "oracle") throw py::value_error("frontend must be 'image' or 'oracle'");
            c.frontend = v == "image" ? FrontendKind::kImage : FrontendKind::kOracle;
          })
      .def_property("seed", [](const PipelineConfig& c) { return c.seed; },
                    [](PipelineConfig& c, std::uint64_t v) { c.seed = v; })
      .def("validate", [](PipelineConfig& c) {
        c.sync();
        c.validate();
      });

  m.def("preset_names", &adaptation_preset_names);

  m.def(
      "run",
      [](PipelineConfig config, const std::string& dataset, std::optional<std::size_t> max_frames) {
        config.sync();
        config.validate();
        DatasetHandle data = open_dataset(dataset);
        RunReport report;
        {
          py::gil_scoped_release release;
          report = run_sequence(config, *data.sequence, data.synthetic, {max_frames});
        }
        report.dataset = data.name;
        return py::make_tuple(report_json(report), trajectory_array(report.trajectory));
      },
      py::arg("config"), py::arg("dataset"), py::arg("max_frames") = py::none(),
      "Runs the pipeline; returns (report JSON text, N x 11 trajectory array).");

  m.def(
      "model_report",
      [](PipelineConfig config) {
        config.sync();
        RunReport r;
        r.config = config;
        r.model = model_report(config);
        return py::make_tuple(format_model_report(r.model), report_json(r));
      },
      py::arg("config"));

  m.def(
      "backend_macs",
      [](int features, int horizon, int feature_age, bool stereo) {
        return backend_mac_model(features, horizon, feature_age, stereo).total();
      },
      py::arg("features"), py::arg("horizon"), py::arg("feature_age") = 10, py::arg("stereo") = true);

  m.def("encode", [](const U8Array& a) {
    const auto bytes = serialize(encode_frame(to_frame(a)));
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });
  m.def("decode", [](const py::bytes& b) {
    const std::string s = b;
    const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
    return to_array(decode_frame(deserialize({p, s.size()})));
  });
  m.def("btc_roundtrip", [](const U8Array& a, int block, int bits) { return to_array(btc_roundtrip(to_frame(a), block, bits)); },
        py::arg("image"), py::arg("block") = 4, py::arg("bits") = 5);
  m.def("btc_bits_per_pixel", &btc_bits_per_pixel, py::arg("block"), py::arg("bits"));

  m.def("so3_exp", &so3_exp, py::arg("omega"));
  m.def("so3_log", &so3_log, py::arg("rotation"));
}
