#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spdnet/checkpoint.hpp"
#include "spdnet/data.hpp"
#include "spdnet/errors.hpp"
#include "spdnet/gradcheck.hpp"
#include "spdnet/network.hpp"

namespace py = pybind11;
using namespace spdnet;

namespace {

using Frames = py::array_t<double, py::array::c_style | py::array::forcecast>;

GestureSequence to_sequence(const Frames& frames) {
  if (frames.ndim() != 3 || frames.shape(1) != kNumJoints || frames.shape(2) != 3)
    throw InvalidInput("frames must have shape (T, 22, 3)");
  GestureSequence seq;
  const auto f = frames.unchecked<3>();
  for (py::ssize_t t = 0; t < frames.shape(0); ++t) {
    Frame frame(kNumJoints, 3);
    for (int j = 0; j < kNumJoints; ++j)
      for (int k = 0; k < 3; ++k) frame(j, k) = f(t, j, k);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

Frames to_array(const GestureSequence& seq) {
  Frames out({static_cast<py::ssize_t>(seq.frames.size()), py::ssize_t{kNumJoints}, py::ssize_t{3}});
  auto o = out.mutable_unchecked<3>();
  for (std::size_t t = 0; t < seq.frames.size(); ++t)
    for (int j = 0; j < kNumJoints; ++j)
      for (int k = 0; k < 3; ++k) o(static_cast<py::ssize_t>(t), j, k) = seq.frames[t](j, k);
  return out;
}

struct Model {
  NetworkConfig config;
  NetworkParams params;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "SPD-matrix network for skeleton-based hand gesture recognition";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<SpectralDomainError>(m, "SpectralDomainError", PyExc_ArithmeticError);
  py::register_exception<RankError>(m, "RankError", PyExc_ArithmeticError);

  m.def("sym_eig", [](const Matrix& s) {
    const EigenPair e = sym_eig(SymmetricMatrix(s));
    return py::make_tuple(e.values, e.vectors);
  }, py::arg("s"), "Eigenvalues (descending) and eigenvectors (columns) of a symmetric matrix.");

  m.def("gauss_agg", [](const Matrix& samples, bool unbiased, double regularizer) {
    return gauss_agg(samples, {unbiased ? Normalization::kUnbiased : Normalization::kBiased, regularizer}).matrix();
  }, py::arg("samples"), py::arg("unbiased") = false, py::arg("regularizer") = 0.0,
        "Gaussian embedding of the columns of a d x n sample matrix.");

  m.def("re_eig", [](const Matrix& x, double eps) { return re_eig(SymmetricMatrix(x), eps).matrix(); },
        py::arg("x"), py::arg("eps") = 1e-4);
  m.def("log_eig", [](const Matrix& x) { return log_eig(SymmetricMatrix(x)).matrix(); }, py::arg("x"));
  m.def("half_vec", [](const Matrix& y) { return half_vec(SymmetricMatrix(y)).values; }, py::arg("y"));
  m.def("pyramid_split", [](int n, int levels) {
    std::vector<std::pair<int, int>> out;
    for (const auto& r : pyramid_split(n, levels)) out.emplace_back(r.begin, r.end);
    return out;
  }, py::arg("num_frames"), py::arg("levels"));

  py::class_<NetworkConfig>(m, "NetworkConfig")
      .def(py::init<>())
      .def_readwrite("channels", &NetworkConfig::channels)
      .def_readwrite("pyramid_levels", &NetworkConfig::pyramid_levels)
      .def_readwrite("rectify_eps", &NetworkConfig::rectify_eps)
      .def_readwrite("spat_out_dim", &NetworkConfig::spat_out_dim)
      .def_readwrite("num_classes", &NetworkConfig::num_classes)
      .def_readwrite("sequence_length", &NetworkConfig::sequence_length)
      .def_readwrite("temporal_regularizer", &NetworkConfig::temporal_regularizer)
      .def_property_readonly("feature_dim", &NetworkConfig::feature_dim)
      .def("validate", &NetworkConfig::validate);

  py::class_<Model>(m, "Model")
      .def(py::init([](const NetworkConfig& c, std::uint64_t seed) {
             c.validate();
             return Model{c, init_params(c, seed)};
           }),
           py::arg("config") = NetworkConfig{}, py::arg("seed") = 0)
      .def_static("load", [](const std::string& path) {
        Checkpoint ck = load_checkpoint(path);
        return Model{ck.config, std::move(ck.params)};
      }, py::arg("path"))
      .def("save", [](const Model& self, const std::string& path, int epoch) {
        save_checkpoint(path, {self.config, self.params, epoch});
      }, py::arg("path"), py::arg("epoch") = 0)
      .def_readonly("config", &Model::config)
      .def("logits", [](const Model& self, const Frames& frames) {
        return forward(to_sequence(frames), self.params, self.config).logits;
      }, py::arg("frames"), "Class scores for one (T, 22, 3) sequence.")
      .def("feature", [](const Model& self, const Frames& frames) {
        return extract_feature(to_sequence(frames), self.params, self.config);
      }, py::arg("frames"), "Half-vectorized log of the spatial aggregation output.");

  m.def("resample", [](const Frames& frames, int length) { return to_array(resample(to_sequence(frames), length)); },
        py::arg("frames"), py::arg("length"));

  m.def("synth_generate", [](int per_class, int classes, double noise, std::uint64_t seed) {
    py::list frames;
    std::vector<int> labels;
    for (const auto& s : synth_generate(per_class, classes, noise, seed)) {
      frames.append(to_array(s));
      labels.push_back(s.label_14);
    }
    return py::make_tuple(frames, labels);
  }, py::arg("per_class"), py::arg("classes"), py::arg("noise") = 0.01, py::arg("seed") = 0,
        "Synthetic sequences as a list of (T, 22, 3) arrays and their 1-based labels.");

  m.def("gradcheck", [](const std::string& layer, std::uint64_t seed, int instances) {
    GradcheckOptions opts;
    opts.layer = layer;
    opts.seed = seed;
    opts.instances = instances;
    py::list rows;
    for (const auto& r : run_gradcheck(opts))
      rows.append(py::dict(py::arg("layer") = r.layer, py::arg("instances") = r.instances,
                           py::arg("max_rel_error") = r.max_rel_error, py::arg("passed") = r.pass));
    return rows;
  }, py::arg("layer") = "", py::arg("seed") = 0, py::arg("instances") = 20);
}
