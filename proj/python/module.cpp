#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "safeqml/error.hpp"
#include "safeqml/eval_harness.hpp"
#include "safeqml/hybrid_model.hpp"
#include "safeqml/io.hpp"
#include "safeqml/quantum_sim.hpp"
#include "safeqml/safe_metrics.hpp"
#include "safeqml/serialization.hpp"

namespace py = pybind11;
using namespace safeqml;

namespace {

using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<Complex> to_numpy(const StateVector& s) {
    py::array_t<Complex> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(s.size())});
    std::copy(s.amplitudes().begin(), s.amplitudes().end(), out.mutable_data());
    return out;
}

StateVector to_state(const ComplexArray& a) {
    if (a.ndim() != 1) throw Error(ErrorCode::ShapeMismatch, "state must be one-dimensional");
    return StateVector(std::vector<Complex>(a.data(), a.data() + a.size()));
}

RotationParams to_params(const RealArray& angles) {
    if (angles.ndim() != 2 || angles.shape(1) != 3) {
        throw Error(ErrorCode::ShapeMismatch, "angles must have shape (n_qubits, 3)");
    }
    const auto n = static_cast<std::size_t>(angles.shape(0));
    return RotationParams(n, std::vector<double>(angles.data(), angles.data() + angles.size()));
}

py::array_t<double> params_to_numpy(const RotationParams& p) {
    py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(p.n_qubits()), 3});
    std::copy(p.flat().begin(), p.flat().end(), out.mutable_data());
    return out;
}

Dataset make_dataset(const Matrix& features, const std::vector<int>& labels, std::optional<int> n_classes) {
    Dataset ds;
    ds.features = features;
    ds.labels = labels;
    int top = -1;
    for (int y : labels) top = std::max(top, y);
    ds.n_classes = n_classes.value_or(top + 1);
    ds.validate();
    return ds;
}

Json parse_json(const std::string& text) {
    return text.empty() ? Json::object() : Json::parse(text);
}

}  // namespace

PYBIND11_MODULE(_safeqml, m) {
    m.doc() = "Hybrid quantum-classical classifier and rank-graduation safety metrics";

    py::register_exception<Error>(m, "SafeqmlError", PyExc_ValueError);

    // quantum simulation
    m.def("amplitude_encode",
          [](const std::vector<double>& x, std::size_t n_qubits) { return to_numpy(amplitude_encode(x, n_qubits)); },
          py::arg("x"), py::arg("n_qubits"));
    m.def("strongly_entangling_layer",
          [](const ComplexArray& state, const RealArray& angles) {
              const StateVector s = to_state(state);
              return to_numpy(strongly_entangling_layer(s, to_params(angles), default_layout(s.n_qubits())));
          },
          py::arg("state"), py::arg("angles"));
    m.def("adjoint_entangling_layer",
          [](const ComplexArray& state, const RealArray& angles) {
              const StateVector s = to_state(state);
              return to_numpy(adjoint_entangling_layer(s, to_params(angles), default_layout(s.n_qubits())));
          },
          py::arg("state"), py::arg("angles"));
    m.def("pauli_z", [](const ComplexArray& state) { return pauli_z_expectations(to_state(state)); },
          py::arg("state"));
    m.def("circuit_forward",
          [](const std::vector<double>& x, const RealArray& angles) {
              const RotationParams p = to_params(angles);
              return circuit_forward(x, p, default_layout(p.n_qubits())).expectations;
          },
          py::arg("x"), py::arg("angles"));
    m.def("circuit_backward",
          [](const std::vector<double>& x, const RealArray& angles, const std::vector<double>& upstream) {
              const RotationParams p = to_params(angles);
              const CircuitGradients g = circuit_backward(x, p, upstream, default_layout(p.n_qubits()));
              return py::make_tuple(g.input, params_to_numpy(g.params));
          },
          py::arg("x"), py::arg("angles"), py::arg("upstream"),
          "Returns (d/dx, d/dangles) of upstream . <Z>.");
    m.def("qubits_for_dimension", &qubits_for_dimension, py::arg("d"));

    // metrics
    m.def("rg_score",
          [](const std::vector<double>& ref, const std::vector<double>& cand) { return rg_score({ref, cand}); },
          py::arg("reference"), py::arg("candidate"));
    m.def("rg_from_cvm",
          [](const std::vector<double>& ref, const std::vector<double>& cand) { return rg_from_cvm({ref, cand}); },
          py::arg("reference"), py::arg("candidate"));
    m.def("cvm",
          [](const std::vector<double>& ref, const std::vector<double>& cand, int p) {
              return cvm_divergence({ref, cand}, p);
          },
          py::arg("reference"), py::arg("candidate"), py::arg("p") = 1);
    m.def("gini", [](const std::vector<double>& v) { return gini_index(v); }, py::arg("values"));
    m.def("rga", [](const std::vector<int>& labels, const Matrix& probs) { return rga_multiclass(labels, probs); },
          py::arg("labels"), py::arg("probs"));
    m.def("rgr",
          [](const Matrix& original, const Matrix& perturbed, const std::vector<int>& labels) {
              return rgr_score(original, perturbed, labels);
          },
          py::arg("probs_original"), py::arg("probs_perturbed"), py::arg("labels"));
    m.def("rge",
          [](const Matrix& full, const Matrix& reduced, const std::vector<int>& labels) {
              return rge_score(full, reduced, labels);
          },
          py::arg("probs_full"), py::arg("probs_reduced"), py::arg("labels"));
    m.def("curve_area",
          [](const std::vector<double>& levels, const std::vector<double>& scores) { return curve_area(levels, scores); },
          py::arg("levels"), py::arg("scores"));
    m.def("f1_macro",
          [](const std::vector<int>& y, const std::vector<int>& pred) { return f1_macro(y, pred); },
          py::arg("labels"), py::arg("predicted"));
    m.def("accuracy",
          [](const std::vector<int>& y, const std::vector<int>& pred) { return accuracy(y, pred); },
          py::arg("labels"), py::arg("predicted"));
    m.def("mse_prob", [](const std::vector<int>& y, const Matrix& probs) { return mse_prob(y, probs); },
          py::arg("labels"), py::arg("probs"));

    // data
    m.def("generate_synthetic",
          [](std::size_t n_samples, std::size_t n_features, int n_classes, double separation, double within_std,
             std::uint64_t seed) {
              SyntheticSpec spec{n_samples, n_features, n_classes, separation, within_std, seed};
              Dataset ds = generate_synthetic(spec);
              return std::make_tuple(std::move(ds.features), std::move(ds.labels));
          },
          py::arg("n_samples") = 600, py::arg("n_features") = 64, py::arg("n_classes") = 3,
          py::arg("separation") = 6.0, py::arg("within_std") = 1.0, py::arg("seed") = 7,
          "Returns (features, labels) of isotropic Gaussian blobs.");
    m.def("load_csv",
          [](const std::string& path) {
              Dataset ds = load_dataset_csv(path);
              return std::make_tuple(std::move(ds.features), std::move(ds.labels), ds.n_classes);
          },
          py::arg("path"));

    // models
    py::class_<Classifier>(m, "Classifier")
        .def_property_readonly("kind", [](const Classifier& c) { return std::string(to_string(c.kind())); })
        .def_property_readonly("input_dim", &Classifier::input_dim)
        .def_property_readonly("n_classes", &Classifier::n_classes)
        .def_property_readonly("parameter_count", &Classifier::parameter_count)
        .def("predict_proba", [](const Classifier& c, const Matrix& x) { return c.predict_proba(x); },
             py::arg("features"))
        .def("predict", [](const Classifier& c, const Matrix& x) { return argmax_rows(c.predict_proba(x)); },
             py::arg("features"))
        .def("input_gradient",
             [](const Classifier& c, const Vector& x, int label) { return c.input_gradient(x, label); },
             py::arg("features"), py::arg("label"))
        .def("to_json", [](const Classifier& c) { return to_json(Checkpoint{c, {}, std::nullopt}).dump(); })
        .def_static("from_json",
                    [](const std::string& text) { return checkpoint_from_json(Json::parse(text)).model; },
                    py::arg("text"));

    m.def("parameter_count",
          [](const std::string& kind, std::size_t d, std::size_t n_classes) {
              return make_classifier(parse_model_kind(kind), d, n_classes).parameter_count();
          },
          py::arg("kind"), py::arg("d"), py::arg("n_classes"));
    m.def("train",
          [](const std::string& kind, const Matrix& features, const std::vector<int>& labels,
             std::optional<int> n_classes, const std::string& config_json) {
              const Dataset ds = make_dataset(features, labels, n_classes);
              const TrainConfig cfg = train_config_from_json(parse_json(config_json));
              py::gil_scoped_release release;
              return train_model(parse_model_kind(kind), ds, cfg);
          },
          py::arg("kind"), py::arg("features"), py::arg("labels"), py::arg("n_classes") = std::nullopt,
          py::arg("config_json") = "");

    // experiments
    m.def("run_experiment_json",
          [](const Matrix& features, const std::vector<int>& labels, std::optional<int> n_classes,
             const std::string& config_json) {
              const Dataset ds = make_dataset(features, labels, n_classes);
              const ExperimentConfig cfg = experiment_config_from_json(parse_json(config_json));
              std::string out;
              {
                  py::gil_scoped_release release;
                  out = to_json(run_experiment(ds, cfg)).dump();
              }
              return out;
          },
          py::arg("features"), py::arg("labels"), py::arg("n_classes") = std::nullopt,
          py::arg("config_json") = "");
    m.def("config_hash",
          [](const std::string& config_json) { return config_hash(experiment_config_from_json(parse_json(config_json))); },
          py::arg("config_json") = "");
    m.def("cli", [](const std::vector<std::string>& args) {
              std::vector<const char*> argv{"safeqml"};
              for (const auto& a : args) argv.push_back(a.c_str());
              return cli_main(static_cast<int>(argv.size()), argv.data());
          },
          py::arg("args"));
}
