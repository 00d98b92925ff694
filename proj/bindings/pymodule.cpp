#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "linkrec/error.hpp"
#include "linkrec/experiment.hpp"
#include "linkrec/graph.hpp"
#include "linkrec/metrics.hpp"
#include "linkrec/model.hpp"
#include "linkrec/train.hpp"

namespace py = pybind11;
using namespace linkrec;

namespace {

using NumpyF64 = py::array_t<double, py::array::c_style | py::array::forcecast>;

Mat numpy_to_mat(const NumpyF64& arr) {
  if (arr.ndim() != 2) throw py::value_error("expected a 2-D array");
  Mat m(arr.shape(0), arr.shape(1));
  std::memcpy(m.data(), arr.data(), sizeof(double) * static_cast<size_t>(m.size()));
  return m;
}

py::array_t<double> mat_to_numpy(const Mat& m) {
  py::array_t<double> arr({m.rows(), m.cols()});
  std::memcpy(arr.mutable_data(), m.data(),
              sizeof(double) * static_cast<size_t>(m.size()));
  return arr;
}

std::vector<std::pair<NodeId, NodeId>> edges_to_pairs(const std::vector<Edge>& edges) {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(edges.size());
  for (const Edge& e : edges) out.emplace_back(e.u, e.v);
  return out;
}

std::vector<Edge> pairs_to_edges(const std::vector<std::pair<NodeId, NodeId>>& pairs) {
  std::vector<Edge> out;
  out.reserve(pairs.size());
  for (const auto& [u, v] : pairs) out.emplace_back(u, v);
  return out;
}

py::dict report_to_dict(const MetricsReport& r) {
  py::dict d;
  d["auc"] = r.auc;
  d["ap"] = r.ap;
  d["precision_missing"] = r.precision_missing;
  d["precision_spurious"] = r.precision_spurious;
  d["auc_spurious"] = r.auc_spurious;
  d["L_missing"] = r.L_missing;
  d["L_spurious"] = r.L_spurious;
  return d;
}

TrainConfig config_from_kwargs(const py::kwargs& kwargs) {
  TrainConfig cfg;
  for (const auto& item : kwargs) {
    const auto key = item.first.cast<std::string>();
    if (key == "learning_rate")
      cfg.learning_rate = item.second.cast<double>();
    else if (key == "weight_decay")
      cfg.weight_decay = item.second.cast<double>();
    else if (key == "epochs")
      cfg.epochs = item.second.cast<int>();
    else if (key == "dropout")
      cfg.dropout_rate = item.second.cast<double>();
    else if (key == "lambda_")
      cfg.lambda = item.second.cast<double>();
    else if (key == "layers")
      cfg.layers = item.second.cast<int>();
    else if (key == "hidden")
      cfg.hidden = item.second.cast<int>();
    else if (key == "batch")
      cfg.batch = item.second.cast<int>();
    else if (key == "seed")
      cfg.seed = item.second.cast<uint64_t>();
    else if (key == "layer_relu")
      cfg.layer_relu = item.second.cast<bool>();
    else
      throw py::value_error("unknown train option: " + key);
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(linkrec, m) {
  m.doc() = "Graph reconstruction for link prediction: augmentation pipeline, "
            "generative model, training, metrics, and heuristic baselines.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<Graph>(m, "Graph")
      .def(py::init([](NodeId n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
             return Graph(n, pairs_to_edges(edges));
           }),
           py::arg("n"), py::arg("edges"))
      .def_property_readonly("n", &Graph::node_count)
      .def_property_readonly(
          "edges", [](const Graph& g) { return edges_to_pairs(g.edges()); })
      .def("has_edge", &Graph::has_edge)
      .def("degrees", &Graph::degrees)
      .def("__len__", &Graph::edge_count)
      .def("__repr__", [](const Graph& g) {
        return "Graph(n=" + std::to_string(g.node_count()) +
               ", edges=" + std::to_string(g.edge_count()) + ")";
      });

  py::class_<PerturbationResult>(m, "PerturbationResult")
      .def_readonly("graph", &PerturbationResult::graph)
      .def_property_readonly(
          "deleted",
          [](const PerturbationResult& p) { return edges_to_pairs(p.deleted); })
      .def_property_readonly("added", [](const PerturbationResult& p) {
        return edges_to_pairs(p.added);
      });

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("original", &Dataset::original)
      .def_readonly("observed", &Dataset::observed)
      .def_readonly("train", &Dataset::train)
      .def_readonly("val", &Dataset::val)
      .def_property_readonly(
          "missing", [](const Dataset& d) { return edges_to_pairs(d.missing); });

  m.def("load_edge_list", &load_edge_list, py::arg("path"));
  m.def("save_edge_list", &save_edge_list, py::arg("graph"), py::arg("path"));
  m.def("to_adjacency",
        [](const Graph& g) { return mat_to_numpy(to_adjacency(g)); });
  m.def("split_observed", &split_observed, py::arg("graph"),
        py::arg("keep_fraction"), py::arg("seed"));
  m.def("perturb", &perturb, py::arg("graph"), py::arg("del_fraction"),
        py::arg("add_fraction"), py::arg("seed"));
  m.def("build_dataset", &build_dataset, py::arg("original"),
        py::arg("keep_fraction"), py::arg("t"), py::arg("del_fraction"),
        py::arg("add_fraction"), py::arg("seed"));

  py::class_<ModelParams>(m, "ModelParams")
      .def_property_readonly("layers", &ModelParams::layer_count)
      .def_property_readonly("n", &ModelParams::node_count)
      .def_property_readonly("hidden", &ModelParams::hidden)
      .def_readonly("lambda_", &ModelParams::lambda)
      .def_readonly("dropout", &ModelParams::dropout_rate)
      .def("save", &save_checkpoint, py::arg("path"))
      .def_static("load", &load_checkpoint, py::arg("path"));

  py::class_<TrainHistory>(m, "TrainHistory")
      .def("to_csv", &TrainHistory::to_csv)
      .def_property_readonly("records", [](const TrainHistory& h) {
        py::list rows;
        for (const EpochRecord& r : h.records) {
          py::dict d;
          d["epoch"] = r.epoch;
          d["train_loss"] = r.train_loss;
          d["val_loss"] = r.val_loss;
          d["val_auc"] = r.val_auc;
          d["val_ap"] = r.val_ap;
          rows.append(d);
        }
        return rows;
      });

  m.def(
      "train",
      [](const Dataset& dataset, const py::kwargs& kwargs) {
        const TrainConfig cfg = config_from_kwargs(kwargs);
        TrainResult result = train(dataset, cfg);
        return py::make_tuple(std::move(result.best), std::move(result.history),
                              result.best_epoch);
      },
      py::arg("dataset"),
      "Train on a dataset; keyword options mirror the run-config keys "
      "(learning_rate, epochs, dropout, lambda_, layers, hidden, batch, "
      "seed, weight_decay, layer_relu). Returns (params, history, best_epoch).");

  m.def(
      "score_matrix",
      [](const Graph& g, const ModelParams& params) {
        return mat_to_numpy(score_matrix(to_adjacency(g), params));
      },
      py::arg("graph"), py::arg("params"),
      "Inference-mode link probabilities for every node pair.");

  m.def(
      "evaluate_reconstruction",
      [](const NumpyF64& scores_observed, const Graph& original,
         const Graph& observed, const PerturbationResult& spurious_test,
         const NumpyF64& scores_spurious) {
        return report_to_dict(evaluate_reconstruction(
            numpy_to_mat(scores_observed), original, observed, spurious_test,
            numpy_to_mat(scores_spurious)));
      },
      py::arg("scores_observed"), py::arg("original"), py::arg("observed"),
      py::arg("spurious_test"), py::arg("scores_spurious"));

  m.def(
      "baseline_scores",
      [](const std::string& kind, const Graph& g, double epsilon) {
        py::list out;
        for (const ScoredPair& sp :
             baseline_scores(baseline_from_string(kind), g, epsilon))
          out.append(py::make_tuple(sp.i, sp.j, sp.score));
        return out;
      },
      py::arg("kind"), py::arg("graph"), py::arg("epsilon") = 1e-3,
      "Heuristic scores (CN, RA, or LP) for every node pair i < j.");

  m.def("auc",
        [](const std::vector<double>& pos, const std::vector<double>& neg) {
          return auc(pos, neg);
        });
  m.def("average_precision",
        [](const std::vector<std::pair<double, int>>& items) {
          std::vector<ScoredLabel> labeled;
          labeled.reserve(items.size());
          for (const auto& [score, label] : items)
            labeled.push_back({score, label});
          return average_precision(labeled);
        });

  m.attr("__version__") = kVersion;
}
