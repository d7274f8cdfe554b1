#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "divafn/cli.hpp"
#include "divafn/datamodel.hpp"
#include "divafn/fusionclassify.hpp"
#include "divafn/gradcheck.hpp"
#include "divafn/sylvester.hpp"
#include "divafn/trainer.hpp"

namespace py = pybind11;
using namespace divafn;

namespace {

Matrix matrix_from_buffer(const py::buffer& buffer) {
  const py::buffer_info info = buffer.request();
  if (info.ndim != 2)
    throw ContractViolation("expected a 2-D float64 array");
  if (info.format != py::format_descriptor<double>::format())
    throw ContractViolation("expected float64 entries");
  const auto rows = static_cast<std::size_t>(info.shape[0]);
  const auto cols = static_cast<std::size_t>(info.shape[1]);
  Matrix m(rows, cols);
  const auto* base = static_cast<const char*>(info.ptr);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const char* cell = base + static_cast<std::size_t>(info.strides[0]) * i +
                         static_cast<std::size_t>(info.strides[1]) * j;
      m(i, j) = *reinterpret_cast<const double*>(cell);
    }
  return m;
}

Hyperparams hyperparams_from_kwargs(const py::dict& kwargs) {
  Hyperparams hp;
  for (const auto& item : kwargs) {
    const auto key = item.first.cast<std::string>();
    if (key == "a") hp.a = item.second.cast<double>();
    else if (key == "b") hp.b = item.second.cast<double>();
    else if (key == "c") hp.c = item.second.cast<double>();
    else if (key == "beta") hp.beta = item.second.cast<double>();
    else if (key == "lambda_") hp.lambda = item.second.cast<double>();
    else if (key == "d") hp.d = item.second.cast<std::size_t>();
    else if (key == "lr") hp.lr = item.second.cast<double>();
    else if (key == "batch") hp.batch = item.second.cast<std::size_t>();
    else if (key == "iters") hp.iters = item.second.cast<std::size_t>();
    else throw ContractViolation("unknown hyperparameter '" + key + "'");
  }
  hp.validate();
  return hp;
}

}  // namespace

PYBIND11_MODULE(_divafn, m) {
  m.doc() = "cross-modal adaptation and fusion: C++ core operations";

  py::register_exception<ContractViolation>(m, "ContractViolation",
                                            PyExc_ValueError);
  py::register_exception<NumericalFailure>(m, "NumericalFailure",
                                           PyExc_ArithmeticError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  py::class_<Matrix>(m, "Matrix", py::buffer_protocol())
      .def(py::init<std::size_t, std::size_t, double>(), py::arg("rows"),
           py::arg("cols"), py::arg("fill") = 0.0)
      .def(py::init(&matrix_from_buffer), py::arg("array"))
      .def_property_readonly("rows", &Matrix::rows)
      .def_property_readonly("cols", &Matrix::cols)
      .def("__getitem__",
           [](const Matrix& self, std::pair<std::size_t, std::size_t> idx) {
             if (idx.first >= self.rows() || idx.second >= self.cols())
               throw py::index_error();
             return self(idx.first, idx.second);
           })
      .def("__setitem__",
           [](Matrix& self, std::pair<std::size_t, std::size_t> idx,
              double value) {
             if (idx.first >= self.rows() || idx.second >= self.cols())
               throw py::index_error();
             self(idx.first, idx.second) = value;
           })
      .def_buffer([](Matrix& self) {
        return py::buffer_info(
            self.data(), sizeof(double),
            py::format_descriptor<double>::format(), 2,
            {self.rows(), self.cols()},
            {sizeof(double), sizeof(double) * self.rows()});
      });

  m.def("stable_softplus", &stable_softplus, py::arg("x"));
  m.def("solve_sylvester", &solve_sylvester, py::arg("a"), py::arg("b"),
        py::arg("c"));
  m.def("sylvester_oracle", &sylvester_oracle, py::arg("a"), py::arg("b"),
        py::arg("c"));

  m.def(
      "build_similarity",
      [](const std::vector<int>& a, const std::vector<int>& b) {
        return build_similarity(a, b).entries;
      },
      py::arg("labels_a"), py::arg("labels_b"));
  m.def(
      "expand_semantics",
      [](const Matrix& table, const std::vector<int>& labels) {
        return expand_semantics(SemanticTable{table, false}, labels);
      },
      py::arg("table"), py::arg("labels"));
  m.def(
      "pair_scores",
      [](const Matrix& a, const Matrix& b) { return pair_scores(a, b).theta; },
      py::arg("a"), py::arg("b"));
  m.def(
      "nll_pair_loss",
      [](const Matrix& theta, const Matrix& similarity, double weight) {
        return nll_pair_loss(PairScores{theta}, SimilarityMatrix{similarity},
                             weight);
      },
      py::arg("theta"), py::arg("similarity"), py::arg("weight") = 1.0);
  m.def("sae_penalty", &sae_penalty, py::arg("r"), py::arg("w"), py::arg("s"),
        py::arg("beta"), py::arg("lambda_"));
  m.def(
      "solve_w",
      [](const Matrix& r, const Matrix& s, double beta, double lambda) {
        return solve_w(r, s, beta, lambda);
      },
      py::arg("r"), py::arg("s"), py::arg("beta"), py::arg("lambda_"));

  m.def(
      "generate_synthetic",
      [](std::size_t classes, std::size_t samples_per_class,
         std::uint64_t seed, const py::kwargs& kwargs) {
        SynthConfig cfg;
        cfg.classes = classes;
        cfg.samples_per_class = samples_per_class;
        for (const auto& item : kwargs) {
          const auto key = item.first.cast<std::string>();
          if (key == "dim_image") cfg.dim_image = item.second.cast<std::size_t>();
          else if (key == "dim_keyframe")
            cfg.dim_keyframe = item.second.cast<std::size_t>();
          else if (key == "dim_video")
            cfg.dim_video = item.second.cast<std::size_t>();
          else if (key == "dim_semantic")
            cfg.dim_semantic = item.second.cast<std::size_t>();
          else if (key == "latent_dim")
            cfg.latent_dim = item.second.cast<std::size_t>();
          else if (key == "noise_sigma")
            cfg.noise_sigma = item.second.cast<double>();
          else if (key == "scale_image")
            cfg.scale_image = item.second.cast<double>();
          else if (key == "scale_keyframe")
            cfg.scale_keyframe = item.second.cast<double>();
          else if (key == "scale_video")
            cfg.scale_video = item.second.cast<double>();
          else if (key == "proto_base")
            cfg.proto_base = item.second.cast<double>();
          else if (key == "proto_spread")
            cfg.proto_spread = item.second.cast<double>();
          else
            throw ContractViolation("unknown synth option '" + key + "'");
        }
        const SynthResult result = generate_synthetic(cfg, seed);
        py::dict out;
        out["images"] = result.dataset.images;
        out["keyframes"] = result.dataset.keyframes;
        out["videos"] = result.dataset.videos;
        out["labels"] = result.dataset.labels;
        out["class_names"] = result.dataset.class_names;
        out["semantics"] = result.semantics.embeddings;
        return out;
      },
      py::arg("classes"), py::arg("samples_per_class"), py::arg("seed") = 0);

  py::class_<Model>(m, "Model")
      .def_property_readonly("trace", [](const Model& self) { return self.trace; })
      .def_property_readonly("completed_iterations",
                             [](const Model& self) {
                               return self.completed_iterations;
                             })
      .def_property_readonly("initial_objective",
                             [](const Model& self) -> py::object {
                               if (!self.has_initial_objective)
                                 return py::none();
                               return py::float_(self.initial_objective);
                             })
      .def_property_readonly("ablation", [](const Model& self) {
        return ablation_name(self.ablation);
      });

  m.def(
      "train",
      [](const Matrix& images, const Matrix& keyframes, const Matrix& videos,
         const std::vector<int>& labels, const Matrix& semantics,
         const std::vector<std::string>& class_names,
         const std::string& ablation, std::uint64_t seed,
         bool strict_paper_gradients, const py::kwargs& kwargs) {
        TriModalDataset ds;
        ds.images = images;
        ds.keyframes = keyframes;
        ds.videos = videos;
        ds.labels = labels;
        if (class_names.empty()) {
          int max_label = 0;
          for (int label : labels) max_label = std::max(max_label, label);
          for (int c = 0; c <= max_label; ++c)
            ds.class_names.push_back("class_" + std::to_string(c));
        } else {
          ds.class_names = class_names;
        }
        TrainConfig cfg;
        cfg.hp = hyperparams_from_kwargs(kwargs);
        cfg.ablation = ablation_from_name(ablation);
        cfg.seed = seed;
        cfg.strict_paper_gradients = strict_paper_gradients;
        return train(ds, SemanticTable{semantics, false}, cfg);
      },
      py::arg("images"), py::arg("keyframes"), py::arg("videos"),
      py::arg("labels"), py::arg("semantics"),
      py::arg("class_names") = std::vector<std::string>{},
      py::arg("ablation") = "full", py::arg("seed") = 0,
      py::arg("strict_paper_gradients") = false);

  m.def(
      "fuse",
      [](const Model& model, const Matrix& keyframes, const Matrix& videos) {
        return fuse(model, keyframes, videos).features;
      },
      py::arg("model"), py::arg("keyframes"), py::arg("videos"));

  py::class_<LinearClassifier>(m, "LinearClassifier")
      .def_property_readonly("weights",
                             [](const LinearClassifier& self) {
                               return self.weights;
                             })
      .def_property_readonly("bias", [](const LinearClassifier& self) {
        return self.bias;
      });

  m.def(
      "train_classifier",
      [](const Matrix& features, const std::vector<int>& labels,
         std::size_t num_classes, double reg, std::uint64_t seed) {
        return train_classifier(FusedBatch{features}, labels, num_classes,
                                reg, seed);
      },
      py::arg("features"), py::arg("labels"), py::arg("num_classes"),
      py::arg("reg") = 1.0, py::arg("seed") = 0);
  m.def("predict", &predict, py::arg("classifier"), py::arg("features"));
  m.def(
      "evaluate",
      [](const LinearClassifier& clf, const Matrix& features,
         const std::vector<int>& labels) {
        const Metrics metrics = evaluate(clf, FusedBatch{features}, labels);
        py::dict out;
        out["accuracy"] = metrics.accuracy;
        out["per_class"] = metrics.per_class;
        out["confusion"] = metrics.confusion;
        return out;
      },
      py::arg("classifier"), py::arg("features"), py::arg("labels"));

  m.def(
      "run_gradcheck",
      [](std::uint64_t seed, const py::kwargs& kwargs) {
        const GradCheckResult result =
            run_gradcheck(hyperparams_from_kwargs(kwargs), seed);
        py::dict out;
        out["pass"] = result.pass;
        out["worst_rel_error"] = result.worst_rel_error;
        out["worst_coordinate"] = result.worst_coordinate;
        return out;
      },
      py::arg("seed") = 7);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) { return run_cli(args); },
      py::arg("args"));
}
