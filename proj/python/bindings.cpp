#include "lacp/conformal.hpp"
#include "lacp/error.hpp"
#include "lacp/synthetic.hpp"
#include "lacp/training.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace lacp;

namespace {

using RowMatrix = Dataset::Matrix;

Dataset to_dataset(const RowMatrix& x, const Eigen::VectorXd& y) { return Dataset(x, y); }

// Trained pipeline held on the Python side: normalization, KNN predictor,
// score transformation and its calibration set.
struct FittedModel {
  NormalizationStats stats;
  KnnModel knn;
  TransformFamily family;
  ScoredSet calibration;
  TrainTrace trace;
  std::string label;

  // Returns (lower, upper) in the original label units.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> intervals(const RowMatrix& x, double alpha) const {
    if (static_cast<std::size_t>(x.cols()) + 1 != stats.size()) throw InvalidArgument("attribute dimension mismatch");
    RowMatrix xn(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) xn(i, j) = stats[static_cast<std::size_t>(j)].apply(x(i, j));
    }
    Eigen::VectorXd pred(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      pred[i] = knn.predict(std::span<const double>(xn.row(i).data(), static_cast<std::size_t>(xn.cols())));
    }
    const auto ivs = predict_intervals(family, calibration, xn, pred, alpha);
    const auto& ys = stats.back();
    Eigen::VectorXd lo(x.rows()), hi(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      lo[i] = ys.revert(ivs[static_cast<std::size_t>(i)].lower());
      hi[i] = ys.revert(ivs[static_cast<std::size_t>(i)].upper());
    }
    return {lo, hi};
  }
};

FittedModel fit(const RowMatrix& x, const Eigen::VectorXd& y, const std::string& family, std::uint64_t seed,
                std::size_t epochs, double learning_rate, std::size_t batch_size, std::size_t patience, double gamma) {
  const auto normalized = normalize(to_dataset(x, y));
  const auto parts = split(normalized, {seed, {0.4, 0.4, 0.1, 0.1}});
  KnnFitOptions knn_options;
  knn_options.seed = seed;
  knn_options.clip_grid = true;
  auto knn = fit_knn(parts.proper_train, knn_options);
  auto cal = make_scored_set(parts.cp_train, knn.predict(parts.cp_train));
  const auto val = make_scored_set(parts.validation, knn.predict(parts.validation));
  TrainConfig config;
  config.family = FamilyChoice::parse(family);
  config.seed = seed;
  config.epochs = epochs;
  config.learning_rate = learning_rate;
  config.batch_size = batch_size;
  config.patience = patience;
  config.options.gamma = gamma;
  auto result = train_family(config, cal, val);
  return {normalized.stats(), std::move(knn), std::move(result.family), std::move(cal), std::move(result.trace),
          config.family.label()};
}

TransformFamily make_family(const std::string& kind, std::optional<LocalizerNet> localizer, double gamma) {
  FamilyOptions options;
  options.gamma = gamma;
  return TransformFamily(family_from_string(kind), std::move(localizer), options);
}

py::list protocol_rows(const ProtocolResult& r) {
  py::list rows;
  for (const auto& row : r.rows) {
    py::dict d;
    d["dataset"] = row.dataset;
    d["family"] = row.family;
    d["alpha"] = row.alpha;
    d["run_seed"] = row.run_seed;
    d["mean_size"] = row.mean_size;
    d["validity"] = row.validity;
    d["knn_k"] = row.knn_k;
    d["best_epoch"] = row.best_epoch;
    d["error"] = row.error ? py::cast(*row.error) : py::none();
    rows.append(d);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_lacp, m) {
  m.doc() = "Locally adaptive conformal prediction intervals";

  auto base = py::register_exception<Error>(m, "LacpError", PyExc_ValueError);
  py::register_exception<CodomainError>(m, "CodomainError", base.ptr());

  m.def("amplitude", [](const std::string& kind, double x, double rho) { return amplitude(noise_from_string(kind), x, rho); },
        py::arg("kind"), py::arg("x"), py::arg("rho") = 0.1);

  m.def(
      "generate",
      [](const std::string& kind, std::size_t n, double rho, std::uint64_t seed) {
        const auto s = generate({noise_from_string(kind), n, rho, seed});
        py::dict d;
        d["x"] = s.data.x();
        d["y"] = s.data.y();
        d["raw_x"] = s.raw_x;
        d["weights"] = s.weights;
        return d;
      },
      py::arg("kind"), py::arg("n") = 1000, py::arg("rho") = 0.1, py::arg("seed") = 0,
      "Synthetic heteroskedastic data: normalized (1, X, X^2) attributes and raw labels.");

  m.def("quantile_index", &quantile_index, py::arg("n"), py::arg("alpha"));
  m.def("calibrate", [](const std::vector<double>& b, double alpha) { return calibrate(b, alpha); }, py::arg("scores"),
        py::arg("alpha"));

  py::class_<LocalizerNet>(m, "Localizer")
      .def_static("init", py::overload_cast<std::size_t, std::uint64_t>(&LocalizerNet::init), py::arg("input_dim"),
                  py::arg("seed"))
      .def(py::init<std::vector<std::size_t>, Eigen::VectorXd>(), py::arg("layer_dims"), py::arg("params"))
      .def_property_readonly("layer_dims", &LocalizerNet::layer_dims)
      .def_property_readonly("params", &LocalizerNet::params)
      .def("__call__", [](const LocalizerNet& net, const std::vector<double>& x) { return net.evaluate(x); });

  py::class_<TransformFamily>(m, "TransformFamily")
      .def(py::init(&make_family), py::arg("kind"), py::arg("localizer") = std::nullopt, py::arg("gamma") = 1e-2)
      .def_property_readonly("kind", [](const TransformFamily& f) { return std::string(to_string(f.kind())); })
      .def("forward", [](const TransformFamily& f, const std::vector<double>& x, double a) { return f.forward(x, a); })
      .def("inverse", [](const TransformFamily& f, const std::vector<double>& x, double b) { return f.inverse(x, b); })
      .def("deriv_a", [](const TransformFamily& f, const std::vector<double>& x, double a) { return f.deriv_a(x, a); })
      .def(
          "interval",
          [](const TransformFamily& f, const std::vector<double>& x, double prediction, double q_hat) {
            const auto iv = interval(f, x, prediction, q_hat);
            return std::pair{iv.lower(), iv.upper()};
          },
          py::arg("x"), py::arg("prediction"), py::arg("q_hat"));

  py::class_<FittedModel>(m, "FittedModel")
      .def_readonly("family", &FittedModel::label)
      .def_property_readonly("knn_k", [](const FittedModel& f) { return f.knn.k(); })
      .def_property_readonly("best_epoch", [](const FittedModel& f) { return f.trace.best_epoch; })
      .def_property_readonly("val_losses", [](const FittedModel& f) {
        std::vector<double> v{f.trace.initial_val_loss};
        for (const auto& e : f.trace.epochs) v.push_back(e.val_loss);
        return v;
      })
      .def("intervals", &FittedModel::intervals, py::arg("x"), py::arg("alpha") = 0.05,
           "Lower and upper interval bounds in label units.");

  m.def("fit", &fit, py::arg("x"), py::arg("y"), py::arg("family") = "linear", py::arg("seed") = 0,
        py::arg("epochs") = 200, py::arg("learning_rate") = 1e-3, py::arg("batch_size") = 16, py::arg("patience") = 20,
        py::arg("gamma") = 1e-2, py::call_guard<py::gil_scoped_release>(),
        "Normalize, split, fit KNN and train the score transformation.");

  m.def(
      "run_protocol",
      [](const RowMatrix& x, const Eigen::VectorXd& y, const std::vector<std::string>& families,
         const std::vector<double>& alphas, std::size_t runs, std::uint64_t seed0, std::size_t epochs,
         const std::string& name) {
        ProtocolConfig cfg;
        cfg.dataset_name = name;
        for (const auto& f : families) cfg.families.push_back(FamilyChoice::parse(f));
        cfg.alphas = alphas;
        cfg.runs = runs;
        cfg.seed0 = seed0;
        cfg.train.epochs = epochs;
        ProtocolResult result;
        {
          py::gil_scoped_release release;
          result = run_protocol(normalize(to_dataset(x, y)), cfg);
        }
        return protocol_rows(result);
      },
      py::arg("x"), py::arg("y"), py::arg("families"), py::arg("alphas") = std::vector<double>{0.05, 0.1, 0.32},
      py::arg("runs") = 5, py::arg("seed0") = 0, py::arg("epochs") = 200, py::arg("name") = "data",
      "Repeated split / train / evaluate; one dict per (run, family, alpha).");
}
