#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "drcf/dataio.hpp"
#include "drcf/error.hpp"
#include "drcf/eval.hpp"
#include "drcf/grad.hpp"
#include "drcf/model.hpp"
#include "drcf/persist.hpp"
#include "drcf/train.hpp"

namespace py = pybind11;
using namespace drcf;

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

PYBIND11_MODULE(_drcf, m) {
    m.doc() = "Embedding + MLP collaborative filtering trained with mini-batched L-BFGS";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    auto fmt = py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<VersionError>(m, "VersionError", fmt.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", fmt.ptr());
    py::register_exception<NonFiniteError>(m, "NonFiniteError", fmt.ptr());

    py::class_<RatingTriplet>(m, "RatingTriplet")
        .def(py::init([](std::string user, std::string item, double rating, std::optional<std::int64_t> ts) {
                 return RatingTriplet{std::move(user), std::move(item), rating, ts};
             }),
             py::arg("user"), py::arg("item"), py::arg("rating"), py::arg("timestamp") = py::none())
        .def_readonly("user", &RatingTriplet::user_raw)
        .def_readonly("item", &RatingTriplet::item_raw)
        .def_readonly("rating", &RatingTriplet::rating)
        .def_readonly("timestamp", &RatingTriplet::timestamp);

    py::class_<Vocab>(m, "Vocab")
        .def(py::init<std::vector<std::string>>())
        .def("find", &Vocab::find)
        .def("raw", &Vocab::raw)
        .def("__len__", &Vocab::size)
        .def_property_readonly("ids", &Vocab::ids);

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("users", &Dataset::users)
        .def_readonly("items", &Dataset::items)
        .def_readonly("k_max", &Dataset::k_max)
        .def("__len__", &Dataset::size)
        .def("mean_rating", &Dataset::mean_rating)
        .def("triplets", [](const Dataset& d) {
            std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> out;
            out.reserve(d.size());
            for (const auto& r : d.ratings) out.emplace_back(r.user, r.item, r.rating);
            return out;
        });

    m.def("parse_movielens",
          [](const std::filesystem::path& path, const std::string& format) {
              return parse_movielens(path, parse_format(format));
          },
          py::arg("path"), py::arg("format") = "ml100k");
    m.def("parse_movielens_text",
          [](const std::string& text, const std::string& format) {
              return parse_movielens_text(text, parse_format(format));
          },
          py::arg("text"), py::arg("format") = "ml100k");
    m.def("build_dataset", &build_dataset, py::arg("triplets"), py::arg("k_max") = py::none());
    m.def("split", &split, py::arg("dataset"), py::arg("train_fraction") = 0.9, py::arg("seed") = 42);
    m.def("normalize_target", &normalize_target);

    py::class_<Hyperparams>(m, "Hyperparams")
        .def(py::init<>())
        .def_readwrite("d", &Hyperparams::d)
        .def_readwrite("h", &Hyperparams::h)
        .def_readwrite("lambda_", &Hyperparams::lambda)
        .def_readwrite("init_scale", &Hyperparams::init_scale)
        .def_readwrite("seed", &Hyperparams::seed)
        .def_readwrite("batch_size", &Hyperparams::batch_size)
        .def_readwrite("epochs", &Hyperparams::epochs)
        .def_readwrite("lbfgs_history", &Hyperparams::lbfgs_history)
        .def_readwrite("lbfgs_inner_iters", &Hyperparams::lbfgs_inner_iters)
        .def_readwrite("patience", &Hyperparams::patience)
        .def_readwrite("freeze_biases", &Hyperparams::freeze_biases)
        .def_readwrite("threads", &Hyperparams::threads)
        .def("validate", &Hyperparams::validate);

    py::class_<ModelParams>(m, "ModelParams")
        .def_property_readonly("d", [](const ModelParams& p) { return p.shape().d; })
        .def_property_readonly("h", [](const ModelParams& p) { return p.shape().h; })
        .def_property_readonly("users", [](const ModelParams& p) { return p.shape().users; })
        .def_property_readonly("items", [](const ModelParams& p) { return p.shape().items; })
        .def_property_readonly("k_max", &ModelParams::k_max)
        .def("values", [](const ModelParams& p) { return to_vector(p.values()); })
        .def("set_values",
             [](ModelParams& p, const std::vector<double>& v) {
                 if (v.size() != p.values().size()) throw ShapeError("wrong parameter count");
                 std::copy(v.begin(), v.end(), p.values().begin());
             })
        .def("__eq__", [](const ModelParams& a, const ModelParams& b) { return a == b; });

    m.def("init_params", &init_params, py::arg("users"), py::arg("items"), py::arg("k_max"), py::arg("hp"));
    m.def("lookup_concat", &lookup_concat);
    m.def("predict_rating", &predict_rating);
    m.def("forward", [](const ModelParams& p, std::size_t u, std::size_t i) {
        const ForwardTrace t = forward(p, u, i);
        py::dict out;
        out["x"] = t.x;
        out["z1"] = t.z1;
        out["a1"] = t.a1;
        out["z2"] = t.z2;
        out["p"] = t.p;
        return out;
    });

    auto to_batch = [](const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& rows) {
        Batch b;
        for (const auto& [u, i, y] : rows) b.examples.push_back({u, i, y});
        return b;
    };
    m.def("objective",
          [to_batch](const ModelParams& p, const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& rows,
                     double lambda) { return objective(p, to_batch(rows), lambda); },
          "Objective over (user, item, normalized target) rows", py::arg("params"), py::arg("batch"),
          py::arg("lambda_"));
    m.def("gradient",
          [to_batch](const ModelParams& p, const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& rows,
                     double lambda) { return gradient(p, to_batch(rows), lambda).values; },
          py::arg("params"), py::arg("batch"), py::arg("lambda_"));
    m.def("fd_gradient",
          [to_batch](const ModelParams& p, const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& rows,
                     double lambda, double eps) { return fd_gradient(p, to_batch(rows), lambda, eps).values; },
          py::arg("params"), py::arg("batch"), py::arg("lambda_"), py::arg("epsilon") = 1e-6);

    py::class_<EpochRecord>(m, "EpochRecord")
        .def_readonly("epoch", &EpochRecord::epoch)
        .def_readonly("objective", &EpochRecord::objective)
        .def_readonly("train_rmse", &EpochRecord::train_rmse)
        .def_readonly("test_rmse", &EpochRecord::test_rmse)
        .def_readonly("seconds", &EpochRecord::seconds);
    py::class_<TrainReport>(m, "TrainReport")
        .def_readonly("epochs", &TrainReport::epochs)
        .def_readonly("best_epoch", &TrainReport::best_epoch)
        .def_readonly("best_test_rmse", &TrainReport::best_test_rmse);

    m.def("train_model",
          [](const Dataset& train, const Dataset& test, const Hyperparams& hp) {
              py::gil_scoped_release release;
              return train_model(train, test, hp);
          },
          py::arg("train"), py::arg("test"), py::arg("hp"));

    m.def("rmse", [](const std::vector<double>& p, const std::vector<double>& t) { return rmse(p, t); });
    m.def("evaluate_model", [](const ModelParams& p, const Dataset& test) { return evaluate(model_predictor(p), test); });
    m.def("evaluate_baseline", [](const std::string& kind, const Dataset& train, const Dataset& test) {
        return evaluate(make_baseline(parse_baseline(kind), train), test);
    });

    py::class_<SlopeOneModel>(m, "SlopeOneModel")
        .def_static("fit", &SlopeOneModel::fit)
        .def("deviation", &SlopeOneModel::deviation)
        .def("count", &SlopeOneModel::count)
        .def("item_mean", &SlopeOneModel::item_mean)
        .def_property_readonly("global_mean", &SlopeOneModel::global_mean)
        .def("predict", [](const SlopeOneModel& s, const std::vector<std::pair<std::uint32_t, double>>& ratings,
                           std::uint32_t target) {
            std::vector<ItemRating> profile;
            for (const auto& [item, r] : ratings) profile.push_back({item, r});
            return s.predict(profile, target);
        });

    py::class_<TrainedModel>(m, "TrainedModel")
        .def(py::init([](const ModelParams& p, const Vocab& users, const Vocab& items, double global_mean,
                         double lambda) { return TrainedModel{p, users, items, global_mean, lambda}; }),
             py::arg("params"), py::arg("users"), py::arg("items"), py::arg("global_mean"), py::arg("lambda_") = 0.0)
        .def_readonly("params", &TrainedModel::params)
        .def_readonly("users", &TrainedModel::users)
        .def_readonly("items", &TrainedModel::items)
        .def_readonly("global_mean", &TrainedModel::global_mean)
        .def_readonly("lambda_", &TrainedModel::lambda)
        .def("predict", &predict_with_fallback, py::arg("user"), py::arg("item"));

    m.def("save", &save, py::arg("model"), py::arg("path"));
    m.def("load", &load, py::arg("path"));
}
