#pragma once

#include <variant>
#include <vector>

#include "slx/boosting.hpp"
#include "slx/forest.hpp"
#include "slx/knn.hpp"
#include "slx/linear.hpp"
#include "slx/svm.hpp"

namespace slx {

/// One trained base or meta learner behind the uniform fit/predict contract.
/// Classifiers emit row-stochastic probability matrices; regressors n x 1.
struct FittedLearner {
    LearnerSpec spec;
    std::size_t feature_count = 0;
    std::vector<std::string> classes;  // empty for regressors
    std::variant<ForestModel, GbmModel, KnnModel, SvmModel, LogisticModel, LinearModel> params;

    std::size_t out_width() const {
        return spec.task == Task::classify ? classes.size() : 1;
    }

    Matrix predict_scores(const Matrix& x) const {
        if (x.cols() != feature_count) throw DataError("predict_scores: width mismatch");
        Matrix out(x.rows(), out_width());
        std::visit(
            [&](const auto& model) {
                using M = std::decay_t<decltype(model)>;
                if constexpr (std::is_same_v<M, KnnModel> || std::is_same_v<M, SvmModel>) {
                    const Matrix enc = model.enc.encode(x);
                    for (std::size_t i = 0; i < enc.rows(); ++i)
                        out.set_row(i, model.predict_row(enc.row(i)));
                } else if constexpr (std::is_same_v<M, LinearModel>) {
                    const Matrix enc = model.enc.encode(x);
                    for (std::size_t i = 0; i < enc.rows(); ++i)
                        out(i, 0) = model.predict_encoded(enc.row(i));
                } else if constexpr (std::is_same_v<M, LogisticModel>) {
                    const Matrix enc = model.enc.encode(x);
                    for (std::size_t i = 0; i < enc.rows(); ++i)
                        out.set_row(i, model.predict_encoded(enc.row(i)));
                } else {
                    for (std::size_t i = 0; i < x.rows(); ++i)
                        out.set_row(i, model.predict_row(x.row(i)));
                }
            },
            params);
        return out;
    }

    /// Serialized-parameter census used for full-vs-reduced size comparisons.
    std::size_t parameter_count() const {
        return std::visit(
            [](const auto& model) -> std::size_t {
                using M = std::decay_t<decltype(model)>;
                if constexpr (std::is_same_v<M, ForestModel> || std::is_same_v<M, GbmModel>)
                    return model.node_count();
                else if constexpr (std::is_same_v<M, KnnModel>)
                    return model.train_x.rows() * model.train_x.cols();
                else if constexpr (std::is_same_v<M, SvmModel>)
                    return model.support.rows() * (model.support.cols() + model.machines.size());
                else if constexpr (std::is_same_v<M, LogisticModel>)
                    return model.weights.rows() * model.weights.cols();
                else
                    return model.weights.size();
            },
            params);
    }
};

namespace detail {

inline std::vector<bool> categorical_flags(const std::vector<FeatureKind>& kinds) {
    std::vector<bool> out(kinds.size());
    for (std::size_t j = 0; j < kinds.size(); ++j) out[j] = kinds[j].is_categorical();
    return out;
}

inline TreeTargets targets_for(const Dataset& ds, Task task) {
    if (task == Task::classify) {
        if (!ds.class_labels) throw DataError("fit: task requires class labels");
        return TreeTargets::classify(*ds.class_labels, ds.schema.n_classes());
    }
    if (!ds.scores) throw DataError("fit: task requires scores");
    return TreeTargets::regress(*ds.scores);
}

}  // namespace detail

inline FittedLearner fit_learner(const Dataset& ds, const LearnerSpec& spec,
                                 std::size_t threads = 1) {
    spec.validate();
    if (ds.n() == 0) throw DataError("fit_learner: empty dataset");
    const auto targets = detail::targets_for(ds, spec.task);

    FittedLearner fl;
    fl.spec = spec;
    fl.feature_count = ds.d();
    if (spec.task == Task::classify) fl.classes = ds.schema.class_levels;

    const auto cat = detail::categorical_flags(ds.schema.kinds);
    switch (spec.family) {
        case Family::random_forest:
        case Family::extra_trees:
            fl.params = fit_forest_model(ds.rows, cat, targets, spec, threads);
            break;
        case Family::grad_boost:
            fl.params = fit_gbm_model(ds.rows, cat, targets, spec);
            break;
        case Family::knn:
            fl.params = fit_knn_model(ds.rows, ds.schema.kinds, targets, spec);
            break;
        case Family::svm:
            fl.params = fit_svm_model(ds.rows, ds.schema.kinds, targets, spec);
            break;
        case Family::logistic:
            fl.params = fit_logistic_model(ds.rows, ds.schema.kinds, *ds.class_labels,
                                           ds.schema.n_classes(), spec);
            break;
        case Family::linear:
            fl.params = fit_linear_model(ds.rows, ds.schema.kinds, *ds.scores, spec);
            break;
    }
    return fl;
}

}  // namespace slx
