#pragma once

#include <functional>
#include <numeric>
#include <vector>

#include "slx/learner.hpp"
#include "slx/parallel.hpp"

namespace slx {

struct SuperLearnerSpec {
    std::vector<LearnerSpec> base_specs;
    LearnerSpec meta_spec;
    std::size_t meta_folds = 10;
    Task task = Task::classify;
    std::uint64_t seed = 0;

    static SuperLearnerSpec defaults(Task task, std::uint64_t seed = 0) {
        SuperLearnerSpec s;
        s.task = task;
        s.seed = seed;
        s.base_specs = default_base_roster(task, seed);
        s.meta_spec = LearnerSpec::defaults(
            task == Task::classify ? Family::logistic : Family::linear, task, seed);
        return s;
    }

    void validate() const {
        if (base_specs.empty()) throw DataError("super learner: need at least one base learner");
        if (meta_folds < 2) throw DataError("super learner: meta_folds must be >= 2");
        if (meta_spec.task != task) throw DataError("super learner: meta task mismatch");
        for (const auto& b : base_specs) {
            if (b.task != task) throw DataError("super learner: base task mismatch");
            b.validate();
        }
        meta_spec.validate();
    }

    /// Meta-feature width: n_classes per classifier base, 1 per regressor base.
    std::size_t meta_width(std::size_t n_classes) const {
        return base_specs.size() * (task == Task::classify ? n_classes : 1);
    }
};

/// Out-of-fold meta-features: entry (i, .) comes from base models whose
/// training folds exclude row i, so the meta learner never sees leaked
/// resubstitution predictions.
struct MetaMatrix {
    Matrix rows;
    std::vector<std::size_t> provenance;  // fold index that produced each row
};

struct SuperLearnerModel {
    SuperLearnerSpec spec;
    std::vector<FittedLearner> fitted_bases;  // refit on all training rows
    FittedLearner fitted_meta;
    StandardizerState standardizer;           // fitted on the projected space
    std::vector<std::size_t> feature_subset;  // identity for the full model
    std::size_t full_width = 0;               // width predict() accepts
    std::vector<std::string> classes;
    double score_min = 0.0, score_max = 10.0;
    std::vector<FeatureKind> kinds;           // projected-space kinds

    std::size_t n_classes() const { return classes.size(); }

    std::size_t parameter_count() const {
        std::size_t n = fitted_meta.parameter_count();
        for (const auto& b : fitted_bases) n += b.parameter_count();
        return n;
    }
};

namespace detail {

inline std::uint64_t unit_seed(const SuperLearnerSpec& spec, const LearnerSpec& base,
                               std::size_t unit) {
    return mix_seed(spec.seed ^ base.seed, 0x756e6974ULL + unit);
}

inline FoldPlan meta_fold_plan(const Dataset& ds, const SuperLearnerSpec& spec) {
    bool stratified = false;
    if (spec.task == Task::classify && ds.class_labels) {
        std::vector<std::size_t> counts(ds.schema.n_classes(), 0);
        for (auto c : *ds.class_labels) ++counts[c];
        stratified = std::all_of(counts.begin(), counts.end(),
                                 [&](std::size_t c) { return c >= spec.meta_folds; });
    }
    return split_kfold(ds, spec.meta_folds, mix_seed(spec.seed, 0x6d657461ULL), stratified);
}

inline Dataset meta_dataset(const Matrix& meta_rows, const Dataset& source, Task task) {
    Dataset md;
    md.schema.label_kind = task == Task::classify ? LabelKind::class_only : LabelKind::score_only;
    md.schema.class_levels = source.schema.class_levels;
    md.schema.score_min = source.schema.score_min;
    md.schema.score_max = source.schema.score_max;
    for (std::size_t j = 0; j < meta_rows.cols(); ++j) {
        md.schema.names.push_back("m" + std::to_string(j));
        md.schema.kinds.push_back(FeatureKind::cont());
    }
    md.rows = meta_rows;
    if (task == Task::classify) md.class_labels = source.class_labels;
    else md.scores = source.scores;
    return md;
}

}  // namespace detail

inline MetaMatrix build_oof_meta(const Dataset& ds, const SuperLearnerSpec& spec,
                                 std::size_t threads = 1) {
    spec.validate();
    ds.validate();
    const std::size_t n = ds.n();
    const std::size_t n_classes = ds.schema.n_classes();
    const std::size_t base_width = spec.task == Task::classify ? n_classes : 1;
    const FoldPlan plan = detail::meta_fold_plan(ds, spec);

    MetaMatrix meta;
    meta.rows = Matrix(n, spec.meta_width(n_classes));
    meta.provenance = plan.assignment;

    const std::size_t n_bases = spec.base_specs.size();
    const std::size_t n_units = spec.meta_folds * n_bases;
    std::vector<std::string> unit_errors(n_units);
    parallel_for(n_units, threads, [&](std::size_t unit) {
        const std::size_t fold = unit / n_bases;
        const std::size_t b = unit % n_bases;
        try {
            const auto train_idx = plan.complement_indices(fold);
            const auto test_idx = plan.fold_indices(fold);
            Dataset train = ds.take_rows(train_idx);
            Dataset test = ds.take_rows(test_idx);

            LearnerSpec base = spec.base_specs[b];
            if (base.family == Family::knn && base.hp.n_neighbors > train.n())
                throw DataError("build_oof_meta: fold complement smaller than n_neighbors");
            base.seed = detail::unit_seed(spec, spec.base_specs[b], unit);

            const auto st = fit_standardizer(train);
            const auto fitted = fit_learner(apply_standardizer(st, train), base);
            const Matrix pred = fitted.predict_scores(apply_standardizer(st, test).rows);
            for (std::size_t i = 0; i < test_idx.size(); ++i)
                for (std::size_t c = 0; c < base_width; ++c)
                    meta.rows(test_idx[i], b * base_width + c) = pred(i, c);
        } catch (const std::exception& e) {
            unit_errors[unit] = e.what();
        }
    });
    for (const auto& err : unit_errors)
        if (!err.empty()) throw DataError(err);
    return meta;
}

/// Fits the stacked model: out-of-fold meta-features, meta learner on top,
/// then every base refit on the full training set for deployment.
inline SuperLearnerModel fit_super(const Dataset& ds, const SuperLearnerSpec& spec,
                                   std::vector<std::size_t> feature_subset = {},
                                   std::size_t threads = 1) {
    spec.validate();
    Dataset work = ds;
    if (feature_subset.empty()) {
        feature_subset.resize(ds.d());
        std::iota(feature_subset.begin(), feature_subset.end(), 0);
    } else {
        work = ds.take_cols(feature_subset);
    }

    SuperLearnerModel model;
    model.spec = spec;
    model.feature_subset = feature_subset;
    model.full_width = ds.d();
    model.classes = spec.task == Task::classify ? work.schema.class_levels
                                                : std::vector<std::string>{};
    model.score_min = work.schema.score_min;
    model.score_max = work.schema.score_max;
    model.kinds = work.schema.kinds;

    const MetaMatrix meta = build_oof_meta(work, spec, threads);
    LearnerSpec meta_spec = spec.meta_spec;
    meta_spec.seed = mix_seed(spec.seed, 0x6d6cULL);
    model.fitted_meta =
        fit_learner(detail::meta_dataset(meta.rows, work, spec.task), meta_spec);

    model.standardizer = fit_standardizer(work);
    const Dataset full_std = apply_standardizer(model.standardizer, work);
    model.fitted_bases.resize(spec.base_specs.size());
    parallel_for(spec.base_specs.size(), threads, [&](std::size_t b) {
        LearnerSpec base = spec.base_specs[b];
        base.seed = detail::unit_seed(spec, spec.base_specs[b], 0xf0000000ULL + b);
        model.fitted_bases[b] = fit_learner(full_std, base);
    });
    return model;
}

struct SuperPrediction {
    std::vector<std::size_t> labels;  // classify only; argmax ties -> lower index
    Matrix probabilities;             // n x K (classify) or n x 1 clamped (regress)
};

/// Meta-feature block for already projected + standardized inputs.
inline Matrix super_meta_features(const SuperLearnerModel& model, const Matrix& x_std) {
    Matrix meta;
    for (const auto& base : model.fitted_bases)
        meta = Matrix::hcat(meta, base.predict_scores(x_std));
    return meta;
}

inline SuperPrediction predict_super(const SuperLearnerModel& model, const Matrix& x) {
    if (x.cols() != model.full_width) throw DataError("predict_super: width mismatch");
    Matrix proj = x.take_cols(model.feature_subset);
    const Matrix x_std = apply_standardizer(model.standardizer, proj);
    const Matrix meta = super_meta_features(model, x_std);
    Matrix out = model.fitted_meta.predict_scores(meta);

    SuperPrediction pred;
    if (model.spec.task == Task::classify) {
        pred.labels.resize(out.rows());
        for (std::size_t i = 0; i < out.rows(); ++i) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < out.cols(); ++c)
                if (out(i, c) > out(i, best)) best = c;
            pred.labels[i] = best;
        }
    } else {
        for (auto& v : out.data()) v = std::clamp(v, model.score_min, model.score_max);
    }
    pred.probabilities = std::move(out);
    return pred;
}

/// Scalar prediction channels of a stacked model: one per class probability
/// for classifiers, a single channel for regressors. Each maps an n x d
/// matrix in original feature space to n reals.
inline std::vector<std::function<std::vector<double>(const Matrix&)>> super_channels(
    const SuperLearnerModel& model) {
    const std::size_t width = model.spec.task == Task::classify ? model.n_classes() : 1;
    std::vector<std::function<std::vector<double>(const Matrix&)>> channels;
    for (std::size_t c = 0; c < width; ++c) {
        channels.push_back([&model, c](const Matrix& x) {
            const SuperPrediction pred = predict_super(model, x);
            return pred.probabilities.col_copy(c);
        });
    }
    return channels;
}

}  // namespace slx
