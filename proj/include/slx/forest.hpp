#pragma once

#include <cmath>
#include <vector>

#include "slx/learner_spec.hpp"
#include "slx/parallel.hpp"
#include "slx/tree.hpp"

namespace slx {

/// Bagged or extremely-randomized tree ensemble. Prediction is the arithmetic
/// mean of the member trees' leaf vectors.
struct ForestModel {
    std::vector<Tree> trees;
    std::size_t out_width = 1;  // n_classes, or 1 for regression

    std::vector<double> predict_row(std::span<const double> x) const {
        std::vector<double> acc(out_width, 0.0);
        for (const auto& t : trees) {
            const auto v = t.predict_row(x);
            for (std::size_t j = 0; j < out_width; ++j) acc[j] += v[j];
        }
        const double inv = 1.0 / static_cast<double>(trees.size());
        for (auto& a : acc) a *= inv;
        return acc;
    }

    std::size_t node_count() const {
        std::size_t n = 0;
        for (const auto& t : trees) n += t.node_count();
        return n;
    }
};

inline std::size_t sqrt_features(std::size_t d) {
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
}

inline ForestModel fit_forest_model(const Matrix& x, const std::vector<bool>& categorical,
                                    const TreeTargets& targets, const LearnerSpec& spec,
                                    std::size_t threads = 1) {
    if (x.rows() == 0) throw DataError("fit_forest: empty dataset");
    const bool extra = spec.family == Family::extra_trees;
    const SplitCriterion criterion =
        targets.is_classify() ? SplitCriterion::gini : SplitCriterion::mse;

    TreeParams params;
    params.max_depth = spec.hp.max_depth;
    params.min_samples_split = spec.hp.min_samples_split;
    params.mode = extra ? SplitMode::random_threshold : SplitMode::exhaustive;
    params.max_features =
        spec.hp.max_features != 0 ? spec.hp.max_features : sqrt_features(x.cols());

    ForestModel model;
    model.out_width = targets.is_classify() ? targets.n_classes : 1;
    model.trees.resize(spec.hp.n_estimators);
    parallel_for(spec.hp.n_estimators, threads, [&](std::size_t t) {
        Rng rng = make_rng(spec.seed, 0x666f72ULL + t);
        std::vector<std::size_t> rows;
        if (!extra && spec.hp.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, x.rows() - 1);
            rows.resize(x.rows());
            for (auto& r : rows) r = pick(rng);
        } else {
            rows.resize(x.rows());
            std::iota(rows.begin(), rows.end(), 0);
        }
        model.trees[t] =
            grow_tree(x, categorical, std::move(rows), targets, criterion, params, rng);
    });
    return model;
}

}  // namespace slx
