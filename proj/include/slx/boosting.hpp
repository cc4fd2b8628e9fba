#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "slx/learner_spec.hpp"
#include "slx/tree.hpp"

namespace slx {

/// Stagewise additive model of depth-limited regression trees. One engine
/// serves both boosting presets. Regression fits squared-loss residuals;
/// classification fits one-vs-rest log-loss gradients (class indicator minus
/// softmax probability) with per-class score accumulators.
struct GbmModel {
    std::vector<double> init_scores;         // log class priors, or {target mean}
    std::vector<std::vector<Tree>> stages;   // stages[s][c]
    double learning_rate = 0.1;
    std::vector<double> train_loss;          // per-stage training loss

    std::size_t n_classes() const { return init_scores.size(); }

    std::vector<double> raw_scores(std::span<const double> x, std::size_t upto_stage) const {
        std::vector<double> s = init_scores;
        const std::size_t n_stages = std::min(upto_stage, stages.size());
        for (std::size_t st = 0; st < n_stages; ++st)
            for (std::size_t c = 0; c < s.size(); ++c)
                s[c] += learning_rate * stages[st][c].predict_row(x)[0];
        return s;
    }

    std::vector<double> predict_row(std::span<const double> x) const {
        auto s = raw_scores(x, stages.size());
        if (s.size() == 1) return s;  // regression: raw score is the prediction
        softmax_inplace(s);
        return s;
    }

    static void softmax_inplace(std::vector<double>& s) {
        const double m = *std::max_element(s.begin(), s.end());
        double z = 0.0;
        for (auto& v : s) {
            v = std::exp(v - m);
            z += v;
        }
        for (auto& v : s) v /= z;
    }

    std::size_t node_count() const {
        std::size_t n = 0;
        for (const auto& st : stages)
            for (const auto& t : st) n += t.node_count();
        return n;
    }
};

inline GbmModel fit_gbm_model(const Matrix& x, const std::vector<bool>& categorical,
                              const TreeTargets& targets, const LearnerSpec& spec) {
    const std::size_t n = x.rows();
    if (n == 0) throw DataError("fit_gradient_boost: empty dataset");
    if (spec.hp.learning_rate <= 0.0) throw DataError("fit_gradient_boost: learning_rate <= 0");

    TreeParams params;
    params.max_depth = spec.hp.max_depth;
    params.min_samples_split = spec.hp.min_samples_split;
    params.mode = SplitMode::exhaustive;
    params.max_features = spec.hp.max_features;  // 0 = all features

    GbmModel model;
    model.learning_rate = spec.hp.learning_rate;

    if (targets.is_classify()) {
        const std::size_t k = targets.n_classes;
        const auto& y = *targets.labels;
        std::vector<double> prior(k, 0.0);
        for (auto c : y) prior[c] += 1.0;
        model.init_scores.resize(k);
        for (std::size_t c = 0; c < k; ++c)
            model.init_scores[c] = std::log(std::max(prior[c] / static_cast<double>(n), 1e-12));

        Matrix scores(n, k);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < k; ++c) scores(i, c) = model.init_scores[c];

        std::vector<double> residual(n);
        Matrix probs(n, k);
        for (std::size_t stage = 0; stage < spec.hp.n_estimators; ++stage) {
            double loss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                auto s = scores.row_copy(i);
                GbmModel::softmax_inplace(s);
                for (std::size_t c = 0; c < k; ++c) probs(i, c) = s[c];
                loss -= std::log(std::max(s[y[i]], 1e-300));
            }
            model.train_loss.push_back(loss / static_cast<double>(n));

            model.stages.emplace_back();
            for (std::size_t c = 0; c < k; ++c) {
                for (std::size_t i = 0; i < n; ++i)
                    residual[i] = (y[i] == c ? 1.0 : 0.0) - probs(i, c);
                Rng rng = make_rng(spec.seed, 0x67626dULL + stage * k + c);
                Tree tree = grow_tree(x, categorical, TreeTargets::regress(residual),
                                      SplitCriterion::mse, params, rng);
                for (std::size_t i = 0; i < n; ++i)
                    scores(i, c) += model.learning_rate * tree.predict_row(x.row(i))[0];
                model.stages.back().push_back(std::move(tree));
            }
        }
    } else {
        const auto& y = *targets.reals;
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(n);
        model.init_scores = {mean};

        std::vector<double> pred(n, mean), residual(n);
        for (std::size_t stage = 0; stage < spec.hp.n_estimators; ++stage) {
            double loss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                residual[i] = y[i] - pred[i];
                loss += residual[i] * residual[i];
            }
            model.train_loss.push_back(loss / static_cast<double>(n));

            Rng rng = make_rng(spec.seed, 0x67626dULL + stage);
            Tree tree = grow_tree(x, categorical, TreeTargets::regress(residual),
                                  SplitCriterion::mse, params, rng);
            for (std::size_t i = 0; i < n; ++i)
                pred[i] += model.learning_rate * tree.predict_row(x.row(i))[0];
            model.stages.push_back({std::move(tree)});
        }
    }
    return model;
}

}  // namespace slx
