#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "slx/ensemble.hpp"

namespace slx {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    Task task = Task::classify;
    std::size_t n = 0;
    // classification
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    std::vector<std::vector<std::size_t>> confusion;  // confusion[true][pred]
    double auc_macro = 0.0;
    std::vector<double> auc_per_class;
    bool zero_division = false;  // some precision/recall hit 0/0 and was set to 0
    // regression
    double rmse = 0.0, mae = 0.0, r2 = 0.0, plcc = 0.0;
    std::vector<EvalReport> fold_breakdown;
};

/// One-vs-rest AUC as the Mann-Whitney rank statistic, ties counted half.
/// Degenerate columns (single-class truth) score 0.5.
inline double auc_rank(const std::vector<int>& is_positive, const std::vector<double>& score) {
    const std::size_t n = score.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && score[order[j]] == score[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) {
            if (is_positive[order[k]]) {
                rank_sum_pos += avg_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return 0.5;
    return (rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline EvalReport classification_metrics(const std::vector<std::size_t>& y_true,
                                         const std::vector<std::size_t>& y_pred,
                                         const Matrix& probabilities) {
    if (y_true.size() != y_pred.size())
        throw DataError("classification_metrics: length mismatch");
    if (!probabilities.empty() && probabilities.rows() != y_true.size())
        throw DataError("classification_metrics: probability row mismatch");
    const std::size_t n = y_true.size();
    if (n == 0) throw DataError("classification_metrics: empty input");
    std::size_t n_classes = probabilities.empty() ? 0 : probabilities.cols();
    for (std::size_t i = 0; i < n; ++i)
        n_classes = std::max({n_classes, y_true[i] + 1, y_pred[i] + 1});

    EvalReport rep;
    rep.task = Task::classify;
    rep.n = n;
    rep.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
    for (std::size_t i = 0; i < n; ++i) ++rep.confusion[y_true[i]][y_pred[i]];

    std::size_t correct = 0;
    for (std::size_t c = 0; c < n_classes; ++c) correct += rep.confusion[c][c];
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(n);

    rep.per_class.resize(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::size_t tp = rep.confusion[c][c], fp = 0, fn = 0;
        for (std::size_t o = 0; o < n_classes; ++o) {
            if (o == c) continue;
            fp += rep.confusion[o][c];
            fn += rep.confusion[c][o];
        }
        auto safe_div = [&](std::size_t num, std::size_t den) {
            if (den == 0) {
                rep.zero_division = true;  // 0/0 defined as 0
                return 0.0;
            }
            return static_cast<double>(num) / static_cast<double>(den);
        };
        auto& m = rep.per_class[c];
        m.precision = safe_div(tp, tp + fp);
        m.recall = safe_div(tp, tp + fn);
        m.f1 = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
    }

    if (!probabilities.empty()) {
        rep.auc_per_class.resize(n_classes, 0.5);
        double sum = 0.0;
        for (std::size_t c = 0; c < probabilities.cols(); ++c) {
            std::vector<int> pos(n);
            for (std::size_t i = 0; i < n; ++i) pos[i] = y_true[i] == c ? 1 : 0;
            rep.auc_per_class[c] = auc_rank(pos, probabilities.col_copy(c));
            sum += rep.auc_per_class[c];
        }
        rep.auc_macro = sum / static_cast<double>(probabilities.cols());
    }
    return rep;
}

inline EvalReport regression_metrics(const std::vector<double>& y_true,
                                     const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size()) throw DataError("regression_metrics: length mismatch");
    const std::size_t n = y_true.size();
    if (n == 0) throw DataError("regression_metrics: empty input");

    EvalReport rep;
    rep.task = Task::regress;
    rep.n = n;
    double se = 0.0, ae = 0.0, mean_y = 0.0, mean_p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y_true[i] - y_pred[i];
        se += e * e;
        ae += std::abs(e);
        mean_y += y_true[i];
        mean_p += y_pred[i];
    }
    const double dn = static_cast<double>(n);
    mean_y /= dn;
    mean_p /= dn;
    rep.rmse = std::sqrt(se / dn);
    rep.mae = ae / dn;

    double sst = 0.0, cov = 0.0, var_p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dy = y_true[i] - mean_y;
        const double dp = y_pred[i] - mean_p;
        sst += dy * dy;
        cov += dy * dp;
        var_p += dp * dp;
    }
    rep.r2 = sst > 0.0 ? 1.0 - se / sst : (se == 0.0 ? 1.0 : 0.0);
    rep.plcc = (sst > 0.0 && var_p > 0.0) ? cov / std::sqrt(sst * var_p) : 0.0;
    return rep;
}

/// ROC curve points (fpr, tpr) for one score column against a binary truth,
/// emitted as data for external plotting.
inline std::vector<std::pair<double, double>> roc_points(const std::vector<int>& is_positive,
                                                         const std::vector<double>& score) {
    std::vector<std::size_t> order(score.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    double n_pos = 0.0, n_neg = 0.0;
    for (int p : is_positive) (p ? n_pos : n_neg) += 1.0;
    std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
    double tp = 0.0, fp = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && score[order[j]] == score[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) (is_positive[order[k]] ? tp : fp) += 1.0;
        pts.emplace_back(n_neg > 0.0 ? fp / n_neg : 0.0, n_pos > 0.0 ? tp / n_pos : 0.0);
        i = j;
    }
    return pts;
}

/// K-fold evaluation driver: per fold, fit_super on the complement and
/// predict the held-out fold; pooled predictions produce the report.
inline EvalReport crossval_evaluate(const Dataset& ds, const SuperLearnerSpec& spec,
                                    const FoldPlan& plan, std::size_t threads = 1) {
    if (plan.assignment.size() != ds.n()) throw DataError("crossval_evaluate: plan mismatch");
    const std::size_t n = ds.n();
    std::vector<std::size_t> pooled_labels(n, 0);
    std::vector<double> pooled_scores(n, 0.0);
    Matrix pooled_probs;
    std::vector<EvalReport> folds(plan.k);

    for (std::size_t f = 0; f < plan.k; ++f) {
        const auto train_idx = plan.complement_indices(f);
        const auto test_idx = plan.fold_indices(f);
        SuperLearnerSpec fold_spec = spec;
        fold_spec.seed = mix_seed(spec.seed, 0x63760000ULL + f);
        const auto model = fit_super(ds.take_rows(train_idx), fold_spec, {}, threads);
        const auto pred = predict_super(model, ds.take_rows(test_idx).rows);

        if (spec.task == Task::classify) {
            if (pooled_probs.empty()) pooled_probs = Matrix(n, pred.probabilities.cols());
            std::vector<std::size_t> fold_true;
            for (std::size_t i = 0; i < test_idx.size(); ++i) {
                pooled_labels[test_idx[i]] = pred.labels[i];
                pooled_probs.set_row(test_idx[i], pred.probabilities.row(i));
                fold_true.push_back((*ds.class_labels)[test_idx[i]]);
            }
            folds[f] = classification_metrics(fold_true, pred.labels, pred.probabilities);
        } else {
            std::vector<double> fold_true, fold_pred;
            for (std::size_t i = 0; i < test_idx.size(); ++i) {
                pooled_scores[test_idx[i]] = pred.probabilities(i, 0);
                fold_true.push_back((*ds.scores)[test_idx[i]]);
                fold_pred.push_back(pred.probabilities(i, 0));
            }
            folds[f] = regression_metrics(fold_true, fold_pred);
        }
    }

    EvalReport rep;
    if (spec.task == Task::classify) {
        rep = classification_metrics(*ds.class_labels, pooled_labels, pooled_probs);
    } else {
        rep = regression_metrics(*ds.scores, pooled_scores);
    }
    rep.fold_breakdown = std::move(folds);
    return rep;
}

}  // namespace slx
