#pragma once

#include <algorithm>
#include <vector>

#include "slx/learner_spec.hpp"
#include "slx/tree.hpp"

namespace slx {

/// Stored-training-set nearest neighbors. Euclidean distance over the
/// (already standardized) one-hot encoded features; distance ties break on
/// the lower training-row index.
struct KnnModel {
    Matrix train_x;  // encoded
    std::vector<std::size_t> labels;   // classify
    std::vector<double> targets;       // regress
    std::size_t k = 5;
    std::size_t n_classes = 0;
    OneHotEncoder enc;

    std::vector<double> predict_row(std::span<const double> x_encoded) const {
        const std::size_t n = train_x.rows();
        const std::size_t kk = std::min(k, n);
        std::vector<std::pair<double, std::size_t>> dist(n);
        for (std::size_t i = 0; i < n; ++i)
            dist[i] = {squared_distance(train_x.row(i), x_encoded), i};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk),
                          dist.end());  // pair ordering = (distance, row index)
        if (n_classes > 0) {
            std::vector<double> probs(n_classes, 0.0);
            for (std::size_t i = 0; i < kk; ++i) probs[labels[dist[i].second]] += 1.0;
            for (auto& p : probs) p /= static_cast<double>(kk);
            return probs;
        }
        double s = 0.0;
        for (std::size_t i = 0; i < kk; ++i) s += targets[dist[i].second];
        return {s / static_cast<double>(kk)};
    }
};

inline KnnModel fit_knn_model(const Matrix& x, const std::vector<FeatureKind>& kinds,
                              const TreeTargets& targets, const LearnerSpec& spec) {
    if (x.rows() == 0) throw DataError("fit_knn: empty dataset");
    KnnModel m;
    m.enc = OneHotEncoder::from_kinds(kinds);
    m.train_x = m.enc.encode(x);
    m.k = spec.hp.n_neighbors;
    if (targets.is_classify()) {
        m.labels = *targets.labels;
        m.n_classes = targets.n_classes;
    } else {
        m.targets = *targets.reals;
    }
    return m;
}

}  // namespace slx
