#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "slx/matrix.hpp"
#include "slx/random.hpp"

namespace slx {

constexpr double kSplitTol = 1e-12;  // minimum impurity decrease worth a split

struct TreeNode {
    std::int32_t left = -1;   // < 0 marks a leaf
    std::int32_t right = -1;
    std::uint32_t feature = 0;
    double threshold = 0.0;       // category code when categorical
    bool categorical = false;     // equality partition: x == threshold goes left
    std::vector<double> values;   // leaf payload: class probabilities, or {mean}

    bool is_leaf() const { return left < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // preorder, root at 0

    std::span<const double> predict_row(std::span<const double> x) const {
        std::size_t idx = 0;
        while (!nodes[idx].is_leaf()) {
            const auto& nd = nodes[idx];
            const double v = x[nd.feature];
            const bool go_left = nd.categorical ? (v == nd.threshold) : (v <= nd.threshold);
            idx = static_cast<std::size_t>(go_left ? nd.left : nd.right);
        }
        return nodes[idx].values;
    }

    std::size_t node_count() const { return nodes.size(); }
};

enum class SplitCriterion { gini, mse };
enum class SplitMode { exhaustive, random_threshold };

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    bool categorical = false;
    double impurity_decrease = 0.0;
};

/// Targets for tree fitting: class labels with a known class count, or real
/// targets (regression or boosting residuals).
struct TreeTargets {
    const std::vector<std::size_t>* labels = nullptr;
    std::size_t n_classes = 0;
    const std::vector<double>* reals = nullptr;

    static TreeTargets classify(const std::vector<std::size_t>& y, std::size_t k) {
        return {&y, k, nullptr};
    }
    static TreeTargets regress(const std::vector<double>& y) { return {nullptr, 0, &y}; }
    bool is_classify() const { return labels != nullptr; }
};

namespace detail {

struct GiniAgg {
    std::vector<double> counts;
    double n = 0.0;
    explicit GiniAgg(std::size_t k) : counts(k, 0.0) {}
    void add(std::size_t c) { counts[c] += 1.0; n += 1.0; }
    void remove(std::size_t c) { counts[c] -= 1.0; n -= 1.0; }
    double impurity() const {
        if (n <= 0.0) return 0.0;
        double s = 0.0;
        for (double c : counts) s += c * c;
        return 1.0 - s / (n * n);
    }
};

struct MseAgg {
    double sum = 0.0, sumsq = 0.0, n = 0.0;
    void add(double y) { sum += y; sumsq += y * y; n += 1.0; }
    void remove(double y) { sum -= y; sumsq -= y * y; n -= 1.0; }
    double impurity() const {
        if (n <= 0.0) return 0.0;
        const double m = sum / n;
        return std::max(0.0, sumsq / n - m * m);
    }
};

template <class Agg>
double split_decrease(const Agg& left, const Agg& right, double parent_imp, double n_total) {
    const double nl = left.n, nr = right.n;
    if (nl <= 0.0 || nr <= 0.0) return 0.0;
    return parent_imp - (nl / n_total) * left.impurity() - (nr / n_total) * right.impurity();
}

template <class Agg, class GetTarget>
Agg empty_like(const Agg& parent, std::span<const std::size_t> rows, GetTarget get) {
    Agg a = parent;
    for (auto i : rows) a.remove(get(i));
    return a;
}

// Evaluates every midpoint threshold (continuous) or every equality partition
// (categorical) for one feature. Ties inside a feature resolve to the lowest
// threshold via strict improvement.
template <class Agg, class GetTarget>
std::optional<Split> best_split_for_feature(
    const Matrix& x, std::span<const std::size_t> rows, std::size_t feature, bool categorical,
    const Agg& parent, double parent_imp, GetTarget get, SplitMode mode, Rng& rng) {
    const double n_total = parent.n;
    std::optional<Split> best;

    if (!categorical) {
        if (mode == SplitMode::exhaustive) {
            std::vector<std::pair<double, std::size_t>> order;
            order.reserve(rows.size());
            for (auto i : rows) order.emplace_back(x(i, feature), i);
            std::sort(order.begin(), order.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            Agg left = empty_like(parent, rows, get);
            Agg right = parent;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                const auto [v, row] = order[i];
                left.add(get(row));
                right.remove(get(row));
                const double next = order[i + 1].first;
                if (next <= v) continue;  // not a boundary between distinct values
                const double dec =
                    parent_imp - (left.n / n_total) * left.impurity() -
                    (right.n / n_total) * right.impurity();
                if (dec > kSplitTol && (!best || dec > best->impurity_decrease)) {
                    best = Split{feature, v + 0.5 * (next - v), false, dec};
                }
            }
        } else {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (auto i : rows) {
                lo = std::min(lo, x(i, feature));
                hi = std::max(hi, x(i, feature));
            }
            if (!(hi > lo)) return std::nullopt;
            std::uniform_real_distribution<double> unif(lo, hi);
            const double thr = unif(rng);
            Agg left = empty_like(parent, rows, get);
            Agg right = parent;
            for (auto i : rows) {
                if (x(i, feature) <= thr) {
                    left.add(get(i));
                    right.remove(get(i));
                }
            }
            const double dec = split_decrease(left, right, parent_imp, n_total);
            if (dec > kSplitTol) best = Split{feature, thr, false, dec};
        }
    } else {
        std::map<double, std::vector<std::size_t>> by_cat;
        for (auto i : rows) by_cat[x(i, feature)].push_back(i);
        if (by_cat.size() < 2) return std::nullopt;
        auto eval_cat = [&](double cat, const std::vector<std::size_t>& members) {
            Agg left = empty_like(parent, rows, get);
            Agg right = parent;
            for (auto i : members) {
                left.add(get(i));
                right.remove(get(i));
            }
            const double dec = split_decrease(left, right, parent_imp, n_total);
            if (dec > kSplitTol && (!best || dec > best->impurity_decrease))
                best = Split{feature, cat, true, dec};
        };
        if (mode == SplitMode::exhaustive) {
            for (const auto& [cat, members] : by_cat) eval_cat(cat, members);
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, by_cat.size() - 1);
            auto it = by_cat.begin();
            std::advance(it, pick(rng));
            eval_cat(it->first, it->second);
        }
    }
    return best;
}

template <class Agg, class GetTarget>
std::optional<Split> find_best_split_impl(const Matrix& x,
                                          const std::vector<bool>& categorical,
                                          std::span<const std::size_t> rows,
                                          std::span<const std::size_t> candidate_features,
                                          Agg parent, GetTarget get, SplitMode mode, Rng& rng) {
    if (rows.size() < 2) return std::nullopt;
    const double parent_imp = parent.impurity();
    std::optional<Split> best;
    for (auto f : candidate_features) {
        auto cand = best_split_for_feature(x, rows, f, categorical[f], parent, parent_imp, get,
                                           mode, rng);
        // Cross-feature ties resolve to the lowest feature index (strict >).
        if (cand && (!best || cand->impurity_decrease > best->impurity_decrease)) best = cand;
    }
    return best;
}

}  // namespace detail

/// Best (feature, threshold) over the candidate set, or nullopt when no split
/// reduces impurity beyond kSplitTol. Exhaustive mode checks every midpoint of
/// sorted distinct values; random_threshold draws one uniform threshold per
/// candidate feature (extra-trees style).
inline std::optional<Split> find_best_split(const Matrix& x,
                                            const std::vector<bool>& categorical,
                                            std::span<const std::size_t> rows,
                                            std::span<const std::size_t> candidate_features,
                                            const TreeTargets& targets, SplitCriterion criterion,
                                            SplitMode mode, Rng& rng) {
    if (criterion == SplitCriterion::gini) {
        detail::GiniAgg parent(targets.n_classes);
        for (auto i : rows) parent.add((*targets.labels)[i]);
        return detail::find_best_split_impl(
            x, categorical, rows, candidate_features, parent,
            [&](std::size_t i) { return (*targets.labels)[i]; }, mode, rng);
    }
    detail::MseAgg parent;
    for (auto i : rows) parent.add((*targets.reals)[i]);
    return detail::find_best_split_impl(
        x, categorical, rows, candidate_features, parent,
        [&](std::size_t i) { return (*targets.reals)[i]; }, mode, rng);
}

struct TreeParams {
    std::size_t max_depth = 16;
    std::size_t min_samples_split = 2;
    SplitMode mode = SplitMode::exhaustive;
    std::size_t max_features = 0;  // candidate features per node; 0 = all
};

namespace detail {

inline std::vector<double> leaf_values(std::span<const std::size_t> rows,
                                       const TreeTargets& targets) {
    if (targets.is_classify()) {
        std::vector<double> probs(targets.n_classes, 0.0);
        for (auto i : rows) probs[(*targets.labels)[i]] += 1.0;
        for (auto& p : probs) p /= static_cast<double>(rows.size());
        return probs;
    }
    double s = 0.0;
    for (auto i : rows) s += (*targets.reals)[i];
    return {s / static_cast<double>(rows.size())};
}

inline std::vector<std::size_t> sample_features(std::size_t d, std::size_t m, Rng& rng) {
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), 0);
    if (m == 0 || m >= d) return all;
    // Partial Fisher-Yates, then sorted so the lowest-index tie rule applies.
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, d - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    all.resize(m);
    std::sort(all.begin(), all.end());
    return all;
}

inline std::int32_t grow_node(Tree& tree, const Matrix& x, const std::vector<bool>& categorical,
                              std::vector<std::size_t>& rows, const TreeTargets& targets,
                              SplitCriterion criterion, const TreeParams& params,
                              std::size_t depth, Rng& rng) {
    const auto idx = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (depth >= params.max_depth || rows.size() < params.min_samples_split) {
        tree.nodes[idx].values = leaf_values(rows, targets);
        return idx;
    }
    const auto features = sample_features(x.cols(), params.max_features, rng);
    const auto split =
        find_best_split(x, categorical, rows, features, targets, criterion, params.mode, rng);
    if (!split) {
        tree.nodes[idx].values = leaf_values(rows, targets);
        return idx;
    }
    std::vector<std::size_t> left_rows, right_rows;
    for (auto i : rows) {
        const double v = x(i, split->feature);
        const bool go_left = split->categorical ? (v == split->threshold) : (v <= split->threshold);
        (go_left ? left_rows : right_rows).push_back(i);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[idx].feature = static_cast<std::uint32_t>(split->feature);
    tree.nodes[idx].threshold = split->threshold;
    tree.nodes[idx].categorical = split->categorical;
    const auto l = grow_node(tree, x, categorical, left_rows, targets, criterion, params,
                             depth + 1, rng);
    const auto r = grow_node(tree, x, categorical, right_rows, targets, criterion, params,
                             depth + 1, rng);
    tree.nodes[idx].left = l;
    tree.nodes[idx].right = r;
    return idx;
}

}  // namespace detail

/// CART recursion: split until max_depth, min_samples_split, or purity.
inline Tree grow_tree(const Matrix& x, const std::vector<bool>& categorical,
                      std::vector<std::size_t> rows, const TreeTargets& targets,
                      SplitCriterion criterion, const TreeParams& params, Rng& rng) {
    if (rows.empty()) throw std::invalid_argument("grow_tree: empty training set");
    Tree tree;
    detail::grow_node(tree, x, categorical, rows, targets, criterion, params, 0, rng);
    return tree;
}

inline Tree grow_tree(const Matrix& x, const std::vector<bool>& categorical,
                      const TreeTargets& targets, SplitCriterion criterion,
                      const TreeParams& params, Rng& rng) {
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), 0);
    return grow_tree(x, categorical, std::move(rows), targets, criterion, params, rng);
}

}  // namespace slx
