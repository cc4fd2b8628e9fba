#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "slx/errors.hpp"
#include "slx/matrix.hpp"
#include "slx/random.hpp"

namespace slx {

constexpr double kStddevFloor = 1e-9;  // clamp for constant features

struct FeatureKind {
    enum class Type { continuous, categorical };
    Type type = Type::continuous;
    std::size_t cardinality = 0;             // categorical only
    std::vector<std::string> levels;         // recorded level table (may be empty)

    bool is_categorical() const { return type == Type::categorical; }

    static FeatureKind cont() { return {}; }
    static FeatureKind cat(std::size_t card, std::vector<std::string> lv = {}) {
        return {Type::categorical, card, std::move(lv)};
    }
};

enum class LabelKind { class_only, score_only, both };

/// Canonical severity order used whenever the class names are drawn from
/// {none, low, medium, high}.
inline int severity_rank(const std::string& name) {
    if (name == "none") return 0;
    if (name == "low") return 1;
    if (name == "medium") return 2;
    if (name == "high") return 3;
    return -1;
}

struct FeatureSchema {
    std::vector<std::string> names;
    std::vector<FeatureKind> kinds;
    LabelKind label_kind = LabelKind::class_only;
    std::vector<std::string> class_levels;
    double score_min = 0.0;
    double score_max = 10.0;
    std::string provenance;  // e.g. "window=20" for windowed datasets

    std::size_t n_features() const { return names.size(); }
    std::size_t n_classes() const { return class_levels.size(); }
    bool has_classes() const { return label_kind != LabelKind::score_only; }
    bool has_scores() const { return label_kind != LabelKind::class_only; }

    void validate() const {
        if (names.size() != kinds.size())
            throw DataError("schema: names/kinds size mismatch");
        std::set<std::string> seen;
        for (const auto& n : names) {
            if (n.empty()) throw DataError("schema: empty feature name");
            if (!seen.insert(n).second) throw DataError("schema: duplicate feature name '" + n + "'");
        }
        std::set<std::string> lv(class_levels.begin(), class_levels.end());
        if (lv.size() != class_levels.size()) throw DataError("schema: duplicate class level");
        if (!(score_min < score_max)) throw DataError("schema: score_min must be < score_max");
        if (has_classes() && class_levels.empty())
            throw DataError("schema: class label kind but no levels");
        // Severity names, when present, must appear in canonical order.
        int last = -1;
        for (const auto& l : class_levels) {
            const int r = severity_rank(l);
            if (r < 0) { last = -1; break; }
            if (r < last) throw DataError("schema: severity levels out of order");
            last = r;
        }
    }
};

inline std::vector<std::string> ordered_severity_levels(std::vector<std::string> levels) {
    const bool all_severity = std::all_of(levels.begin(), levels.end(), [](const std::string& l) {
        return severity_rank(l) >= 0;
    });
    if (all_severity) {
        std::sort(levels.begin(), levels.end(), [](const std::string& a, const std::string& b) {
            return severity_rank(a) < severity_rank(b);
        });
    } else {
        std::sort(levels.begin(), levels.end());
    }
    return levels;
}

struct Dataset {
    FeatureSchema schema;
    Matrix rows;                                   // n x d, categoricals integer-coded
    std::optional<std::vector<std::size_t>> class_labels;  // level indices
    std::optional<std::vector<double>> scores;

    std::size_t n() const { return rows.rows(); }
    std::size_t d() const { return rows.cols(); }

    void validate() const {
        schema.validate();
        if (rows.cols() != schema.n_features()) throw DataError("dataset: width/schema mismatch");
        for (double v : rows.data())
            if (!std::isfinite(v)) throw DataError("dataset: non-finite feature value");
        if (!class_labels && !scores) throw DataError("dataset: neither labels nor scores present");
        if (class_labels) {
            if (class_labels->size() != n()) throw DataError("dataset: label count mismatch");
            for (std::size_t c : *class_labels)
                if (c >= schema.n_classes()) throw DataError("dataset: label index out of range");
        }
        if (scores) {
            if (scores->size() != n()) throw DataError("dataset: score count mismatch");
            for (double s : *scores)
                if (!(s >= schema.score_min && s <= schema.score_max))
                    throw DataError("dataset: score outside bounds");
        }
    }

    Dataset take_rows(std::span<const std::size_t> idx) const {
        Dataset out;
        out.schema = schema;
        out.rows = rows.take_rows(idx);
        if (class_labels) {
            out.class_labels.emplace();
            out.class_labels->reserve(idx.size());
            for (auto i : idx) out.class_labels->push_back((*class_labels)[i]);
        }
        if (scores) {
            out.scores.emplace();
            out.scores->reserve(idx.size());
            for (auto i : idx) out.scores->push_back((*scores)[i]);
        }
        return out;
    }

    /// Projection onto a feature subset; schema follows the columns.
    Dataset take_cols(std::span<const std::size_t> idx) const {
        Dataset out;
        out.schema = schema;
        out.schema.names.clear();
        out.schema.kinds.clear();
        for (auto j : idx) {
            out.schema.names.push_back(schema.names.at(j));
            out.schema.kinds.push_back(schema.kinds.at(j));
        }
        out.rows = rows.take_cols(idx);
        out.class_labels = class_labels;
        out.scores = scores;
        return out;
    }
};

// ---------------------------------------------------------------------------
// Standardizer

struct StandardizerState {
    std::vector<double> mean;
    std::vector<double> stddev;  // >= kStddevFloor

    std::size_t width() const { return mean.size(); }
};

/// Per-feature mean/stddev over the training rows. Categorical features get
/// identity parameters (mean 0, stddev 1) so the transform leaves them alone.
inline StandardizerState fit_standardizer(const Dataset& train) {
    if (train.n() == 0) throw DataError("fit_standardizer: empty training set");
    const std::size_t d = train.d();
    StandardizerState st;
    st.mean.assign(d, 0.0);
    st.stddev.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        if (train.schema.kinds[j].is_categorical()) continue;
        double sum = 0.0;
        for (std::size_t i = 0; i < train.n(); ++i) sum += train.rows(i, j);
        const double mean = sum / static_cast<double>(train.n());
        double ss = 0.0;
        for (std::size_t i = 0; i < train.n(); ++i) {
            const double dv = train.rows(i, j) - mean;
            ss += dv * dv;
        }
        st.mean[j] = mean;
        st.stddev[j] = std::max(std::sqrt(ss / static_cast<double>(train.n())), kStddevFloor);
    }
    return st;
}

inline Matrix apply_standardizer(const StandardizerState& st, const Matrix& x) {
    if (x.cols() != st.width()) throw DataError("apply_standardizer: width mismatch");
    Matrix out = x;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out(i, j) = (out(i, j) - st.mean[j]) / st.stddev[j];
    return out;
}

inline Dataset apply_standardizer(const StandardizerState& st, const Dataset& ds) {
    Dataset out = ds;
    out.rows = apply_standardizer(st, ds.rows);
    return out;
}

inline Matrix invert_standardizer(const StandardizerState& st, const Matrix& x) {
    if (x.cols() != st.width()) throw DataError("invert_standardizer: width mismatch");
    Matrix out = x;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out(i, j) = out(i, j) * st.stddev[j] + st.mean[j];
    return out;
}

// ---------------------------------------------------------------------------
// K-fold planning

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> assignment;  // length n, values in [0, k)
    std::uint64_t seed = 0;
    bool stratified = false;

    std::vector<std::size_t> fold_indices(std::size_t f) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignment.size(); ++i)
            if (assignment[i] == f) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> complement_indices(std::size_t f) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignment.size(); ++i)
            if (assignment[i] != f) out.push_back(i);
        return out;
    }
};

inline FoldPlan split_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed,
                            bool stratified) {
    const std::size_t n = ds.n();
    if (k < 2 || k > n) throw DataError("split_kfold: k out of range [2, n]");
    if (stratified && !ds.class_labels)
        throw DataError("split_kfold: stratification requires class labels");

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.stratified = stratified;
    plan.assignment.assign(n, 0);

    Rng rng = make_rng(seed, 0x6b666f6c64ULL);
    if (!stratified) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < n; ++i) plan.assignment[idx[i]] = i % k;
    } else {
        // Deal each class round-robin with a running fold counter so both
        // per-class and overall sizes stay within one of each other.
        const auto& labels = *ds.class_labels;
        const std::size_t n_classes = ds.schema.n_classes();
        std::size_t next_fold = 0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < n; ++i)
                if (labels[i] == c) idx.push_back(i);
            if (idx.size() < k)
                throw DataError("split_kfold: class '" + ds.schema.class_levels[c] +
                                "' has fewer than k members");
            std::shuffle(idx.begin(), idx.end(), rng);
            for (std::size_t i : idx) {
                plan.assignment[i] = next_fold;
                next_fold = (next_fold + 1) % k;
            }
        }
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Sliding-window regression dataset

/// Turns a score series plus a per-step feature matrix into a supervised
/// dataset: row i holds the flattened feature window [i, i+window) and its
/// target is scores[i+window], so targets never appear in their own window.
inline Dataset make_windows(const std::vector<double>& scores, const Matrix& features,
                            std::size_t window, std::vector<std::string> names = {},
                            double score_min = 0.0, double score_max = 10.0) {
    const std::size_t t_len = scores.size();
    if (window < 1) throw DataError("make_windows: window must be >= 1");
    if (features.rows() != t_len) throw DataError("make_windows: series length mismatch");
    if (t_len <= window) throw DataError("make_windows: series no longer than window");
    const std::size_t d = features.cols();
    if (names.empty()) {
        names.resize(d);
        for (std::size_t j = 0; j < d; ++j) names[j] = "f" + std::to_string(j);
    }

    Dataset out;
    out.schema.label_kind = LabelKind::score_only;
    out.schema.score_min = score_min;
    out.schema.score_max = score_max;
    out.schema.provenance = "window=" + std::to_string(window);
    for (std::size_t a = 0; a < window; ++a) {
        const std::size_t lag = window - a;  // nearest step has lag 1
        for (std::size_t j = 0; j < d; ++j) {
            out.schema.names.push_back(names[j] + "_lag" + std::to_string(lag));
            out.schema.kinds.push_back(FeatureKind::cont());
        }
    }
    const std::size_t n = t_len - window;
    out.rows = Matrix(n, window * d);
    out.scores.emplace(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < window; ++a)
            for (std::size_t j = 0; j < d; ++j)
                out.rows(i, a * d + j) = features(i + a, j);
        (*out.scores)[i] = scores[i + window];
    }
    out.validate();
    return out;
}

}  // namespace slx
