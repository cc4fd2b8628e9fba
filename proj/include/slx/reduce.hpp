#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "slx/ensemble.hpp"
#include "slx/explain.hpp"

namespace slx {

enum class MergeRule { borda, shap_only, morris_only };

inline std::string merge_rule_name(MergeRule r) {
    switch (r) {
        case MergeRule::borda: return "borda";
        case MergeRule::shap_only: return "shap_only";
        case MergeRule::morris_only: return "morris_only";
    }
    return "?";
}

inline MergeRule merge_rule_from_name(const std::string& s) {
    if (s == "borda") return MergeRule::borda;
    if (s == "shap_only") return MergeRule::shap_only;
    if (s == "morris_only") return MergeRule::morris_only;
    throw DataError("unknown merge rule '" + s + "'");
}

struct ReductionPlan {
    std::vector<std::size_t> merged_order;  // all d features by combined rank
    std::vector<std::size_t> selected;      // first k of merged_order
    std::size_t k = 0;
    double fraction = 1.0 / 3.0;
    MergeRule rule = MergeRule::borda;
    GlobalRanking shap_ranking;
    GlobalRanking morris_ranking;
    SuperLearnerSpec reduced_spec;
};

/// Rank position of each feature within a ranking's order.
inline std::vector<std::size_t> rank_positions(const GlobalRanking& r) {
    std::vector<std::size_t> pos(r.order.size());
    for (std::size_t p = 0; p < r.order.size(); ++p) pos[r.order[p]] = p;
    return pos;
}

/// Borda merge of the two global rankings: combined score = mean rank
/// position, sorted ascending; ties broken by the SHAP rank, then by index.
inline std::vector<std::size_t> merge_rankings(const GlobalRanking& shap,
                                               const GlobalRanking& morris,
                                               MergeRule rule = MergeRule::borda) {
    const std::size_t d = shap.order.size();
    if (morris.order.size() != d)
        throw DataError("merge_rankings: rankings cover different feature sets");
    if (rule == MergeRule::shap_only) return shap.order;
    if (rule == MergeRule::morris_only) return morris.order;

    const auto sp = rank_positions(shap);
    const auto mp = rank_positions(morris);
    std::vector<std::size_t> merged(d);
    std::iota(merged.begin(), merged.end(), 0);
    std::sort(merged.begin(), merged.end(), [&](std::size_t a, std::size_t b) {
        const double ca = 0.5 * static_cast<double>(sp[a] + mp[a]);
        const double cb = 0.5 * static_cast<double>(sp[b] + mp[b]);
        if (ca != cb) return ca < cb;
        if (sp[a] != sp[b]) return sp[a] < sp[b];
        return a < b;
    });
    return merged;
}

/// Top-fraction selection: k = explicit override when given, else
/// ceil(fraction * d), clamped to [1, d] by validation.
inline ReductionPlan select_top(std::vector<std::size_t> merged_order, std::size_t d,
                                double fraction = 1.0 / 3.0,
                                std::optional<std::size_t> k_override = std::nullopt) {
    if (merged_order.size() != d) throw DataError("select_top: order length != d");
    std::size_t k;
    if (k_override) {
        k = *k_override;
    } else {
        if (!(fraction > 0.0 && fraction <= 1.0))
            throw DataError("select_top: fraction must be in (0, 1]");
        k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(d)));
    }
    if (k < 1 || k > d) throw DataError("select_top: k out of [1, d]");

    ReductionPlan plan;
    plan.merged_order = std::move(merged_order);
    plan.selected.assign(plan.merged_order.begin(), plan.merged_order.begin() + k);
    plan.k = k;
    plan.fraction = fraction;
    return plan;
}

/// Full planning pass: global SHAP + Morris rankings of a trained model over
/// the dataset, merged and cut at the top fraction. The reduced spec defaults
/// to the compact presets on the same seed.
struct ReduceSettings {
    double fraction = 1.0 / 3.0;
    std::optional<std::size_t> k_override;
    MergeRule rule = MergeRule::borda;
    std::size_t background_size = 100;
    std::size_t n_explained = 200;
    std::size_t n_coalitions = 256;
    std::size_t morris_r = 20;
    std::size_t morris_p = 8;
    std::uint64_t seed = 0;
};

/// Empirical [min, max] per feature; constant columns get a unit span so the
/// Morris grid stays well defined.
inline std::vector<std::pair<double, double>> feature_bounds(const Dataset& ds) {
    std::vector<std::pair<double, double>> bounds(ds.d());
    for (std::size_t j = 0; j < ds.d(); ++j) {
        double lo = ds.rows(0, j), hi = ds.rows(0, j);
        for (std::size_t i = 1; i < ds.n(); ++i) {
            lo = std::min(lo, ds.rows(i, j));
            hi = std::max(hi, ds.rows(i, j));
        }
        if (!(lo < hi)) hi = lo + 1.0;
        bounds[j] = {lo, hi};
    }
    return bounds;
}

/// Morris screening of every prediction channel over the dataset's empirical
/// feature ranges, averaged into one global ranking.
inline GlobalRanking morris_global(const SuperLearnerModel& model, const Dataset& ds,
                                   std::size_t r_trajectories = 20, std::size_t p = 8,
                                   std::uint64_t seed = 0) {
    const auto channels = super_channels(model);
    const auto bounds = feature_bounds(ds);
    GlobalRanking rank;
    rank.method = "morris";
    rank.scores.assign(ds.d(), 0.0);
    for (std::size_t c = 0; c < channels.size(); ++c) {
        const auto r = morris_mas(channels[c], bounds, r_trajectories, p,
                                  mix_seed(seed, 0x6d630000ULL + c));
        for (std::size_t j = 0; j < ds.d(); ++j) rank.scores[j] += r.scores[j];
        rank.sample_count += r.sample_count;
    }
    for (auto& s : rank.scores) s /= static_cast<double>(channels.size());
    rank.order = detail::ranking_order(rank.scores);
    return rank;
}

inline ReductionPlan plan_reduction(const SuperLearnerModel& model, const Dataset& ds,
                                    const ReduceSettings& cfg = {}) {
    const auto channels = super_channels(model);
    ReductionPlan plan;
    plan.shap_ranking = global_mean_abs_shap(channels, ds, cfg.background_size,
                                             cfg.n_explained, cfg.n_coalitions, cfg.seed);
    plan.morris_ranking = morris_global(model, ds, cfg.morris_r, cfg.morris_p, cfg.seed);

    auto cut = select_top(merge_rankings(plan.shap_ranking, plan.morris_ranking, cfg.rule),
                          ds.d(), cfg.fraction, cfg.k_override);
    plan.merged_order = std::move(cut.merged_order);
    plan.selected = std::move(cut.selected);
    plan.k = cut.k;
    plan.fraction = cut.fraction;
    plan.rule = cfg.rule;

    plan.reduced_spec = model.spec;
    plan.reduced_spec.base_specs = reduced_base_roster(model.spec.task, model.spec.seed);
    return plan;
}

/// Refit on the selected columns; the returned model still accepts full-width
/// rows and projects internally.
inline SuperLearnerModel retrain_reduced(const Dataset& ds, const ReductionPlan& plan,
                                         std::size_t threads = 1) {
    for (std::size_t j : plan.selected)
        if (j >= ds.d()) throw DataError("retrain_reduced: selected feature out of range");
    return fit_super(ds, plan.reduced_spec, plan.selected, threads);
}

}  // namespace slx
