#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "slx/data.hpp"

namespace slx {

/// Black-box scalar-channel model: an n x d matrix in, n reals out. For
/// classifiers one channel per class probability; regressors expose one.
using PredictFn = std::function<std::vector<double>(const Matrix&)>;

struct Attribution {
    std::vector<double> feature_values;  // the explained row
    std::vector<double> phi;
    double base_value = 0.0;  // expected prediction over the background
    std::string method;
};

struct GlobalRanking {
    std::vector<double> scores;        // per feature, >= 0
    std::vector<std::size_t> order;    // descending score; ties -> lower index
    std::string method;
    std::size_t sample_count = 0;
};

struct PdpCurve {
    std::size_t feature = 0;
    std::vector<double> grid;    // strictly ascending
    std::vector<double> values;  // mean prediction per grid point
};

namespace detail {

inline std::vector<std::size_t> ranking_order(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return order;
}

/// Coalition values v(S) for a set of masks: v(S) = mean over background rows
/// of f applied to x with off-coalition features imputed from the background.
/// Evaluations are batched through f in chunks.
inline std::vector<double> coalition_values(const PredictFn& f, const Matrix& background,
                                            std::span<const double> x,
                                            const std::vector<std::uint64_t>& masks) {
    const std::size_t d = x.size();
    const std::size_t nb = background.rows();
    const std::size_t chunk = std::max<std::size_t>(1, 8192 / std::max<std::size_t>(nb, 1));
    std::vector<double> values(masks.size(), 0.0);

    for (std::size_t start = 0; start < masks.size(); start += chunk) {
        const std::size_t stop = std::min(start + chunk, masks.size());
        Matrix batch((stop - start) * nb, d);
        std::size_t r = 0;
        for (std::size_t m = start; m < stop; ++m) {
            for (std::size_t b = 0; b < nb; ++b, ++r) {
                const auto bg = background.row(b);
                for (std::size_t j = 0; j < d; ++j)
                    batch(r, j) = (masks[m] >> j) & 1ULL ? x[j] : bg[j];
            }
        }
        const std::vector<double> out = f(batch);
        r = 0;
        for (std::size_t m = start; m < stop; ++m) {
            double sum = 0.0;
            for (std::size_t b = 0; b < nb; ++b, ++r) sum += out[r];
            values[m] = sum / static_cast<double>(nb);
        }
    }
    return values;
}

inline double binomial(std::size_t n, std::size_t k) {
    double v = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        v = v * static_cast<double>(n - i) / static_cast<double>(i + 1);
    return v;
}

/// Shapley kernel weight for a coalition of size s out of d features.
inline double shapley_kernel(std::size_t d, std::size_t s) {
    return static_cast<double>(d - 1) /
           (binomial(d, s) * static_cast<double>(s) * static_cast<double>(d - s));
}

/// All bitmasks of popcount s over d bits, ascending numeric order.
inline void append_masks_of_size(std::size_t d, std::size_t s,
                                 std::vector<std::uint64_t>& out) {
    if (s == 0) {
        out.push_back(0);
        return;
    }
    std::uint64_t m = (1ULL << s) - 1ULL;  // Gosper's hack
    const std::uint64_t limit = 1ULL << d;
    while (m < limit) {
        out.push_back(m);
        const std::uint64_t c = m & (~m + 1);
        const std::uint64_t r = m + c;
        m = (((r ^ m) >> 2) / c) | r;
    }
}

}  // namespace detail

/// Exact Shapley values by full coalition enumeration; testing oracle for the
/// sampled estimator. O(2^d) coalition values.
inline Attribution exact_shapley(const PredictFn& f, const Matrix& background,
                                 std::span<const double> x) {
    const std::size_t d = x.size();
    if (d > 20) throw DataError("exact_shapley: d > 20 not enumerable");
    if (background.rows() == 0) throw DataError("exact_shapley: empty background");

    std::vector<std::uint64_t> masks(1ULL << d);
    std::iota(masks.begin(), masks.end(), 0ULL);
    const std::vector<double> v = detail::coalition_values(f, background, x, masks);

    std::vector<double> fact(d + 1, 1.0);
    for (std::size_t i = 1; i <= d; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

    Attribution att;
    att.feature_values.assign(x.begin(), x.end());
    att.method = "shapley_exact";
    att.base_value = v[0];
    att.phi.assign(d, 0.0);
    for (std::uint64_t s = 0; s < masks.size(); ++s) {
        const std::size_t size = static_cast<std::size_t>(std::popcount(s));
        for (std::size_t i = 0; i < d; ++i) {
            if ((s >> i) & 1ULL) continue;
            const double w = fact[size] * fact[d - size - 1] / fact[d];
            att.phi[i] += w * (v[s | (1ULL << i)] - v[s]);
        }
    }
    return att;
}

/// Kernel SHAP: weighted least squares over coalitions with Shapley kernel
/// weights. Small-size coalition pairs are enumerated completely while the
/// budget lasts; the remainder is sampled. The efficiency constraint
/// (base + sum(phi) = f(x)) is imposed exactly by variable elimination.
inline Attribution kernel_shap(const PredictFn& f, const Matrix& background,
                               std::span<const double> x, std::size_t n_coalitions,
                               std::uint64_t seed) {
    const std::size_t d = x.size();
    if (background.rows() == 0) throw DataError("kernel_shap: empty background");
    if (n_coalitions < d + 2) throw DataError("kernel_shap: need at least d + 2 coalitions");
    if (d == 1) {
        // Single feature: efficiency pins the whole attribution.
        const std::vector<std::uint64_t> masks{0ULL, 1ULL};
        const auto v = detail::coalition_values(f, background, x, masks);
        Attribution att;
        att.feature_values.assign(x.begin(), x.end());
        att.method = "shap";
        att.base_value = v[0];
        att.phi = {v[1] - v[0]};
        return att;
    }

    // Interior coalition masks and their regression weights.
    std::vector<std::uint64_t> masks;
    std::vector<double> weights;
    const bool enumerable = d < 26 && n_coalitions >= (1ULL << d);
    std::size_t budget = n_coalitions - 2;

    if (enumerable) {
        for (std::size_t s = 1; s < d; ++s) {
            std::vector<std::uint64_t> ms;
            detail::append_masks_of_size(d, s, ms);
            const double w = detail::shapley_kernel(d, s);
            for (auto m : ms) {
                masks.push_back(m);
                weights.push_back(w);
            }
        }
    } else {
        // Complete size pairs (s, d-s) from the outside in while they fit.
        std::vector<bool> size_done(d, false);
        for (std::size_t s = 1; s <= d / 2; ++s) {
            const std::size_t mirror = d - s;
            double count = detail::binomial(d, s);
            if (mirror != s) count += detail::binomial(d, mirror);
            if (count > static_cast<double>(budget)) break;
            for (std::size_t size : {s, mirror}) {
                if (size_done[size]) continue;
                std::vector<std::uint64_t> ms;
                detail::append_masks_of_size(d, size, ms);
                const double w = detail::shapley_kernel(d, size);
                for (auto m : ms) {
                    masks.push_back(m);
                    weights.push_back(w);
                }
                size_done[size] = true;
                budget -= ms.size();
            }
        }
        // Sample the remaining budget from the unfinished sizes, choosing a
        // size in proportion to its total kernel weight, then a uniform mask
        // of that size. Repeated draws accumulate into one weighted row.
        std::vector<std::size_t> open_sizes;
        std::vector<double> size_weight;
        double open_total = 0.0;
        for (std::size_t s = 1; s < d; ++s) {
            if (size_done[s]) continue;
            open_sizes.push_back(s);
            const double w = detail::binomial(d, s) * detail::shapley_kernel(d, s);
            size_weight.push_back(w);
            open_total += w;
        }
        if (!open_sizes.empty() && budget > 0) {
            Rng rng = make_rng(seed, 0x73686170ULL);
            std::discrete_distribution<std::size_t> pick_size(size_weight.begin(),
                                                              size_weight.end());
            std::map<std::uint64_t, double> counts;
            std::vector<std::size_t> perm(d);
            std::iota(perm.begin(), perm.end(), 0);
            for (std::size_t t = 0; t < budget; ++t) {
                const std::size_t s = open_sizes[pick_size(rng)];
                std::shuffle(perm.begin(), perm.end(), rng);
                std::uint64_t m = 0;
                for (std::size_t j = 0; j < s; ++j) m |= 1ULL << perm[j];
                counts[m] += 1.0;
            }
            // Scale so the sampled block carries the open sizes' total weight.
            const double scale = open_total / static_cast<double>(budget);
            for (const auto& [m, c] : counts) {
                masks.push_back(m);
                weights.push_back(c * scale);
            }
        }
    }

    // Coalition values, plus the forced empty and full coalitions.
    std::vector<std::uint64_t> eval_masks = masks;
    eval_masks.push_back(0);
    eval_masks.push_back((1ULL << d) - 1ULL);
    const std::vector<double> v = detail::coalition_values(f, background, x, eval_masks);
    const double v0 = v[masks.size()];
    const double v_full = v[masks.size() + 1];
    const double delta = v_full - v0;

    // WLS with phi_{d-1} eliminated through sum(phi) = delta:
    //   v(S) - v0 - z_{d-1} delta = sum_{j<d-1} (z_j - z_{d-1}) phi_j.
    const std::size_t p = d - 1;
    std::vector<double> a(p * p, 0.0), bvec(p, 0.0);
    std::vector<double> z(d);
    for (std::size_t m = 0; m < masks.size(); ++m) {
        for (std::size_t j = 0; j < d; ++j) z[j] = (masks[m] >> j) & 1ULL ? 1.0 : 0.0;
        const double y = v[m] - v0 - z[d - 1] * delta;
        const double w = weights[m];
        for (std::size_t j = 0; j < p; ++j) {
            const double xj = z[j] - z[d - 1];
            bvec[j] += w * xj * y;
            for (std::size_t l = j; l < p; ++l)
                a[j * p + l] += w * xj * (z[l] - z[d - 1]);
        }
    }
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t l = 0; l < j; ++l) a[j * p + l] = a[l * p + j];
    for (std::size_t j = 0; j < p; ++j) a[j * p + j] += 1e-12;  // conditioning
    solve_spd_inplace(a, bvec, p);

    Attribution att;
    att.feature_values.assign(x.begin(), x.end());
    att.method = "shap";
    att.base_value = v0;
    att.phi.assign(d, 0.0);
    double sum = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        att.phi[j] = bvec[j];
        sum += bvec[j];
    }
    att.phi[d - 1] = delta - sum;
    return att;
}

/// Global SHAP importance: mean |phi| over a seeded sample of explained rows
/// and over all prediction channels.
inline GlobalRanking global_mean_abs_shap(const std::vector<PredictFn>& channels,
                                          const Dataset& ds, std::size_t background_size = 100,
                                          std::size_t n_explained = 200,
                                          std::size_t n_coalitions = 256,
                                          std::uint64_t seed = 0) {
    if (ds.n() == 0) throw DataError("global_mean_abs_shap: empty dataset");
    if (channels.empty()) throw DataError("global_mean_abs_shap: no prediction channels");
    const std::size_t d = ds.d();

    auto sample_rows = [&](std::size_t count, std::uint64_t stream) {
        std::vector<std::size_t> idx(ds.n());
        std::iota(idx.begin(), idx.end(), 0);
        if (count < ds.n()) {
            Rng rng = make_rng(seed, stream);
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(count);
            std::sort(idx.begin(), idx.end());
        }
        return idx;
    };
    const Matrix background = ds.rows.take_rows(sample_rows(background_size, 0x626bULL));
    const auto explain_idx = sample_rows(n_explained, 0x6578ULL);

    GlobalRanking rank;
    rank.method = "shap";
    rank.sample_count = explain_idx.size() * channels.size();
    rank.scores.assign(d, 0.0);
    std::size_t unit = 0;
    for (std::size_t c = 0; c < channels.size(); ++c) {
        for (std::size_t i : explain_idx) {
            const Attribution att = kernel_shap(channels[c], background, ds.rows.row(i),
                                                n_coalitions, mix_seed(seed, 0x670000ULL + unit));
            for (std::size_t j = 0; j < d; ++j) rank.scores[j] += std::abs(att.phi[j]);
            ++unit;
        }
    }
    for (auto& s : rank.scores) s /= static_cast<double>(rank.sample_count);
    rank.order = detail::ranking_order(rank.scores);
    return rank;
}

/// Morris elementary-effects screening. Each of r trajectories starts at a
/// random grid point of the p-level unit lattice and perturbs every feature
/// exactly once by +-delta; MAS_i is the mean |EE_i| over trajectories.
inline GlobalRanking morris_mas(const PredictFn& f,
                                const std::vector<std::pair<double, double>>& bounds,
                                std::size_t r_trajectories = 20, std::size_t p = 8,
                                std::uint64_t seed = 0) {
    const std::size_t d = bounds.size();
    if (d == 0) throw DataError("morris_mas: no features");
    for (const auto& [lo, hi] : bounds)
        if (!(lo < hi)) throw DataError("morris_mas: invalid bounds (lo >= hi)");
    if (p < 2 || p % 2 != 0) throw DataError("morris_mas: p must be even and >= 2");
    if (r_trajectories < 1) throw DataError("morris_mas: need at least one trajectory");

    const double delta = static_cast<double>(p) / (2.0 * static_cast<double>(p - 1));
    auto to_actual = [&](const std::vector<double>& u) {
        std::vector<double> x(d);
        for (std::size_t j = 0; j < d; ++j)
            x[j] = bounds[j].first + u[j] * (bounds[j].second - bounds[j].first);
        return x;
    };

    GlobalRanking rank;
    rank.method = "morris";
    rank.sample_count = r_trajectories;
    rank.scores.assign(d, 0.0);

    Rng rng = make_rng(seed, 0x6d6f72ULL);
    std::uniform_int_distribution<std::size_t> pick_level(0, p / 2 - 1);
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), 0);

    for (std::size_t t = 0; t < r_trajectories; ++t) {
        // Base point restricted to levels where +delta stays inside [0, 1].
        std::vector<double> u(d);
        for (std::size_t j = 0; j < d; ++j)
            u[j] = static_cast<double>(pick_level(rng)) / static_cast<double>(p - 1);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> sign(d);
        for (std::size_t j = 0; j < d; ++j)
            sign[j] = (rng() & 1ULL) ? 1.0 : -1.0;
        // A negative step from a low base would exit the cube; flip it.
        for (std::size_t j = 0; j < d; ++j)
            if (sign[j] < 0.0 && u[j] - delta < -1e-12) sign[j] = 1.0;
            else if (sign[j] > 0.0 && u[j] + delta > 1.0 + 1e-12) sign[j] = -1.0;

        Matrix pts(d + 1, d);
        pts.set_row(0, to_actual(u));
        std::vector<double> cur = u;
        for (std::size_t step = 0; step < d; ++step) {
            cur[perm[step]] += sign[perm[step]] * delta;
            pts.set_row(step + 1, to_actual(cur));
        }
        const std::vector<double> out = f(pts);
        for (std::size_t step = 0; step < d; ++step) {
            const std::size_t j = perm[step];
            const double ee = (out[step + 1] - out[step]) / (sign[j] * delta);
            rank.scores[j] += std::abs(ee);
        }
    }
    for (auto& s : rank.scores) s /= static_cast<double>(r_trajectories);
    rank.order = detail::ranking_order(rank.scores);
    return rank;
}

struct LimeConfig {
    std::vector<double> scale;  // per-feature perturbation stddev (training stddev)
    std::size_t n_samples = 500;
    double kernel_width = 0.0;  // 0 -> default 0.75 * sqrt(d), in standardized space
    double ridge_lambda = 1e-3;
};

/// Local linear surrogate: Gaussian perturbations around x, exponential
/// kernel weights on standardized distance, weighted ridge fit. phi holds
/// the local slopes in raw feature units; base_value the local intercept.
inline Attribution lime_explain(const PredictFn& f, std::span<const double> x,
                                const LimeConfig& cfg, std::uint64_t seed) {
    const std::size_t d = x.size();
    if (cfg.scale.size() != d) throw DataError("lime_explain: scale width mismatch");
    if (cfg.n_samples < d + 2) throw DataError("lime_explain: need at least d + 2 samples");
    const double width = cfg.kernel_width > 0.0
                             ? cfg.kernel_width
                             : 0.75 * std::sqrt(static_cast<double>(d));

    Rng rng = make_rng(seed, 0x6c696d65ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t n = cfg.n_samples;
    Matrix samples(n, d);   // raw space, row 0 = x itself
    Matrix u(n, d);         // standardized deviations from x
    samples.set_row(0, x);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double uij = gauss(rng);
            u(i, j) = uij;
            samples(i, j) = x[j] + uij * std::max(cfg.scale[j], kStddevFloor);
        }
    }
    const std::vector<double> y = f(samples);

    // Weighted ridge on [u, 1] with the intercept unpenalized.
    const std::size_t q = d + 1;
    std::vector<double> a(q * q, 0.0), b(q, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double dist2 = squared_distance(u.row(i), std::vector<double>(d, 0.0));
        const double w = std::exp(-dist2 / (width * width));
        for (std::size_t j = 0; j < q; ++j) {
            const double xj = j < d ? u(i, j) : 1.0;
            b[j] += w * xj * y[i];
            for (std::size_t l = j; l < q; ++l) {
                const double xl = l < d ? u(i, l) : 1.0;
                a[j * q + l] += w * xj * xl;
            }
        }
    }
    for (std::size_t j = 0; j < q; ++j)
        for (std::size_t l = 0; l < j; ++l) a[j * q + l] = a[l * q + j];
    for (std::size_t j = 0; j < d; ++j) a[j * q + j] += cfg.ridge_lambda;
    a[d * q + d] += 1e-12;
    solve_spd_inplace(a, b, q);

    Attribution att;
    att.feature_values.assign(x.begin(), x.end());
    att.method = "lime";
    att.base_value = b[d];
    att.phi.resize(d);
    for (std::size_t j = 0; j < d; ++j)
        att.phi[j] = b[j] / std::max(cfg.scale[j], kStddevFloor);  // back to raw units
    return att;
}

/// Partial dependence over the empirical quantile grid of one feature.
inline PdpCurve pdp_curve(const PredictFn& f, const Dataset& ds, std::size_t feature,
                          std::size_t grid_size = 20) {
    if (feature >= ds.d()) throw DataError("pdp_curve: feature index out of range");
    if (grid_size < 2) throw DataError("pdp_curve: grid_size must be >= 2");
    if (ds.n() == 0) throw DataError("pdp_curve: empty dataset");

    std::vector<double> col = ds.rows.col_copy(feature);
    std::sort(col.begin(), col.end());
    PdpCurve curve;
    curve.feature = feature;
    for (std::size_t g = 0; g < grid_size; ++g) {
        const double q = static_cast<double>(g) / static_cast<double>(grid_size - 1);
        const std::size_t idx = static_cast<std::size_t>(
            std::llround(q * static_cast<double>(col.size() - 1)));
        const double v = col[idx];
        if (curve.grid.empty() || v > curve.grid.back()) curve.grid.push_back(v);
    }

    for (double g : curve.grid) {
        Matrix forced = ds.rows;
        for (std::size_t i = 0; i < forced.rows(); ++i) forced(i, feature) = g;
        const std::vector<double> out = f(forced);
        double mean = 0.0;
        for (double v : out) mean += v;
        curve.values.push_back(mean / static_cast<double>(out.size()));
    }
    return curve;
}

}  // namespace slx
