// Acceptance harness: one pass/fail line per shipping criterion, exit 0 only
// when every criterion holds. Each check is self-contained and seeds its own
// data so the run is reproducible end to end.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slx/slx.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

int g_failures = 0;

void report(int idx, const std::string& title, bool ok, double secs,
            const std::string& detail = "") {
    if (!ok) ++g_failures;
    std::ostringstream line;
    line << "[" << (idx < 10 ? " " : "") << idx << "/11] " << (ok ? "PASS" : "FAIL") << "  "
         << title << "  (" << std::fixed << secs << "s)";
    std::cout.precision(1);
    std::cout << line.str();
    if (!detail.empty()) std::cout << "  -- " << detail;
    std::cout << std::endl;
}

template <typename F>
void criterion(int idx, const std::string& title, F&& body) {
    const auto t0 = clock_type::now();
    bool ok = false;
    std::string detail;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(clock_type::now() - t0).count();
    report(idx, title, ok, secs, detail);
}

// ---------------------------------------------------------------------------
// shared helpers

slx::Matrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
    slx::Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    slx::Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) = gauss(rng);
    return m;
}

/// Random smooth model: linear terms plus a sparse set of pairwise products.
slx::PredictFn random_model(std::size_t d, std::uint64_t seed) {
    slx::Rng rng(seed);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    std::vector<double> a(d);
    for (auto& v : a) v = unif(rng);
    std::vector<std::tuple<std::size_t, std::size_t, double>> cross;
    for (std::size_t j = 0; j + 1 < d; ++j)
        if ((j + seed) % 3 == 0) cross.emplace_back(j, j + 1, unif(rng));
    const double c = unif(rng);
    return [=](const slx::Matrix& x) {
        std::vector<double> out(x.rows(), c);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < d; ++j) out[i] += a[j] * x(i, j);
            for (const auto& [p, q, w] : cross) out[i] += w * x(i, p) * x(i, q);
        }
        return out;
    };
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::string work_path(const std::string& name) {
    const std::string dir = std::string(SLNS_WORK_DIR) + "/acceptance";
    std::filesystem::create_directories(dir);
    return dir + "/" + name;
}

// ---------------------------------------------------------------------------
// 1. metric implementations vs brute-force oracles

bool check_metrics(std::string& detail) {
    slx::Rng rng(101);
    std::uniform_int_distribution<std::size_t> pick_n(20, 200);
    std::uniform_int_distribution<std::size_t> pick_k(2, 4);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst = 0.0;

    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = pick_n(rng);
        const std::size_t k = pick_k(rng);
        std::vector<std::size_t> yt(n), yp(n);
        slx::Matrix probs(n, k);
        for (std::size_t i = 0; i < n; ++i) {
            yt[i] = rng() % k;
            yp[i] = rng() % k;
            for (std::size_t c = 0; c < k; ++c)
                probs(i, c) = std::floor(unif(rng) * 8.0) / 8.0;  // coarse -> ties
        }
        const auto rep = slx::classification_metrics(yt, yp, probs);

        // brute-force confusion-based metrics
        std::size_t correct = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (yt[i] == yp[i]) ++correct;
        worst = std::max(worst,
                         std::abs(rep.accuracy - static_cast<double>(correct) / double(n)));
        for (std::size_t c = 0; c < k; ++c) {
            double tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (yt[i] == c && yp[i] == c) ++tp;
                if (yt[i] != c && yp[i] == c) ++fp;
                if (yt[i] == c && yp[i] != c) ++fn;
            }
            const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
            const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
            const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
            worst = std::max({worst, std::abs(rep.per_class[c].precision - prec),
                              std::abs(rep.per_class[c].recall - rec),
                              std::abs(rep.per_class[c].f1 - f1)});

            // AUC pairwise oracle
            double wins = 0.0, pairs = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (yt[i] != c) continue;
                for (std::size_t j = 0; j < n; ++j) {
                    if (yt[j] == c) continue;
                    pairs += 1.0;
                    if (probs(i, c) > probs(j, c)) wins += 1.0;
                    else if (probs(i, c) == probs(j, c)) wins += 0.5;
                }
            }
            const double auc = pairs > 0 ? wins / pairs : 0.5;
            worst = std::max(worst, std::abs(rep.auc_per_class[c] - auc));
        }

        // regression metrics, brute force
        std::vector<double> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = unif(rng) * 10.0;
            p[i] = unif(rng) * 10.0;
        }
        const auto rrep = slx::regression_metrics(t, p);
        double se = 0, ae = 0, mt = 0, mp = 0;
        for (std::size_t i = 0; i < n; ++i) {
            se += (t[i] - p[i]) * (t[i] - p[i]);
            ae += std::abs(t[i] - p[i]);
            mt += t[i];
            mp += p[i];
        }
        mt /= double(n);
        mp /= double(n);
        double sst = 0, cov = 0, vp = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sst += (t[i] - mt) * (t[i] - mt);
            cov += (t[i] - mt) * (p[i] - mp);
            vp += (p[i] - mp) * (p[i] - mp);
        }
        worst = std::max({worst, std::abs(rrep.rmse - std::sqrt(se / double(n))),
                          std::abs(rrep.mae - ae / double(n)),
                          std::abs(rrep.r2 - (1.0 - se / sst)),
                          std::abs(rrep.plcc - cov / std::sqrt(sst * vp))});
    }
    std::ostringstream os;
    os << "max deviation " << worst;
    detail = os.str();
    return worst <= 1e-9;
}

// ---------------------------------------------------------------------------
// 2. sampled Shapley estimates vs exact enumeration

bool check_shapley_fidelity(std::string& detail) {
    double worst_full = 0.0;
    for (int m = 0; m < 20; ++m) {
        const std::size_t d = 3 + static_cast<std::size_t>(m) % 6;
        const auto f = random_model(d, 400 + static_cast<std::uint64_t>(m));
        const auto bg = random_matrix(16, d, 500 + static_cast<std::uint64_t>(m));
        const auto x = random_matrix(1, d, 600 + static_cast<std::uint64_t>(m));
        const auto exact = slx::exact_shapley(f, bg, x.row(0));
        const auto est = slx::kernel_shap(f, bg, x.row(0), std::size_t{1} << d, 7);
        worst_full = std::max(worst_full, max_abs_diff(exact.phi, est.phi));
    }

    const std::size_t d12 = 12;
    const auto f = random_model(d12, 900);
    const auto bg = random_matrix(16, d12, 901);
    const auto x = random_matrix(1, d12, 902);
    const auto exact = slx::exact_shapley(f, bg, x.row(0));
    const auto est = slx::kernel_shap(f, bg, x.row(0), 2048, 11);
    const double err12 = max_abs_diff(exact.phi, est.phi);

    std::ostringstream os;
    os << "full-enum err " << worst_full << ", sampled d=12 err " << err12;
    detail = os.str();
    return worst_full <= 1e-6 && err12 < 0.05;
}

// ---------------------------------------------------------------------------
// 3. one-at-a-time screening on affine and constant functions

bool check_morris_analytic(std::string& detail) {
    const std::size_t d = 5;
    std::vector<double> coef{2.0, -5.0, 0.0, 0.25, 1e3};
    const slx::PredictFn affine = [&](const slx::Matrix& x) {
        std::vector<double> out(x.rows(), 3.0);
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < d; ++j) out[i] += coef[j] * x(i, j);
        return out;
    };
    std::vector<std::pair<double, double>> unit(d, {0.0, 1.0});

    double worst = 0.0;
    for (std::size_t r : {std::size_t{1}, std::size_t{4}, std::size_t{20}})
        for (std::size_t p : {std::size_t{2}, std::size_t{4}, std::size_t{8}})
            for (std::uint64_t seed : {0ULL, 7ULL, 123456789ULL}) {
                const auto rank = slx::morris_mas(affine, unit, r, p, seed);
                for (std::size_t j = 0; j < d; ++j)
                    worst = std::max(worst, std::abs(rank.scores[j] - std::abs(coef[j])));
            }

    const slx::PredictFn constant = [](const slx::Matrix& x) {
        return std::vector<double>(x.rows(), 42.0);
    };
    const auto crank = slx::morris_mas(constant, unit, 10, 8, 5);
    double cmax = 0.0;
    for (double s : crank.scores) cmax = std::max(cmax, std::abs(s));

    std::ostringstream os;
    os << "affine deviation " << worst << ", constant max " << cmax;
    detail = os.str();
    return worst <= 1e-9 && cmax == 0.0;
}

// ---------------------------------------------------------------------------
// 4. attribution axioms: additivity to f(x), dummy features, dependence curves

bool check_explainer_axioms(std::string& detail) {
    double worst_eff = 0.0;
    for (int t = 0; t < 10; ++t) {
        const std::size_t d = 10;
        const auto f = random_model(d, 1000 + static_cast<std::uint64_t>(t));
        const auto bg = random_matrix(12, d, 1100 + static_cast<std::uint64_t>(t));
        const auto x = random_matrix(1, d, 1200 + static_cast<std::uint64_t>(t));
        const auto att = slx::kernel_shap(f, bg, x.row(0), 200, 13);  // sampled path
        double sum = att.base_value;
        for (double phi : att.phi) sum += phi;
        slx::Matrix one(1, d);
        one.set_row(0, x.row(0));
        worst_eff = std::max(worst_eff, std::abs(sum - f(one)[0]));
    }

    // feature 0 provably ignored by the model
    const std::size_t d = 6;
    const slx::PredictFn ignores0 = [](const slx::Matrix& x) {
        std::vector<double> out(x.rows(), 0.0);
        for (std::size_t i = 0; i < x.rows(); ++i)
            out[i] = 3.0 * x(i, 1) - x(i, 2) * x(i, 3) + 0.5 * x(i, 5);
        return out;
    };
    const auto bg = random_matrix(20, d, 1300);
    const auto x = random_matrix(1, d, 1301);
    const double dummy_exact = std::abs(slx::exact_shapley(ignores0, bg, x.row(0)).phi[0]);
    const double dummy_kernel =
        std::abs(slx::kernel_shap(ignores0, bg, x.row(0), std::size_t{1} << d, 3).phi[0]);

    // dependence curve of an additive model vs its analytic form
    slx::Dataset ds;
    ds.rows = random_matrix(60, 3, 1400);
    ds.schema.label_kind = slx::LabelKind::score_only;
    for (int j = 0; j < 3; ++j) {
        ds.schema.names.push_back("f" + std::to_string(j));
        ds.schema.kinds.push_back(slx::FeatureKind::cont());
    }
    ds.scores = std::vector<double>(60, 0.0);
    const slx::PredictFn additive = [](const slx::Matrix& x) {
        std::vector<double> out(x.rows(), 0.0);
        for (std::size_t i = 0; i < x.rows(); ++i)
            out[i] = 2.0 * x(i, 0) + std::sin(x(i, 1)) - 0.5 * x(i, 2) * x(i, 2);
        return out;
    };
    double mean_sin = 0.0, mean_sq = 0.0, mean_lin = 0.0;
    for (std::size_t i = 0; i < 60; ++i) {
        mean_lin += 2.0 * ds.rows(i, 0);
        mean_sin += std::sin(ds.rows(i, 1));
        mean_sq += -0.5 * ds.rows(i, 2) * ds.rows(i, 2);
    }
    mean_lin /= 60.0;
    mean_sin /= 60.0;
    mean_sq /= 60.0;
    double worst_pdp = 0.0;
    const auto c0 = slx::pdp_curve(additive, ds, 0, 15);
    for (std::size_t g = 0; g < c0.grid.size(); ++g)
        worst_pdp = std::max(worst_pdp,
                             std::abs(c0.values[g] - (2.0 * c0.grid[g] + mean_sin + mean_sq)));
    const auto c1 = slx::pdp_curve(additive, ds, 1, 15);
    for (std::size_t g = 0; g < c1.grid.size(); ++g)
        worst_pdp = std::max(
            worst_pdp, std::abs(c1.values[g] - (std::sin(c1.grid[g]) + mean_lin + mean_sq)));

    std::ostringstream os;
    os << "efficiency gap " << worst_eff << ", dummy " << std::max(dummy_exact, dummy_kernel)
       << ", curve " << worst_pdp;
    detail = os.str();
    return worst_eff <= 1e-6 && dummy_exact <= 1e-12 && dummy_kernel <= 1e-9 &&
           worst_pdp <= 1e-9;
}

// ---------------------------------------------------------------------------
// 5. stacked meta-features never leak a row's own target

bool check_no_leakage(std::string& detail) {
    for (int trial = 0; trial < 20; ++trial) {
        slx::SyntheticSpec sp;
        sp.n = 80;
        sp.d = 4;
        sp.informative = {0, 1};
        sp.n_classes = 3;
        sp.noise_sigma = 0.3;
        sp.seed = 5000 + static_cast<std::uint64_t>(trial);
        auto ds = slx::generate_planted(sp);
        ds.schema.label_kind = slx::LabelKind::score_only;
        ds.class_labels.reset();

        slx::SuperLearnerSpec spec;
        spec.task = slx::Task::regress;
        spec.seed = static_cast<std::uint64_t>(trial);
        spec.meta_folds = 3;
        auto knn = slx::LearnerSpec::defaults(slx::Family::knn, slx::Task::regress, spec.seed);
        auto rf = slx::LearnerSpec::defaults(slx::Family::random_forest, slx::Task::regress,
                                             spec.seed);
        rf.hp.n_estimators = 8;
        spec.base_specs = {knn, rf};
        spec.meta_spec =
            slx::LearnerSpec::defaults(slx::Family::linear, slx::Task::regress, spec.seed);

        slx::Rng rng(9000 + static_cast<std::uint64_t>(trial));
        const std::size_t i = rng() % ds.n();
        const auto meta = slx::build_oof_meta(ds, spec);

        auto flipped = ds;
        (*flipped.scores)[i] = std::fmod((*flipped.scores)[i] + 3.7, 10.0);
        const auto meta2 = slx::build_oof_meta(flipped, spec);

        bool row_changed = false, any_changed = false;
        for (std::size_t c = 0; c < meta.rows.cols(); ++c)
            if (meta.rows(i, c) != meta2.rows(i, c)) row_changed = true;
        for (std::size_t r = 0; r < meta.rows.rows(); ++r)
            for (std::size_t c = 0; c < meta.rows.cols(); ++c)
                if (meta.rows(r, c) != meta2.rows(r, c)) any_changed = true;
        if (row_changed || !any_changed) {
            std::ostringstream os;
            os << "trial " << trial << " row " << i
               << (row_changed ? ": own-row meta-features moved" : ": flip had no effect at all");
            detail = os.str();
            return false;
        }
    }
    detail = "20 target-flip trials left the flipped row's meta-features untouched";
    return true;
}

// ---------------------------------------------------------------------------
// 6. planted-feature recovery by the merged importance ranking

bool check_planted_recovery(std::string& detail) {
    const std::vector<std::size_t> planted{3, 7, 11, 19, 26};
    int successes = 0;
    std::ostringstream hits;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        slx::SyntheticSpec sp;
        sp.n = 2000;
        sp.d = 30;
        sp.informative = planted;
        sp.n_classes = 3;
        sp.noise_sigma = 0.5;
        sp.seed = 7000 + seed;
        const auto ds = slx::generate_planted(sp);

        slx::SuperLearnerSpec spec;
        spec.task = slx::Task::classify;
        spec.seed = seed;
        spec.meta_folds = 3;
        auto rf = slx::LearnerSpec::defaults(slx::Family::random_forest, slx::Task::classify,
                                             seed);
        rf.hp.n_estimators = 20;
        rf.hp.max_depth = 12;
        spec.base_specs = {rf};
        spec.meta_spec =
            slx::LearnerSpec::defaults(slx::Family::logistic, slx::Task::classify, seed);
        const auto model = slx::fit_super(ds, spec);

        slx::ReduceSettings cfg;
        cfg.background_size = 15;
        cfg.n_explained = 20;
        cfg.n_coalitions = 128;
        cfg.morris_r = 6;
        cfg.seed = seed;
        const auto plan = slx::plan_reduction(model, ds, cfg);  // k = ceil(30/3) = 10

        std::set<std::size_t> top(plan.selected.begin(), plan.selected.end());
        int found = 0;
        for (std::size_t j : planted)
            if (top.count(j)) ++found;
        if (found >= 4) ++successes;
        hits << found << (seed + 1 < 10 ? "," : "");
    }
    std::ostringstream os;
    os << successes << "/10 seeds recovered >=4 of 5 planted (hits per seed: " << hits.str()
       << ")";
    detail = os.str();
    return successes >= 9;
}

// ---------------------------------------------------------------------------
// shared fixture for criteria 7 and 8

struct ReductionFixture {
    slx::Dataset ds;
    slx::SuperLearnerSpec full_spec;
    slx::ReductionPlan plan;
    slx::SuperLearnerModel full_model;
    double full_fit_seconds = 0.0;
};

ReductionFixture& reduction_fixture() {
    static ReductionFixture fx = [] {
        ReductionFixture f;
        slx::SyntheticSpec sp;
        sp.n = 400;
        sp.d = 18;
        sp.informative = {0, 3, 7, 11, 16};
        sp.n_classes = 3;
        sp.noise_sigma = 0.5;
        sp.seed = 2026;
        f.ds = slx::generate_planted(sp);

        f.full_spec = slx::SuperLearnerSpec::defaults(slx::Task::classify, 1);
        f.full_spec.meta_folds = 5;
        for (auto& b : f.full_spec.base_specs) b.hp.svm_max_n = 150;

        const auto t0 = clock_type::now();
        f.full_model = slx::fit_super(f.ds, f.full_spec);
        f.full_fit_seconds = std::chrono::duration<double>(clock_type::now() - t0).count();

        slx::ReduceSettings cfg;
        cfg.background_size = 20;
        cfg.n_explained = 25;
        cfg.n_coalitions = 128;
        cfg.morris_r = 8;
        cfg.seed = 3;
        f.plan = slx::plan_reduction(f.full_model, f.ds, cfg);  // k = ceil(18/3) = 6
        for (auto& b : f.plan.reduced_spec.base_specs) b.hp.svm_max_n = 150;
        return f;
    }();
    return fx;
}

// 7. the compact model keeps cross-validated accuracy

bool check_reduction_accuracy(std::string& detail) {
    auto& fx = reduction_fixture();
    const auto plan10 = slx::split_kfold(fx.ds, 10, 99, true);
    const auto full_rep = slx::crossval_evaluate(fx.ds, fx.full_spec, plan10);

    const auto ds_red = fx.ds.take_cols(fx.plan.selected);
    const auto red_rep = slx::crossval_evaluate(ds_red, fx.plan.reduced_spec, plan10);

    std::ostringstream os;
    os << "10-fold accuracy full " << full_rep.accuracy << " vs reduced " << red_rep.accuracy
       << " (k=" << fx.plan.k << " of 18 features)";
    detail = os.str();
    return red_rep.accuracy >= full_rep.accuracy - 0.02;
}

// 8. the compact model trains faster, stores smaller, predicts faster

bool check_speed_size(std::string& detail) {
    auto& fx = reduction_fixture();

    const auto t0 = clock_type::now();
    const auto reduced = slx::retrain_reduced(fx.ds, fx.plan);
    const double red_fit = std::chrono::duration<double>(clock_type::now() - t0).count();

    const std::size_t full_bytes = slx::save_model(fx.full_model, work_path("full.slns"));
    const std::size_t red_bytes = slx::save_model(reduced, work_path("reduced.slns"));

    const auto bench_full = slx::bench_inference(fx.full_model, fx.ds.rows, {1}, 7, 2, 0);
    const auto bench_red = slx::bench_inference(reduced, fx.ds.rows, {1}, 7, 2, 0);
    const double speedup = bench_full.per_sample_us[0] / bench_red.per_sample_us[0];

    std::ostringstream os;
    os.precision(3);
    os << "train " << fx.full_fit_seconds << "s -> " << red_fit << "s ("
       << fx.full_fit_seconds / red_fit << "x), archive " << full_bytes << " -> " << red_bytes
       << " bytes (" << double(full_bytes) / double(red_bytes) << "x), single-row inference "
       << speedup << "x";
    detail = os.str();
    return red_fit < fx.full_fit_seconds && red_bytes < full_bytes && speedup > 1.0;
}

// ---------------------------------------------------------------------------
// 9. windowed score-series regression on a low-noise synthetic stream

bool check_temporal_regression(std::string& detail) {
    slx::SyntheticSpec sp;
    sp.n = 1220;
    sp.d = 2;
    sp.informative = {0, 1};
    sp.n_classes = 3;
    sp.noise_sigma = 0.1;
    sp.seed = 42;
    sp.temporal = true;
    const auto series = slx::generate_planted(sp);

    slx::Matrix feats(sp.n, 1);
    for (std::size_t i = 0; i < sp.n; ++i) feats(i, 0) = (*series.scores)[i];
    const auto windows = slx::make_windows(*series.scores, feats, 20, {"score"});

    const auto split = slx::split_kfold(windows, 5, 7, false);
    const auto train = windows.take_rows(split.complement_indices(0));
    const auto test = windows.take_rows(split.fold_indices(0));

    slx::SuperLearnerSpec spec;
    spec.task = slx::Task::regress;
    spec.seed = 3;
    spec.meta_folds = 5;
    auto lin = slx::LearnerSpec::defaults(slx::Family::linear, slx::Task::regress, 3);
    auto rf = slx::LearnerSpec::defaults(slx::Family::random_forest, slx::Task::regress, 3);
    rf.hp.n_estimators = 30;
    auto knn = slx::LearnerSpec::defaults(slx::Family::knn, slx::Task::regress, 3);
    spec.base_specs = {lin, rf, knn};
    spec.meta_spec = slx::LearnerSpec::defaults(slx::Family::linear, slx::Task::regress, 3);

    const auto model = slx::fit_super(train, spec);
    const auto pred = slx::predict_super(model, test.rows);
    bool in_range = true;
    std::vector<double> yhat(test.n());
    for (std::size_t i = 0; i < test.n(); ++i) {
        yhat[i] = pred.probabilities(i, 0);
        if (yhat[i] < 0.0 || yhat[i] > 10.0) in_range = false;
    }
    const auto rep = slx::regression_metrics(*test.scores, yhat);

    std::ostringstream os;
    os << "held-out R2 " << rep.r2 << ", RMSE " << rep.rmse
       << (in_range ? ", all predictions in [0,10]" : ", PREDICTION OUT OF RANGE");
    detail = os.str();
    return rep.r2 >= 0.9 && rep.rmse <= 0.5 && in_range;
}

// ---------------------------------------------------------------------------
// 10. archive round trip at scale plus corruption fuzzing

bool check_serialization(std::string& detail) {
    slx::SyntheticSpec sp;
    sp.n = 1000;
    sp.d = 8;
    sp.informative = {0, 2};
    sp.n_classes = 4;
    sp.noise_sigma = 0.4;
    sp.seed = 31;
    const auto ds = slx::generate_planted(sp);

    slx::SuperLearnerSpec spec;
    spec.task = slx::Task::classify;
    spec.seed = 8;
    spec.meta_folds = 3;
    auto rf = slx::LearnerSpec::defaults(slx::Family::random_forest, slx::Task::classify, 8);
    rf.hp.n_estimators = 10;
    auto gb = slx::LearnerSpec::defaults(slx::Family::grad_boost, slx::Task::classify, 8);
    gb.hp.n_estimators = 15;
    spec.base_specs = {rf, gb};
    spec.meta_spec = slx::LearnerSpec::defaults(slx::Family::logistic, slx::Task::classify, 8);
    const auto model = slx::fit_super(ds, spec);

    const auto path = work_path("big.slns");
    slx::save_model(model, path);
    const auto loaded = slx::load_model(path);
    const auto a = slx::predict_super(model, ds.rows);
    const auto b = slx::predict_super(loaded, ds.rows);
    if (!(a.labels == b.labels) || !(a.probabilities == b.probabilities)) {
        detail = "reloaded predictions differ from the in-memory model";
        return false;
    }

    std::ifstream in(path, std::ios::binary);
    std::vector<char> original{std::istreambuf_iterator<char>(in),
                               std::istreambuf_iterator<char>()};
    slx::Rng rng(777);
    const auto fuzz_path = work_path("fuzz.slns");
    int typed = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto bytes = original;
        if (trial < 70) {
            bytes[rng() % bytes.size()] ^= static_cast<char>(1 << (rng() % 8));
        } else {
            bytes.resize(rng() % bytes.size());
        }
        {
            std::ofstream out(fuzz_path, std::ios::binary | std::ios::trunc);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        }
        try {
            (void)slx::load_model(fuzz_path);
        } catch (const slx::ArchiveError&) {
            ++typed;
        } catch (...) {
            // wrong exception type: counted as a failure below
        }
    }
    std::ostringstream os;
    os << "1000-row predictions bit-identical; " << typed
       << "/100 corruptions raised typed archive errors";
    detail = os.str();
    return typed == 100;
}

// ---------------------------------------------------------------------------
// 11. command-line determinism: identical seeds give identical reports

int sh(const std::string& args) {
    const std::string cmd = std::string(SLNS_CLI_PATH) + " --quiet " + args + " >" +
                            work_path("cli_out.txt") + " 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string file_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool check_cli_determinism(std::string& detail) {
    const std::string dir = work_path("");
    {
        std::ofstream cfg(dir + "s.cfg");
        cfg << "n = 100\nd = 5\ninformative = 0, 1\nn_classes = 3\nnoise_sigma = 0.3\nseed = 4\n";
        std::ofstream super(dir + "super.json");
        super << R"({"task":"classify","seed":6,"meta_folds":3,"bases":[)"
              << R"({"family":"knn"},{"family":"rf","hp":{"n_estimators":10}}],)"
              << R"("meta":{"family":"logistic"}})";
    }

    struct Step {
        std::string name;
        std::string args;    // %1 replaced by the output path
        bool timing = false;  // compare json without timing fields
    };
    const std::string data = dir + "data.csv", model = dir + "model.slns",
                      plan = dir + "plan.json";
    const std::vector<Step> steps{
        {"synth", "synth --spec " + dir + "s.cfg --out %1"},
        {"train", "train --data " + data + " --config " + dir + "super.json --out %1"},
        {"evaluate", "evaluate --data " + data + " --model " + model + " --kfold 3 --report %1"},
        {"predict", "predict --model " + model + " --data " + data + " --out %1"},
        {"explain-shap", "explain --data " + data + " --model " + model +
                             " --method shap --background 20 --n-explained 15 --coalitions 64 "
                             "--out %1"},
        {"explain-morris",
         "explain --data " + data + " --model " + model + " --method morris --out %1"},
        {"explain-lime", "explain --data " + data + " --model " + model +
                             " --method lime --row 1 --samples 150 --out %1"},
        {"explain-pdp",
         "explain --data " + data + " --model " + model + " --method pdp --feature 0 --out %1"},
        {"reduce", "reduce --data " + data + " --model " + model +
                       " --background 20 --n-explained 15 --coalitions 64 --out %1"},
        {"train-reduced", "train --data " + data + " --plan " + plan + " --out %1"},
        {"bench",
         "bench --model " + model + " --data " + data + " --sizes 1,10 --reps 3 --report %1",
         true},
    };

    for (const auto& step : steps) {
        std::string out_a, out_b;
        for (int pass = 0; pass < 2; ++pass) {
            // first pass also writes the canonical artifact consumed downstream
            std::string target = pass == 0
                                     ? (step.name == "synth"    ? data
                                        : step.name == "train"  ? model
                                        : step.name == "reduce" ? plan
                                                                : dir + step.name + ".a")
                                     : dir + step.name + ".b";
            std::string args = step.args;
            args.replace(args.find("%1"), 2, target);
            if (sh(args) != 0) {
                detail = "command '" + step.name + "' failed on pass " + std::to_string(pass);
                return false;
            }
            (pass == 0 ? out_a : out_b) = file_text(target);
        }
        bool same;
        if (step.timing) {
            auto ja = nlohmann::json::parse(out_a);
            auto jb = nlohmann::json::parse(out_b);
            for (const char* key : {"mean_s", "stddev_s", "per_sample_us"}) {
                ja.erase(key);
                jb.erase(key);
            }
            same = ja == jb;
        } else {
            same = out_a == out_b;
        }
        if (!same) {
            detail = "command '" + step.name + "' is not deterministic across reruns";
            return false;
        }
    }
    detail = "11 commands byte-identical across reruns (timings excluded for bench)";
    return true;
}

}  // namespace

int main() {
    std::cout.setf(std::ios::fixed);
    std::cout.precision(4);

    criterion(1, "metrics match brute-force oracles within 1e-9", check_metrics);
    criterion(2, "sampled Shapley matches exact enumeration", check_shapley_fidelity);
    criterion(3, "screening recovers affine coefficients exactly", check_morris_analytic);
    criterion(4, "attribution axioms: additivity, dummy, dependence curves",
              check_explainer_axioms);
    criterion(5, "out-of-fold meta-features never leak their own row", check_no_leakage);
    criterion(6, "merged ranking recovers planted features", check_planted_recovery);
    criterion(7, "feature reduction keeps 10-fold accuracy", check_reduction_accuracy);
    criterion(8, "reduced model is faster to train, smaller, faster to run", check_speed_size);
    criterion(9, "windowed series regression hits R2 >= 0.9", check_temporal_regression);
    criterion(10, "archives round trip and reject 100/100 corruptions", check_serialization);
    criterion(11, "CLI reruns with fixed seeds are byte-identical", check_cli_determinism);

    if (g_failures == 0) {
        std::cout << "ALL 11 CRITERIA PASSED" << std::endl;
        return 0;
    }
    std::cout << g_failures << " CRITERIA FAILED" << std::endl;
    return 1;
}
