#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "slx/learner_spec.hpp"
#include "slx/tree.hpp"

namespace slx {

/// Kernel SVM trained by SMO over the dual. Classification is one-vs-rest
/// C-SVC; regression the epsilon-insensitive variant. Training rows are
/// capped at hp.svm_max_n by a seeded subsample.
struct SvmModel {
    SvmKernel kernel = SvmKernel::linear;
    std::size_t degree = 3;
    double coef0 = 1.0;
    double gamma = 1.0;
    Matrix support;  // encoded training subsample, shared by all machines

    struct Machine {
        std::vector<double> coef;  // alpha_i * y_i (classify) or beta_i (regress)
        double b = 0.0;
    };
    std::vector<Machine> machines;  // one per class (OvR), or a single regressor
    OneHotEncoder enc;
    bool regress = false;
    double kkt_residual = 0.0;  // worst dual violation at convergence

    double kernel_eval(std::span<const double> u, std::span<const double> v) const {
        double dot = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) dot += u[j] * v[j];
        if (kernel == SvmKernel::linear) return dot;
        return std::pow(gamma * dot + coef0, static_cast<double>(degree));
    }

    double decision(const Machine& m, std::span<const double> x_encoded) const {
        double s = m.b;
        for (std::size_t i = 0; i < support.rows(); ++i)
            if (m.coef[i] != 0.0) s += m.coef[i] * kernel_eval(support.row(i), x_encoded);
        return s;
    }

    std::vector<double> predict_row(std::span<const double> x_encoded) const {
        if (regress) return {decision(machines[0], x_encoded)};
        std::vector<double> margins(machines.size());
        for (std::size_t c = 0; c < machines.size(); ++c)
            margins[c] = decision(machines[c], x_encoded);
        // decision scores -> probabilities
        const double mx = *std::max_element(margins.begin(), margins.end());
        double z = 0.0;
        for (auto& v : margins) {
            v = std::exp(v - mx);
            z += v;
        }
        for (auto& v : margins) v /= z;
        return margins;
    }
};

namespace detail {

constexpr double kSmoTol = 1e-3;
constexpr std::size_t kSmoMaxPasses = 100;

struct KernelMatrix {
    const SvmModel& model;
    const Matrix& x;
    std::vector<double> cache;  // full matrix when affordable
    bool cached = false;

    KernelMatrix(const SvmModel& m, const Matrix& xx) : model(m), x(xx) {
        const std::size_t n = x.rows();
        if (n <= 3000) {
            cache.resize(n * n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i; j < n; ++j)
                    cache[i * n + j] = cache[j * n + i] = model.kernel_eval(x.row(i), x.row(j));
            cached = true;
        }
    }
    double operator()(std::size_t i, std::size_t j) const {
        if (cached) return cache[i * x.rows() + j];
        return model.kernel_eval(x.row(i), x.row(j));
    }
};

/// Platt-style simplified SMO for binary C-SVC; y in {-1, +1}.
inline SvmModel::Machine smo_binary(const KernelMatrix& K, const std::vector<double>& y,
                                    double C, Rng& rng, double& kkt_out) {
    const std::size_t n = y.size();
    std::vector<double> alpha(n, 0.0);
    std::vector<double> f(n, 0.0);  // decision values without b
    double b = 0.0;

    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t passes = 0, sweeps = 0;
    const std::size_t max_sweeps = kSmoMaxPasses * 20;
    while (passes < kSmoMaxPasses && sweeps < max_sweeps) {
        ++sweeps;
        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = f[i] + b - y[i];
            const double ri = y[i] * ei;
            if (!((ri < -kSmoTol && alpha[i] < C) || (ri > kSmoTol && alpha[i] > 0.0))) continue;
            std::size_t j = pick(rng);
            if (j == i) j = (j + 1) % n;
            const double ej = f[j] + b - y[j];

            const double ai_old = alpha[i], aj_old = alpha[j];
            double lo, hi;
            if (y[i] != y[j]) {
                lo = std::max(0.0, aj_old - ai_old);
                hi = std::min(C, C + aj_old - ai_old);
            } else {
                lo = std::max(0.0, ai_old + aj_old - C);
                hi = std::min(C, ai_old + aj_old);
            }
            if (lo >= hi) continue;
            const double eta = 2.0 * K(i, j) - K(i, i) - K(j, j);
            if (eta >= 0.0) continue;
            double aj = aj_old - y[j] * (ei - ej) / eta;
            aj = std::clamp(aj, lo, hi);
            if (std::abs(aj - aj_old) < 1e-7) continue;
            const double ai = ai_old + y[i] * y[j] * (aj_old - aj);
            alpha[i] = ai;
            alpha[j] = aj;

            const double di = y[i] * (ai - ai_old), dj = y[j] * (aj - aj_old);
            for (std::size_t k2 = 0; k2 < n; ++k2) f[k2] += di * K(i, k2) + dj * K(j, k2);

            const double b1 = b - ei - di * K(i, i) - dj * K(i, j);
            const double b2 = b - ej - di * K(i, j) - dj * K(j, j);
            if (ai > 0.0 && ai < C) b = b1;
            else if (aj > 0.0 && aj < C) b = b2;
            else b = 0.5 * (b1 + b2);
            ++changed;
        }
        passes = changed == 0 ? passes + 1 : 0;
    }

    double kkt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double yf = y[i] * (f[i] + b);
        if (alpha[i] <= 0.0) kkt = std::max(kkt, 1.0 - yf);
        else if (alpha[i] >= C) kkt = std::max(kkt, yf - 1.0);
        else kkt = std::max(kkt, std::abs(yf - 1.0));
    }
    kkt_out = std::max(kkt_out, std::max(kkt, 0.0));

    SvmModel::Machine m;
    m.coef.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.coef[i] = alpha[i] * y[i];
    m.b = b;
    return m;
}

/// Pairwise coordinate SMO for epsilon-SVR in the beta = alpha - alpha*
/// formulation: minimize 0.5 b'Kb - y'b + eps*|b|_1 subject to sum(b)=0,
/// |b_i| <= C. Each pair step minimizes the piecewise quadratic exactly.
inline SvmModel::Machine smo_regress(const KernelMatrix& K, const std::vector<double>& y,
                                     double C, double eps, Rng& rng) {
    const std::size_t n = y.size();
    std::vector<double> beta(n, 0.0), g(n, 0.0);  // g = K beta
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    const std::size_t max_sweeps = 500;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = pick(rng);
            if (j == i) j = (j + 1) % n;
            const double s = beta[i] + beta[j];
            const double eta = K(i, i) + K(j, j) - 2.0 * K(i, j);
            if (eta < 1e-12) continue;
            const double ui = g[i] - K(i, i) * beta[i] - K(i, j) * beta[j];
            const double uj = g[j] - K(i, j) * beta[i] - K(j, j) * beta[j];
            const double b_const = (K(i, j) - K(j, j)) * s + ui - uj - y[i] + y[j];
            const double lo = std::max(-C, s - C), hi = std::min(C, s + C);

            auto objective = [&](double t) {
                const double t2 = s - t;
                return 0.5 * K(i, i) * t * t + 0.5 * K(j, j) * t2 * t2 + K(i, j) * t * t2 +
                       ui * t + uj * t2 - y[i] * t - y[j] * t2 +
                       eps * (std::abs(t) + std::abs(t2));
            };
            double best_t = std::clamp(beta[i], lo, hi);
            double best_v = objective(best_t);
            auto consider = [&](double t) {
                t = std::clamp(t, lo, hi);
                const double v = objective(t);
                if (v < best_v - 1e-15) {
                    best_v = v;
                    best_t = t;
                }
            };
            for (const double si : {-1.0, 1.0})
                for (const double sj : {-1.0, 1.0})
                    consider(-(b_const + eps * (si - sj)) / eta);
            consider(0.0);
            consider(s);
            consider(lo);
            consider(hi);

            const double di = best_t - beta[i];
            const double dj = (s - best_t) - beta[j];
            if (std::abs(di) < 1e-12 && std::abs(dj) < 1e-12) continue;
            beta[i] = best_t;
            beta[j] = s - best_t;
            for (std::size_t k2 = 0; k2 < n; ++k2) g[k2] += di * K(i, k2) + dj * K(j, k2);
            max_delta = std::max(max_delta, std::max(std::abs(di), std::abs(dj)));
        }
        if (max_delta < 1e-6) break;
    }

    // Offset from free points; fall back to the mean residual.
    double b = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::abs(beta[i]);
        if (a > 1e-8 && a < C - 1e-8) {
            b += y[i] - g[i] - eps * (beta[i] > 0.0 ? 1.0 : -1.0);
            ++free_count;
        }
    }
    if (free_count > 0) {
        b /= static_cast<double>(free_count);
    } else {
        for (std::size_t i = 0; i < n; ++i) b += y[i] - g[i];
        b /= static_cast<double>(n);
    }

    SvmModel::Machine m;
    m.coef = std::move(beta);
    m.b = b;
    return m;
}

}  // namespace detail

inline SvmModel fit_svm_model(const Matrix& x_raw, const std::vector<FeatureKind>& kinds,
                              const TreeTargets& targets, const LearnerSpec& spec) {
    if (x_raw.rows() == 0) throw DataError("fit_svm: empty dataset");
    spec.validate();

    SvmModel model;
    model.kernel = spec.hp.kernel;
    model.degree = spec.hp.degree;
    model.coef0 = spec.hp.coef0;
    model.enc = OneHotEncoder::from_kinds(kinds);
    model.regress = !targets.is_classify();

    Matrix x = model.enc.encode(x_raw);
    model.gamma = spec.hp.gamma > 0.0 ? spec.hp.gamma : 1.0 / static_cast<double>(x.cols());

    // Seeded subsample when the training set exceeds the cap.
    std::vector<std::size_t> keep(x.rows());
    std::iota(keep.begin(), keep.end(), 0);
    if (x.rows() > spec.hp.svm_max_n) {
        Rng rng = make_rng(spec.seed, 0x73766d00ULL);
        std::shuffle(keep.begin(), keep.end(), rng);
        keep.resize(spec.hp.svm_max_n);
        std::sort(keep.begin(), keep.end());
        x = x.take_rows(keep);
    }
    model.support = x;

    detail::KernelMatrix K(model, model.support);
    if (model.regress) {
        std::vector<double> y(keep.size());
        for (std::size_t i = 0; i < keep.size(); ++i) y[i] = (*targets.reals)[keep[i]];
        Rng rng = make_rng(spec.seed, 0x737672ULL);
        model.machines.push_back(detail::smo_regress(K, y, spec.hp.C, spec.hp.epsilon, rng));
    } else {
        const std::size_t n_classes = targets.n_classes;
        for (std::size_t c = 0; c < n_classes; ++c) {
            std::vector<double> y(keep.size());
            for (std::size_t i = 0; i < keep.size(); ++i)
                y[i] = (*targets.labels)[keep[i]] == c ? 1.0 : -1.0;
            Rng rng = make_rng(spec.seed, 0x737663ULL + c);
            model.machines.push_back(
                detail::smo_binary(K, y, spec.hp.C, rng, model.kkt_residual));
        }
    }
    return model;
}

}  // namespace slx
