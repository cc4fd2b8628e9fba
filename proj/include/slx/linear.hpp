#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "slx/learner_spec.hpp"
#include "slx/tree.hpp"

namespace slx {

/// Ordinary least squares with a small ridge term for conditioning.
/// weights = [w_0 .. w_{p-1}, bias].
struct LinearModel {
    std::vector<double> weights;
    OneHotEncoder enc;

    double predict_encoded(std::span<const double> x) const {
        double s = weights.back();
        for (std::size_t j = 0; j + 1 < weights.size(); ++j) s += weights[j] * x[j];
        return s;
    }
};

inline LinearModel fit_linear_model(const Matrix& x_raw, const std::vector<FeatureKind>& kinds,
                                    const std::vector<double>& y, const LearnerSpec& spec) {
    if (x_raw.rows() == 0) throw DataError("fit_linear: empty dataset");
    LinearModel m;
    m.enc = OneHotEncoder::from_kinds(kinds);
    const Matrix x = m.enc.encode(x_raw);
    const std::size_t n = x.rows(), p = x.cols(), q = p + 1;

    // Normal equations (X~'X~ + lambda I) w = X~'y with the bias unpenalized
    // only through the ridge default being tiny.
    std::vector<double> a(q * q, 0.0), b(q, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        for (std::size_t j = 0; j < q; ++j) {
            const double xj = j < p ? row[j] : 1.0;
            b[j] += xj * y[i];
            for (std::size_t l = j; l < q; ++l) {
                const double xl = l < p ? row[l] : 1.0;
                a[j * q + l] += xj * xl;
            }
        }
    }
    for (std::size_t j = 0; j < q; ++j)
        for (std::size_t l = 0; l < j; ++l) a[j * q + l] = a[l * q + j];
    const double lambda = spec.hp.l2_lambda > 0.0 ? spec.hp.l2_lambda : 1e-8;
    for (std::size_t j = 0; j < q; ++j) a[j * q + j] += lambda;
    solve_spd_inplace(a, b, q);
    m.weights = std::move(b);
    return m;
}

/// Multinomial softmax regression fit by full-batch gradient descent with
/// backtracking line search. Bias terms are excluded from the L2 penalty.
struct LogisticModel {
    Matrix weights;  // K x (p + 1), bias last
    OneHotEncoder enc;

    std::vector<double> predict_encoded(std::span<const double> x) const {
        const std::size_t k = weights.rows(), p = weights.cols() - 1;
        std::vector<double> s(k);
        for (std::size_t c = 0; c < k; ++c) {
            double v = weights(c, p);
            for (std::size_t j = 0; j < p; ++j) v += weights(c, j) * x[j];
            s[c] = v;
        }
        softmax(s);
        return s;
    }

    static void softmax(std::vector<double>& s) {
        const double m = *std::max_element(s.begin(), s.end());
        double z = 0.0;
        for (auto& v : s) {
            v = std::exp(v - m);
            z += v;
        }
        for (auto& v : s) v /= z;
    }
};

/// Mean cross-entropy plus 0.5 * lambda * ||W||^2 over non-bias weights.
/// Shared by the fitter and by finite-difference gradient checks.
inline double logistic_loss(const Matrix& w, const Matrix& x,
                            const std::vector<std::size_t>& y, double lambda) {
    const std::size_t n = x.rows(), k = w.rows(), p = w.cols() - 1;
    double loss = 0.0;
    std::vector<double> s(k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        for (std::size_t c = 0; c < k; ++c) {
            double v = w(c, p);
            for (std::size_t j = 0; j < p; ++j) v += w(c, j) * row[j];
            s[c] = v;
        }
        LogisticModel::softmax(s);
        loss -= std::log(std::max(s[y[i]], 1e-300));
    }
    loss /= static_cast<double>(n);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < p; ++j) loss += 0.5 * lambda * w(c, j) * w(c, j);
    return loss;
}

inline Matrix logistic_gradient(const Matrix& w, const Matrix& x,
                                const std::vector<std::size_t>& y, double lambda) {
    const std::size_t n = x.rows(), k = w.rows(), p = w.cols() - 1;
    Matrix g(k, p + 1);
    std::vector<double> s(k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        for (std::size_t c = 0; c < k; ++c) {
            double v = w(c, p);
            for (std::size_t j = 0; j < p; ++j) v += w(c, j) * row[j];
            s[c] = v;
        }
        LogisticModel::softmax(s);
        for (std::size_t c = 0; c < k; ++c) {
            const double r = s[c] - (y[i] == c ? 1.0 : 0.0);
            for (std::size_t j = 0; j < p; ++j) g(c, j) += r * row[j];
            g(c, p) += r;
        }
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : g.data()) v *= inv;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < p; ++j) g(c, j) += lambda * w(c, j);
    return g;
}

inline LogisticModel fit_logistic_model(const Matrix& x_raw,
                                        const std::vector<FeatureKind>& kinds,
                                        const std::vector<std::size_t>& y, std::size_t n_classes,
                                        const LearnerSpec& spec) {
    if (x_raw.rows() == 0) throw DataError("fit_logistic: empty dataset");
    LogisticModel m;
    m.enc = OneHotEncoder::from_kinds(kinds);
    const Matrix x = m.enc.encode(x_raw);
    const double lambda = spec.hp.l2_lambda;

    m.weights = Matrix(n_classes, x.cols() + 1);
    double loss = logistic_loss(m.weights, x, y, lambda);
    for (std::size_t it = 0; it < spec.hp.max_iter; ++it) {
        const Matrix g = logistic_gradient(m.weights, x, y, lambda);
        double gnorm2 = 0.0;
        for (double v : g.data()) gnorm2 += v * v;
        if (std::sqrt(gnorm2) < spec.hp.tol) break;

        double step = 1.0;
        while (step > 1e-12) {
            Matrix trial = m.weights;
            for (std::size_t q = 0; q < trial.data().size(); ++q)
                trial.data()[q] -= step * g.data()[q];
            const double trial_loss = logistic_loss(trial, x, y, lambda);
            if (trial_loss <= loss - 1e-4 * step * gnorm2) {  // Armijo
                m.weights = std::move(trial);
                loss = trial_loss;
                break;
            }
            step *= 0.5;
        }
        if (step <= 1e-12) break;  // no descent step found
    }
    return m;
}

}  // namespace slx
