#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "slx/data.hpp"
#include "slx/errors.hpp"
#include "slx/random.hpp"

namespace slx {

/// Planted-feature benchmark generator. A handful of informative features
/// drive a latent score in [0,10] through a monotone link; the class label is
/// the equal-width severity band the (noisy) score falls into. All remaining
/// features are independent noise.
struct SyntheticSpec {
    std::size_t n = 1000;
    std::size_t d = 10;
    std::vector<std::size_t> informative = {0};
    std::size_t n_classes = 4;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    bool temporal = false;

    void validate() const {
        if (n == 0 || d == 0) throw DataError("synthetic: n and d must be positive");
        if (informative.empty()) throw DataError("synthetic: need at least one informative feature");
        std::set<std::size_t> uniq;
        for (auto j : informative) {
            if (j >= d) throw DataError("synthetic: informative index out of range");
            if (!uniq.insert(j).second) throw DataError("synthetic: duplicate informative index");
        }
        if (n_classes != 3 && n_classes != 4)
            throw DataError("synthetic: n_classes must be 3 or 4");
        if (noise_sigma < 0.0) throw DataError("synthetic: noise_sigma must be >= 0");
    }
};

namespace detail {

inline double latent_score(std::span<const double> row, const std::vector<std::size_t>& informative) {
    double u = 0.0;
    for (auto j : informative) u += row[j];
    u /= std::sqrt(static_cast<double>(informative.size()));
    return 10.0 / (1.0 + std::exp(-u));  // monotone link onto (0, 10)
}

inline std::size_t severity_band(double score, std::size_t n_classes) {
    const double width = 10.0 / static_cast<double>(n_classes);
    auto band = static_cast<std::size_t>(score / width);
    return std::min(band, n_classes - 1);
}

}  // namespace detail

inline Dataset generate_planted(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng = make_rng(spec.seed, 0x706c616e74ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Matrix x(spec.n, spec.d);
    if (!spec.temporal) {
        for (std::size_t i = 0; i < spec.n; ++i)
            for (std::size_t j = 0; j < spec.d; ++j) x(i, j) = gauss(rng);
    } else {
        // Mean-reverting random walk per feature: stationary N(0,1) with
        // strong step-to-step correlation so lagged rows stay predictive.
        const double rho = 0.99;
        const double step = std::sqrt(1.0 - rho * rho);
        std::vector<double> cur(spec.d);
        for (auto& v : cur) v = gauss(rng);
        for (std::size_t i = 0; i < spec.n; ++i) {
            for (std::size_t j = 0; j < spec.d; ++j) {
                x(i, j) = cur[j];
                cur[j] = rho * cur[j] + step * gauss(rng);
            }
        }
    }

    Dataset ds;
    ds.schema.label_kind = LabelKind::both;
    ds.schema.score_min = 0.0;
    ds.schema.score_max = 10.0;
    for (std::size_t j = 0; j < spec.d; ++j) {
        ds.schema.names.push_back("f" + std::to_string(j));
        ds.schema.kinds.push_back(FeatureKind::cont());
    }
    const char* level_names3[] = {"none", "medium", "high"};
    const char* level_names4[] = {"none", "low", "medium", "high"};
    if (spec.n_classes == 3)
        ds.schema.class_levels = {level_names3, level_names3 + 3};
    else
        ds.schema.class_levels = {level_names4, level_names4 + 4};

    ds.rows = std::move(x);
    ds.class_labels.emplace(spec.n);
    ds.scores.emplace(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        double s = detail::latent_score(ds.rows.row(i), spec.informative);
        if (spec.noise_sigma > 0.0) s += spec.noise_sigma * gauss(rng);
        s = std::clamp(s, 0.0, 10.0);
        (*ds.scores)[i] = s;
        (*ds.class_labels)[i] = detail::severity_band(s, spec.n_classes);
    }
    ds.validate();
    return ds;
}

/// Flat key=value config for SyntheticSpec. Keys match field names; the
/// `informative` value is a comma-separated index list. '#' starts a comment.
inline SyntheticSpec parse_synthetic_spec(std::istream& in) {
    SyntheticSpec spec;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::string key, value;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw DataError("synthetic config: expected key=value at line " +
                                std::to_string(line_no));
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        key = trim(line.substr(0, eq));
        value = trim(line.substr(eq + 1));
        try {
            if (key == "n") spec.n = std::stoull(value);
            else if (key == "d") spec.d = std::stoull(value);
            else if (key == "n_classes") spec.n_classes = std::stoull(value);
            else if (key == "noise_sigma") spec.noise_sigma = std::stod(value);
            else if (key == "seed") spec.seed = std::stoull(value);
            else if (key == "temporal") spec.temporal = (value == "1" || value == "true");
            else if (key == "informative") {
                spec.informative.clear();
                std::stringstream ss(value);
                std::string tok;
                while (std::getline(ss, tok, ','))
                    spec.informative.push_back(std::stoull(trim(tok)));
            } else {
                throw DataError("synthetic config: unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw DataError("synthetic config: bad value for '" + key + "' at line " +
                            std::to_string(line_no));
        }
    }
    spec.validate();
    return spec;
}

inline SyntheticSpec load_synthetic_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("synthetic config: cannot open '" + path + "'");
    return parse_synthetic_spec(in);
}

}  // namespace slx
