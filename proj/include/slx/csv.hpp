#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slx/data.hpp"
#include "slx/errors.hpp"

namespace slx {

struct CsvHints {
    std::optional<std::string> class_col;
    std::optional<std::string> score_col;
    double score_min = 0.0;
    double score_max = 10.0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // Trim surrounding whitespace and a trailing CR from Windows files.
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ' || cell.back() == '\t'))
            cell.pop_back();
        std::size_t b = 0;
        while (b < cell.size() && (cell[b] == ' ' || cell[b] == '\t')) ++b;
        out.push_back(cell.substr(b));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [p, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || p != end) return std::nullopt;
    return v;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// CSV ingestion: header mandatory, ',' delimiter, '.' radix. Numeric columns
/// become continuous features; non-numeric columns become categorical features
/// integer-coded against a recorded level table. The class and/or score column
/// is located by hint or by conventional name.
inline Dataset load_csv(const std::string& path, const CsvHints& hints = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("load_csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("load_csv: empty file '" + path + "'");
    const auto header = detail::split_csv_line(line);
    const std::size_t n_cols = header.size();
    if (n_cols == 0) throw DataError("load_csv: empty header");

    std::vector<std::vector<std::string>> cells;  // column-major
    cells.resize(n_cols);
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row_no;
        const auto row = detail::split_csv_line(line);
        if (row.size() != n_cols)
            throw DataError("load_csv: ragged row " + std::to_string(row_no) + " ('" + path +
                            "'): expected " + std::to_string(n_cols) + " cells, got " +
                            std::to_string(row.size()));
        for (std::size_t j = 0; j < n_cols; ++j) cells[j].push_back(row[j]);
    }
    const std::size_t n = row_no;
    if (n == 0) throw DataError("load_csv: no data rows in '" + path + "'");

    auto find_col = [&](const std::optional<std::string>& hint,
                        std::initializer_list<const char*> defaults) -> std::optional<std::size_t> {
        if (hint) {
            for (std::size_t j = 0; j < n_cols; ++j)
                if (header[j] == *hint) return j;
            throw DataError("load_csv: label column '" + *hint + "' not found");
        }
        for (const char* name : defaults)
            for (std::size_t j = 0; j < n_cols; ++j)
                if (header[j] == name) return j;
        return std::nullopt;
    };
    const auto class_col = find_col(hints.class_col, {"severity", "class", "CS_class", "label"});
    const auto score_col = find_col(hints.score_col, {"fms", "FMS", "score"});
    if (!class_col && !score_col)
        throw DataError("load_csv: no class or score column found in '" + path + "'");

    Dataset ds;
    ds.schema.score_min = hints.score_min;
    ds.schema.score_max = hints.score_max;
    if (class_col && score_col) ds.schema.label_kind = LabelKind::both;
    else if (class_col) ds.schema.label_kind = LabelKind::class_only;
    else ds.schema.label_kind = LabelKind::score_only;

    std::vector<std::size_t> feat_cols;
    for (std::size_t j = 0; j < n_cols; ++j)
        if (j != class_col && j != score_col) feat_cols.push_back(j);

    ds.rows = Matrix(n, feat_cols.size());
    for (std::size_t fj = 0; fj < feat_cols.size(); ++fj) {
        const std::size_t j = feat_cols[fj];
        ds.schema.names.push_back(header[j]);
        bool numeric = true;
        for (const auto& c : cells[j])
            if (!detail::parse_double(c)) { numeric = false; break; }
        if (numeric) {
            ds.schema.kinds.push_back(FeatureKind::cont());
            for (std::size_t i = 0; i < n; ++i) {
                const double v = *detail::parse_double(cells[j][i]);
                if (!std::isfinite(v))
                    throw DataError("load_csv: non-finite value in column '" + header[j] +
                                    "', row " + std::to_string(i + 1));
                ds.rows(i, fj) = v;
            }
        } else {
            // Integer-code against levels in order of first appearance.
            std::map<std::string, std::size_t> code;
            std::vector<std::string> levels;
            for (std::size_t i = 0; i < n; ++i) {
                auto [it, inserted] = code.try_emplace(cells[j][i], levels.size());
                if (inserted) levels.push_back(cells[j][i]);
                ds.rows(i, fj) = static_cast<double>(it->second);
            }
            ds.schema.kinds.push_back(FeatureKind::cat(levels.size(), levels));
        }
    }

    if (class_col) {
        std::set<std::string> distinct(cells[*class_col].begin(), cells[*class_col].end());
        ds.schema.class_levels =
            ordered_severity_levels({distinct.begin(), distinct.end()});
        std::map<std::string, std::size_t> code;
        for (std::size_t c = 0; c < ds.schema.class_levels.size(); ++c)
            code[ds.schema.class_levels[c]] = c;
        ds.class_labels.emplace(n);
        for (std::size_t i = 0; i < n; ++i)
            (*ds.class_labels)[i] = code[cells[*class_col][i]];
    }
    if (score_col) {
        ds.scores.emplace(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = detail::parse_double(cells[*score_col][i]);
            if (!v || !std::isfinite(*v))
                throw DataError("load_csv: non-numeric score in row " + std::to_string(i + 1));
            if (*v < ds.schema.score_min || *v > ds.schema.score_max)
                throw DataError("load_csv: score " + cells[*score_col][i] + " outside [" +
                                detail::format_double(ds.schema.score_min) + "," +
                                detail::format_double(ds.schema.score_max) + "] in row " +
                                std::to_string(i + 1));
            (*ds.scores)[i] = *v;
        }
    }
    ds.validate();
    return ds;
}

inline void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("save_csv: cannot open '" + path + "' for writing");
    for (std::size_t j = 0; j < ds.d(); ++j) {
        if (j) out << ',';
        out << ds.schema.names[j];
    }
    if (ds.class_labels) out << ",severity";
    if (ds.scores) out << ",fms";
    out << '\n';
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.d(); ++j) {
            if (j) out << ',';
            const auto& kind = ds.schema.kinds[j];
            if (kind.is_categorical() && !kind.levels.empty()) {
                const auto c = static_cast<std::size_t>(std::llround(ds.rows(i, j)));
                out << kind.levels.at(c);
            } else {
                out << detail::format_double(ds.rows(i, j));
            }
        }
        if (ds.class_labels) out << ',' << ds.schema.class_levels.at((*ds.class_labels)[i]);
        if (ds.scores) out << ',' << detail::format_double((*ds.scores)[i]);
        out << '\n';
    }
}

}  // namespace slx
