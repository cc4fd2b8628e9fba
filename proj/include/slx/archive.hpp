#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "slx/json_io.hpp"

namespace slx {

// ---------------------------------------------------------------------------
// CRC32 (IEEE 802.3 polynomial, reflected)

inline std::uint32_t crc32(const unsigned char* data, std::size_t len,
                           std::uint32_t crc = 0) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    crc ^= 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

namespace detail {

constexpr char kArchiveMagic[4] = {'S', 'L', 'N', 'S'};
constexpr std::uint32_t kArchiveVersion = 1;

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

struct ByteReader {
    const unsigned char* p;
    std::size_t len;
    std::size_t pos = 0;

    void need(std::size_t k) const {
        if (pos + k > len) throw ArchiveError(ArchiveError::Kind::truncated, "archive truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{p[pos + i]} << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[pos + i]} << (8 * i);
        pos += 8;
        return v;
    }
};

/// Numeric payload: a flat array of doubles, written little-endian.
struct BlobWriter {
    std::vector<double> values;

    void put(double v) { values.push_back(v); }
    void put_size(std::size_t v) { values.push_back(static_cast<double>(v)); }
    void put_all(const std::vector<double>& v) {
        values.insert(values.end(), v.begin(), v.end());
    }
    void put_matrix(const Matrix& m) {
        put_size(m.rows());
        put_size(m.cols());
        put_all(m.data());
    }
    void put_tree(const Tree& t) {
        put_size(t.nodes.size());
        for (const auto& nd : t.nodes) {  // preorder node list
            put(static_cast<double>(nd.left));
            put(static_cast<double>(nd.right));
            put(static_cast<double>(nd.feature));
            put(nd.threshold);
            put(nd.categorical ? 1.0 : 0.0);
            put_size(nd.values.size());
            put_all(nd.values);
        }
    }
};

struct BlobReader {
    std::span<const double> values;
    std::size_t pos = 0;

    double get() {
        if (pos >= values.size())
            throw ArchiveError(ArchiveError::Kind::malformed, "archive blob underrun");
        return values[pos++];
    }
    std::size_t get_size() {
        const double v = get();
        if (!(v >= 0.0) || v != std::floor(v) || v > 9e15)
            throw ArchiveError(ArchiveError::Kind::malformed, "archive blob bad count");
        return static_cast<std::size_t>(v);
    }
    std::vector<double> get_n(std::size_t n) {
        if (pos + n > values.size())
            throw ArchiveError(ArchiveError::Kind::malformed, "archive blob underrun");
        std::vector<double> out(values.begin() + static_cast<std::ptrdiff_t>(pos),
                                values.begin() + static_cast<std::ptrdiff_t>(pos + n));
        pos += n;
        return out;
    }
    Matrix get_matrix() {
        const std::size_t r = get_size(), c = get_size();
        Matrix m(r, c);
        m.data() = get_n(r * c);
        return m;
    }
    Tree get_tree() {
        Tree t;
        t.nodes.resize(get_size());
        for (auto& nd : t.nodes) {
            nd.left = static_cast<std::int32_t>(get());
            nd.right = static_cast<std::int32_t>(get());
            nd.feature = static_cast<std::uint32_t>(get());
            nd.threshold = get();
            nd.categorical = get() != 0.0;
            nd.values = get_n(get_size());
        }
        return t;
    }
};

inline void put_encoder(BlobWriter& w, const OneHotEncoder& enc) {
    w.put_size(enc.cardinality.size());
    for (auto c : enc.cardinality) w.put_size(c);
}

inline OneHotEncoder get_encoder(BlobReader& r) {
    OneHotEncoder enc;
    enc.cardinality.resize(r.get_size());
    for (auto& c : enc.cardinality) c = r.get_size();
    return enc;
}

inline void put_learner_blob(BlobWriter& w, const FittedLearner& fl) {
    std::visit(
        [&](const auto& model) {
            using M = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<M, ForestModel>) {
                w.put_size(model.out_width);
                w.put_size(model.trees.size());
                for (const auto& t : model.trees) w.put_tree(t);
            } else if constexpr (std::is_same_v<M, GbmModel>) {
                w.put(model.learning_rate);
                w.put_size(model.init_scores.size());
                w.put_all(model.init_scores);
                w.put_size(model.stages.size());
                for (const auto& stage : model.stages) {
                    w.put_size(stage.size());
                    for (const auto& t : stage) w.put_tree(t);
                }
                w.put_size(model.train_loss.size());
                w.put_all(model.train_loss);
            } else if constexpr (std::is_same_v<M, KnnModel>) {
                w.put_size(model.k);
                w.put_size(model.n_classes);
                w.put_matrix(model.train_x);
                w.put_size(model.labels.size());
                for (auto l : model.labels) w.put_size(l);
                w.put_size(model.targets.size());
                w.put_all(model.targets);
                put_encoder(w, model.enc);
            } else if constexpr (std::is_same_v<M, SvmModel>) {
                w.put(model.kernel == SvmKernel::linear ? 0.0 : 1.0);
                w.put_size(model.degree);
                w.put(model.coef0);
                w.put(model.gamma);
                w.put(model.regress ? 1.0 : 0.0);
                w.put(model.kkt_residual);
                w.put_matrix(model.support);
                w.put_size(model.machines.size());
                for (const auto& m : model.machines) {
                    w.put_size(m.coef.size());
                    w.put_all(m.coef);
                    w.put(m.b);
                }
                put_encoder(w, model.enc);
            } else if constexpr (std::is_same_v<M, LogisticModel>) {
                w.put_matrix(model.weights);
                put_encoder(w, model.enc);
            } else {  // LinearModel
                w.put_size(model.weights.size());
                w.put_all(model.weights);
                put_encoder(w, model.enc);
            }
        },
        fl.params);
}

inline void get_learner_blob(BlobReader& r, FittedLearner& fl) {
    switch (fl.spec.family) {
        case Family::random_forest:
        case Family::extra_trees: {
            ForestModel m;
            m.out_width = r.get_size();
            m.trees.resize(r.get_size());
            for (auto& t : m.trees) t = r.get_tree();
            fl.params = std::move(m);
            break;
        }
        case Family::grad_boost: {
            GbmModel m;
            m.learning_rate = r.get();
            m.init_scores = r.get_n(r.get_size());
            m.stages.resize(r.get_size());
            for (auto& stage : m.stages) {
                stage.resize(r.get_size());
                for (auto& t : stage) t = r.get_tree();
            }
            m.train_loss = r.get_n(r.get_size());
            fl.params = std::move(m);
            break;
        }
        case Family::knn: {
            KnnModel m;
            m.k = r.get_size();
            m.n_classes = r.get_size();
            m.train_x = r.get_matrix();
            m.labels.resize(r.get_size());
            for (auto& l : m.labels) l = r.get_size();
            m.targets = r.get_n(r.get_size());
            m.enc = get_encoder(r);
            fl.params = std::move(m);
            break;
        }
        case Family::svm: {
            SvmModel m;
            m.kernel = r.get() == 0.0 ? SvmKernel::linear : SvmKernel::polynomial;
            m.degree = r.get_size();
            m.coef0 = r.get();
            m.gamma = r.get();
            m.regress = r.get() != 0.0;
            m.kkt_residual = r.get();
            m.support = r.get_matrix();
            m.machines.resize(r.get_size());
            for (auto& mc : m.machines) {
                mc.coef = r.get_n(r.get_size());
                mc.b = r.get();
            }
            m.enc = get_encoder(r);
            fl.params = std::move(m);
            break;
        }
        case Family::logistic: {
            LogisticModel m;
            m.weights = r.get_matrix();
            m.enc = get_encoder(r);
            fl.params = std::move(m);
            break;
        }
        case Family::linear: {
            LinearModel m;
            m.weights = r.get_n(r.get_size());
            m.enc = get_encoder(r);
            fl.params = std::move(m);
            break;
        }
    }
}

inline json kinds_to_json(const std::vector<FeatureKind>& kinds) {
    json out = json::array();
    for (const auto& k : kinds) {
        if (k.is_categorical())
            out.push_back(json{{"type", "categorical"},
                               {"cardinality", k.cardinality},
                               {"levels", k.levels}});
        else
            out.push_back(json{{"type", "continuous"}});
    }
    return out;
}

inline std::vector<FeatureKind> kinds_from_json(const json& j) {
    std::vector<FeatureKind> out;
    for (const auto& e : j) {
        if (e.at("type") == "categorical")
            out.push_back(FeatureKind::cat(e.at("cardinality").get<std::size_t>(),
                                           e.value("levels", std::vector<std::string>{})));
        else
            out.push_back(FeatureKind::cont());
    }
    return out;
}

}  // namespace detail

/// Serializes a trained stacked model:
///   "SLNS" | u32 version | u64 manifest bytes | manifest JSON |
///   u64 double count | payload doubles (64-bit IEEE-754 LE) | u32 CRC32.
/// Returns the number of bytes written.
inline std::size_t save_model(const SuperLearnerModel& model, const std::string& path) {
    detail::BlobWriter blob;
    json learners = json::array();
    auto describe = [&](const FittedLearner& fl) {
        const std::size_t offset = blob.values.size();
        detail::put_learner_blob(blob, fl);
        learners.push_back(json{{"spec", learner_spec_to_json(fl.spec)},
                                {"feature_count", fl.feature_count},
                                {"classes", fl.classes},
                                {"blob_offset", offset},
                                {"blob_count", blob.values.size() - offset}});
    };
    for (const auto& b : model.fitted_bases) describe(b);
    describe(model.fitted_meta);

    json manifest{{"spec", super_spec_to_json(model.spec)},
                  {"feature_subset", model.feature_subset},
                  {"full_width", model.full_width},
                  {"classes", model.classes},
                  {"score_min", model.score_min},
                  {"score_max", model.score_max},
                  {"kinds", detail::kinds_to_json(model.kinds)},
                  {"standardizer",
                   json{{"mean", model.standardizer.mean},
                        {"stddev", model.standardizer.stddev}}},
                  {"learners", learners}};
    const std::string mtext = manifest.dump();

    std::vector<unsigned char> bytes;
    bytes.insert(bytes.end(), detail::kArchiveMagic, detail::kArchiveMagic + 4);
    detail::put_u32(bytes, detail::kArchiveVersion);
    detail::put_u64(bytes, mtext.size());
    bytes.insert(bytes.end(), mtext.begin(), mtext.end());
    detail::put_u64(bytes, blob.values.size());
    for (double v : blob.values) detail::put_u64(bytes, std::bit_cast<std::uint64_t>(v));
    detail::put_u32(bytes, crc32(bytes.data(), bytes.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ArchiveError(ArchiveError::Kind::malformed, "cannot open '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ArchiveError(ArchiveError::Kind::malformed, "write failed: '" + path + "'");
    return bytes.size();
}

inline SuperLearnerModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArchiveError(ArchiveError::Kind::truncated, "cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());

    detail::ByteReader r{bytes.data(), bytes.size()};
    r.need(4);
    if (std::memcmp(bytes.data(), detail::kArchiveMagic, 4) != 0)
        throw ArchiveError(ArchiveError::Kind::bad_magic, "not a model archive");
    r.pos = 4;
    const std::uint32_t version = r.u32();
    if (version != detail::kArchiveVersion)
        throw ArchiveError(ArchiveError::Kind::bad_version,
                           "unsupported archive version " + std::to_string(version));

    // Checksum covers everything before the trailing CRC word.
    if (bytes.size() < r.pos + 4)
        throw ArchiveError(ArchiveError::Kind::truncated, "archive truncated");
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= std::uint32_t{bytes[bytes.size() - 4 + static_cast<std::size_t>(i)]} << (8 * i);
    if (crc32(bytes.data(), bytes.size() - 4) != stored)
        throw ArchiveError(ArchiveError::Kind::bad_checksum, "archive checksum mismatch");

    const std::uint64_t mlen = r.u64();
    r.need(mlen);
    json manifest;
    try {
        manifest = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos),
                               bytes.begin() + static_cast<std::ptrdiff_t>(r.pos + mlen));
    } catch (const json::exception& e) {
        throw ArchiveError(ArchiveError::Kind::malformed,
                           std::string("bad archive manifest: ") + e.what());
    }
    r.pos += mlen;
    const std::uint64_t n_doubles = r.u64();
    r.need(n_doubles * 8);
    std::vector<double> payload(n_doubles);
    for (std::uint64_t i = 0; i < n_doubles; ++i)
        payload[i] = std::bit_cast<double>(r.u64());
    if (r.pos + 4 != bytes.size())
        throw ArchiveError(ArchiveError::Kind::malformed, "archive trailing bytes");

    try {
        SuperLearnerModel model;
        model.spec = super_spec_from_json(manifest.at("spec"));
        model.feature_subset = manifest.at("feature_subset").get<std::vector<std::size_t>>();
        model.full_width = manifest.at("full_width").get<std::size_t>();
        model.classes = manifest.at("classes").get<std::vector<std::string>>();
        model.score_min = manifest.at("score_min").get<double>();
        model.score_max = manifest.at("score_max").get<double>();
        model.kinds = detail::kinds_from_json(manifest.at("kinds"));
        model.standardizer.mean =
            manifest.at("standardizer").at("mean").get<std::vector<double>>();
        model.standardizer.stddev =
            manifest.at("standardizer").at("stddev").get<std::vector<double>>();

        const json& learners = manifest.at("learners");
        if (learners.size() != model.spec.base_specs.size() + 1)
            throw ArchiveError(ArchiveError::Kind::malformed, "archive learner count mismatch");
        auto restore = [&](const json& lj) {
            FittedLearner fl;
            fl.spec = learner_spec_from_json(lj.at("spec"), model.spec.task);
            fl.feature_count = lj.at("feature_count").get<std::size_t>();
            fl.classes = lj.at("classes").get<std::vector<std::string>>();
            const std::size_t off = lj.at("blob_offset").get<std::size_t>();
            const std::size_t cnt = lj.at("blob_count").get<std::size_t>();
            if (off + cnt > payload.size())
                throw ArchiveError(ArchiveError::Kind::malformed, "archive blob out of range");
            detail::BlobReader br{std::span<const double>(payload).subspan(off, cnt)};
            detail::get_learner_blob(br, fl);
            if (br.pos != cnt)
                throw ArchiveError(ArchiveError::Kind::malformed, "archive blob size mismatch");
            return fl;
        };
        for (std::size_t b = 0; b < model.spec.base_specs.size(); ++b)
            model.fitted_bases.push_back(restore(learners.at(b)));
        model.fitted_meta = restore(learners.at(model.spec.base_specs.size()));
        return model;
    } catch (const ArchiveError&) {
        throw;
    } catch (const std::exception& e) {
        throw ArchiveError(ArchiveError::Kind::malformed,
                           std::string("bad archive contents: ") + e.what());
    }
}

}  // namespace slx
