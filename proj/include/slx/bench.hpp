#pragma once

#include <chrono>
#include <cmath>
#include <vector>

#include "slx/json_io.hpp"

namespace slx {

struct BenchReport {
    std::vector<std::size_t> sample_sizes;
    std::vector<double> mean_s;        // per size, mean over timed reps
    std::vector<double> stddev_s;      // per size
    std::vector<double> per_sample_us; // mean_s / size, microseconds
    std::size_t model_bytes = 0;
    std::size_t reps = 10;
    std::size_t warmup_reps = 3;
};

/// Wall-clock inference latency of predict_super on fixed seeded row subsets.
/// Warmup repetitions are excluded from the statistics; prediction runs
/// single-threaded for timing stability.
inline BenchReport bench_inference(const SuperLearnerModel& model, const Matrix& x,
                                   std::vector<std::size_t> sample_sizes = {1, 10, 100, 500},
                                   std::size_t reps = 10, std::size_t warmup = 3,
                                   std::uint64_t seed = 0) {
    if (reps < 3) throw DataError("bench_inference: need at least 3 repetitions");
    for (std::size_t s : sample_sizes)
        if (s == 0 || s > x.rows())
            throw DataError("bench_inference: sample size out of range for the given rows");

    BenchReport rep;
    rep.sample_sizes = sample_sizes;
    rep.reps = reps;
    rep.warmup_reps = warmup;

    using clock = std::chrono::steady_clock;
    for (std::size_t size : sample_sizes) {
        std::vector<std::size_t> idx(x.rows());
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng = make_rng(seed, 0x62656e63ULL + size);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(size);
        const Matrix batch = x.take_rows(idx);

        for (std::size_t w = 0; w < warmup; ++w) (void)predict_super(model, batch);

        std::vector<double> times(reps);
        for (std::size_t t = 0; t < reps; ++t) {
            const auto t0 = clock::now();
            volatile double sink = predict_super(model, batch).probabilities(0, 0);
            (void)sink;
            const auto t1 = clock::now();
            times[t] = std::chrono::duration<double>(t1 - t0).count();
        }
        double mean = 0.0;
        for (double t : times) mean += t;
        mean /= static_cast<double>(reps);
        double var = 0.0;
        for (double t : times) var += (t - mean) * (t - mean);
        var /= static_cast<double>(reps);

        rep.mean_s.push_back(mean);
        rep.stddev_s.push_back(std::sqrt(var));
        rep.per_sample_us.push_back(mean / static_cast<double>(size) * 1e6);
    }
    return rep;
}

inline json bench_report_to_json(const BenchReport& r) {
    return json{{"sample_sizes", r.sample_sizes}, {"mean_s", r.mean_s},
                {"stddev_s", r.stddev_s},         {"per_sample_us", r.per_sample_us},
                {"model_bytes", r.model_bytes},   {"reps", r.reps},
                {"warmup_reps", r.warmup_reps}};
}

}  // namespace slx
