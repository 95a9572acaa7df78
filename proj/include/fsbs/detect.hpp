#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "estimator.hpp"
#include "kernels.hpp"
#include "panel.hpp"
#include "rng.hpp"
#include "seeded.hpp"
#include "threading.hpp"

namespace fsbs {

struct FsbsParams {
    double h = 0.1;                 // mean-estimate bandwidth
    double hbar = 0.1;              // density bandwidth
    double tau = 1.0;               // detection threshold, >= 0
    KernelSpec kernel;              // family; dimension is taken from the panel
    DepthMode depth_mode = DepthMode::full;
    double ck = 4.0;                // depth constant for DepthMode::paper
    int eval_point_count = 0;       // 0 means ceil(ln T)
    std::uint64_t rng_seed = 1;
    double density_floor = 1e-3;
};

struct Detection {
    int location = 0;          // D: the recorded split point
    double score = 0.0;        // A: winning |CUSUM| value, > tau
    SeededInterval interval;   // the interval the maximum came from
    int eval_point_index = 0;  // m, 0-based
    int recursion_depth = 1;   // 1 at the top-level call
};

struct DetectionResult {
    std::vector<int> change_points;  // sorted ascending, each strictly inside (0,T)
    std::vector<Detection> detections;
    FsbsParams params_used;
    int rho = 0;
};

// rho = max(1, ceil(ln(T) / (n h^d)))
inline int compute_rho(int T, int n, double h, int d) {
    if (T < 2 || n < 1 || !(h > 0.0)) throw std::invalid_argument("compute_rho: bad inputs");
    double r = std::ceil(std::log(static_cast<double>(T)) / (n * std::pow(h, d)));
    return r < 1.0 ? 1 : static_cast<int>(r);
}

// Draw `count` positions without replacement from the T*n observed grid
// points (partial Fisher-Yates, so count == T*n yields a permutation prefix).
// Returns flat coords, count*d.
inline std::vector<double> sample_eval_points(const FunctionalPanel& panel, int count, Rng& rng) {
    const std::int64_t N = static_cast<std::int64_t>(panel.T) * panel.n;
    if (count < 1) throw std::invalid_argument("sample_eval_points: count must be >= 1");
    if (count > N)
        throw std::invalid_argument("sample_eval_points: count " + std::to_string(count) +
                                    " exceeds T*n = " + std::to_string(N));
    std::vector<std::int64_t> idx(N);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count) * panel.d);
    for (int k = 0; k < count; ++k) {
        const std::int64_t j = k + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(N - k)));
        std::swap(idx[k], idx[j]);
        const int t = static_cast<int>(idx[k] / panel.n) + 1;
        const int i = static_cast<int>(idx[k] % panel.n) + 1;
        const double* x = panel.point(t, i);
        out.insert(out.end(), x, x + panel.d);
    }
    return out;
}

// Per evaluation point m: (A_m, D_m) with A_m the trimmed max |CUSUM| over
// t in [s+rho, e-rho] and D_m its smallest maximizer; the sentinel (-1, 0)
// when the interval is too short to scan.
inline std::vector<std::pair<double, int>> scan_interval(const EvalCache& cache,
                                                         const SeededInterval& iv, int rho) {
    std::vector<std::pair<double, int>> out(cache.M, {-1.0, 0});
    const int lo = iv.s + rho;
    const int hi = iv.e - rho;
    if (iv.e - iv.s <= 2 * rho || lo > hi) return out;
    for (int m = 0; m < cache.M; ++m) {
        double A = -1.0;
        int D = 0;
        for (int t = lo; t <= hi; ++t) {
            const double a = std::fabs(cusum(cache, m, iv.s, iv.e, t));
            if (a > A) {
                A = a;
                D = t;
            }
        }
        out[m] = {A, D};
    }
    return out;
}

namespace detail {

struct ScanBest {
    double A = -1.0;
    int D = 0;
    int m = -1;
    int idx = -1;  // position in the canonical interval order of this step
};

// Deterministic preference: larger score, then smaller m, then earlier
// interval in canonical order.  Total order, so the reduction is
// thread-count independent.
inline bool beats(const ScanBest& a, const ScanBest& b) {
    if (a.A != b.A) return a.A > b.A;
    if (a.m != b.m) return a.m < b.m;
    return a.idx < b.idx;
}

inline void fsbs_recurse(const EvalCache& cache, const SeededIntervalSet& set,
                         int s, int e, int rho, double tau, int depth, int threads,
                         DetectionResult& res) {
    const std::vector<SeededInterval> ivs = intervals_within(set, s, e, 2 * rho);
    if (ivs.empty()) return;
    std::vector<ScanBest> bests(ivs.size());
    parallel_for(static_cast<int>(ivs.size()), threads, [&](int j) {
        const auto per_m = scan_interval(cache, ivs[j], rho);
        ScanBest b;
        for (int m = 0; m < cache.M; ++m)
            if (per_m[m].first > b.A) b = {per_m[m].first, per_m[m].second, m, j};
        bests[j] = b;
    });
    ScanBest best;
    for (const ScanBest& b : bests)
        if (beats(b, best)) best = b;
    if (!(best.A > tau)) return;
    res.detections.push_back({best.D, best.A, ivs[best.idx], best.m, depth});
    res.change_points.push_back(best.D);
    fsbs_recurse(cache, set, s, best.D, rho, tau, depth + 1, threads, res);
    fsbs_recurse(cache, set, best.D, e, rho, tau, depth + 1, threads, res);
}

}  // namespace detail

// Recursion on an existing cache; lets callers (tuning) sweep thresholds
// without rebuilding prefix sums.
inline DetectionResult detect_with_cache(const EvalCache& cache, const SeededIntervalSet& intervals,
                                         int rho, double tau, int threads = 0) {
    if (threads <= 0) threads = default_thread_count();
    DetectionResult res;
    res.rho = rho;
    res.params_used.tau = tau;
    res.params_used.h = cache.h;
    detail::fsbs_recurse(cache, intervals, 0, cache.T, rho, tau, 1, threads, res);
    std::sort(res.change_points.begin(), res.change_points.end());
    return res;
}

// Top-level detector: computes rho, samples the evaluation points once,
// builds the prefix cache once, then recursively splits (0,T] at the best
// above-threshold trimmed CUSUM maximum.
inline DetectionResult detect(const FunctionalPanel& panel, const FsbsParams& params,
                              const SeededIntervalSet& intervals, int threads = 0) {
    if (panel.T < 2) throw std::invalid_argument("detect: panel.T must be >= 2");
    if (!(params.h > 0.0) || !(params.hbar > 0.0) || !(params.tau >= 0.0))
        throw std::invalid_argument("detect: need h > 0, hbar > 0, tau >= 0");
    if (threads <= 0) threads = default_thread_count();

    FsbsParams p = params;
    p.kernel.d = panel.d;

    DetectionResult res;
    res.params_used = p;
    res.rho = compute_rho(panel.T, panel.n, p.h, panel.d);

    int M = p.eval_point_count;
    if (M <= 0) M = static_cast<int>(std::ceil(std::log(static_cast<double>(panel.T))));
    if (M < 1) M = 1;

    Rng rng(p.rng_seed);
    const std::vector<double> pts = sample_eval_points(panel, M, rng);
    const DensityField field{p.kernel, p.hbar, p.density_floor, &panel};
    const EvalCache cache = build_eval_cache(panel, field, p.h, pts, threads);

    detail::fsbs_recurse(cache, intervals, 0, panel.T, res.rho, p.tau, 1, threads, res);
    std::sort(res.change_points.begin(), res.change_points.end());
    return res;
}

inline std::string detection_result_to_json(const DetectionResult& r) {
    std::string s = "{\"change_points\":[";
    for (std::size_t k = 0; k < r.change_points.size(); ++k) {
        if (k) s += ',';
        s += std::to_string(r.change_points[k]);
    }
    s += "],\"rho\":" + std::to_string(r.rho);
    s += ",\"tau\":" + detail::format_double(r.params_used.tau);
    s += ",\"h\":" + detail::format_double(r.params_used.h);
    s += ",\"hbar\":" + detail::format_double(r.params_used.hbar);
    s += ",\"detections\":[";
    for (std::size_t k = 0; k < r.detections.size(); ++k) {
        const Detection& d = r.detections[k];
        if (k) s += ',';
        s += "{\"t\":" + std::to_string(d.location);
        s += ",\"score\":" + detail::format_double(d.score);
        s += ",\"interval\":[" + std::to_string(d.interval.s) + ',' + std::to_string(d.interval.e) + ']';
        s += ",\"m\":" + std::to_string(d.eval_point_index);
        s += ",\"depth\":" + std::to_string(d.recursion_depth) + '}';
    }
    s += "]}";
    return s;
}

}  // namespace fsbs
