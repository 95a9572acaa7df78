#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "kernels.hpp"
#include "panel.hpp"
#include "threading.hpp"

namespace fsbs {

namespace detail {

// Compensated (Kahan) accumulator: keeps rounding error of long sums and of
// running prefix sums far below the 1e-10 oracle-test tolerance even for
// T*n in the 1e6 range.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        double t = sum + v;
        if (std::fabs(sum) >= std::fabs(v))
            carry += (sum - t) + v;
        else
            carry += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

}  // namespace detail

// Sampling-density estimator with a lower clamp.  The clamp guards the
// division in the mean estimator when the kernel sum vanishes (boundary
// points, tiny bandwidths); theory assumes the true density is bounded away
// from zero, finite samples do not.
struct DensityField {
    KernelSpec spec;
    double hbar = 0.1;
    double floor = 1e-3;
    const FunctionalPanel* source = nullptr;
};

// p_hat(x) = max(floor, (1/(nT)) sum_{t,i} K_hbar(x - x_{t,i}))
inline double density_estimate(const DensityField& field, const double* x) {
    const FunctionalPanel& p = *field.source;
    const int d = p.d;
    double diff[8];
    detail::KahanSum acc;
    const double* xp = p.xs.data();
    const std::size_t N = static_cast<std::size_t>(p.T) * p.n;
    for (std::size_t k = 0; k < N; ++k, xp += d) {
        for (int j = 0; j < d; ++j) diff[j] = x[j] - xp[j];
        acc.add(scaled_kernel(field.spec, field.hbar, diff));
    }
    double v = acc.value() / (static_cast<double>(p.n) * p.T);
    return v < field.floor ? field.floor : v;
}

// F_{t,h}(x) = sum_i y_{t,i} K_h(x - x_{t,i}) / (n * p_hat(x))
inline double mean_estimate(const FunctionalPanel& panel, const DensityField& field,
                            double h, int t, const double* x) {
    if (t < 1 || t > panel.T)
        throw std::out_of_range("mean_estimate: t=" + std::to_string(t) +
                                " outside 1.." + std::to_string(panel.T));
    const int d = panel.d;
    double diff[8];
    detail::KahanSum num;
    for (int i = 1; i <= panel.n; ++i) {
        const double* xi = panel.point(t, i);
        for (int j = 0; j < d; ++j) diff[j] = x[j] - xi[j];
        num.add(panel.value(t, i) * scaled_kernel(field.spec, h, diff));
    }
    return num.value() / (panel.n * density_estimate(field, x));
}

// Precomputed per-point prefix sums of F_{t,h}(u_m) so each CUSUM query is
// O(1).  Immutable after construction; reads are safe from any thread.
struct EvalCache {
    int M = 0;
    int T = 0;
    int d = 0;
    double h = 0.0;
    std::vector<double> points;             // M*d flat
    std::vector<double> prefix;             // M*(T+1); prefix[m][0] = 0
    std::vector<double> density_at_points;  // M

    double prefix_at(int m, int t) const {
        return prefix[static_cast<std::size_t>(m) * (T + 1) + t];
    }
    const double* point(int m) const { return points.data() + static_cast<std::size_t>(m) * d; }
    // F_{t,h}(u_m) recovered from consecutive prefix entries
    double mean_at(int m, int t) const { return prefix_at(m, t) - prefix_at(m, t - 1); }
};

inline EvalCache build_eval_cache(const FunctionalPanel& panel, const DensityField& field,
                                  double h, const std::vector<double>& points,
                                  int threads = 0) {
    const int d = panel.d;
    if (points.empty() || points.size() % d != 0)
        throw std::invalid_argument("build_eval_cache: no evaluation points");
    EvalCache cache;
    cache.M = static_cast<int>(points.size() / d);
    cache.T = panel.T;
    cache.d = d;
    cache.h = h;
    cache.points = points;
    cache.prefix.assign(static_cast<std::size_t>(cache.M) * (panel.T + 1), 0.0);
    cache.density_at_points.assign(cache.M, 0.0);
    if (threads <= 0) threads = default_thread_count();

    parallel_for(cache.M, threads, [&](int m) {
        const double* u = cache.point(m);
        const double ph = density_estimate(field, u);
        cache.density_at_points[m] = ph;
        double* row = cache.prefix.data() + static_cast<std::size_t>(m) * (panel.T + 1);
        row[0] = 0.0;
        detail::KahanSum running;
        double diff[8];
        for (int t = 1; t <= panel.T; ++t) {
            detail::KahanSum num;
            for (int i = 1; i <= panel.n; ++i) {
                const double* xi = panel.point(t, i);
                for (int j = 0; j < d; ++j) diff[j] = u[j] - xi[j];
                num.add(panel.value(t, i) * scaled_kernel(field.spec, h, diff));
            }
            running.add(num.value() / (panel.n * ph));
            row[t] = running.value();
        }
    });
    return cache;
}

// CUSUM of the F series at point m over (s,e] evaluated at t:
//   sqrt((e-t)/((e-s)(t-s))) * (P[t]-P[s]) - sqrt((t-s)/((e-s)(e-t))) * (P[e]-P[t])
inline double cusum(const EvalCache& cache, int m, int s, int e, int t) {
    if (!(0 <= s && s < t && t < e && e <= cache.T))
        throw std::invalid_argument("cusum: need 0 <= s < t < e <= T, got s=" +
                                    std::to_string(s) + " t=" + std::to_string(t) +
                                    " e=" + std::to_string(e));
    const double es = static_cast<double>(e - s);
    const double ts = static_cast<double>(t - s);
    const double et = static_cast<double>(e - t);
    const double left = cache.prefix_at(m, t) - cache.prefix_at(m, s);
    const double right = cache.prefix_at(m, e) - cache.prefix_at(m, t);
    return std::sqrt(et / (es * ts)) * left - std::sqrt(ts / (es * et)) * right;
}

// Debug dump of the per-point mean series, CSV `m,t,F` (m is 0-based, as in
// detection output).
inline void dump_eval_cache(std::ostream& out, const EvalCache& cache) {
    out << "m,t,F\n";
    for (int m = 0; m < cache.M; ++m)
        for (int t = 1; t <= cache.T; ++t)
            out << m << ',' << t << ',' << detail::format_double(cache.mean_at(m, t)) << '\n';
}

}  // namespace fsbs
