#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "detect.hpp"
#include "estimator.hpp"
#include "panel.hpp"
#include "rng.hpp"
#include "seeded.hpp"

namespace fsbs {

struct TuningGrid {
    std::vector<double> h_candidates;    // ascending, positive
    std::vector<double> tau_candidates;  // ascending, non-negative
    int r = 2;                           // smoothness order used in the rate formulas
};

// h = hbar = (T*n)^{-1/(2r+d)}
inline std::pair<double, double> default_bandwidths(int T, int n, int d, int r = 2) {
    if (T < 1 || n < 1) throw std::invalid_argument("default_bandwidths: T, n must be >= 1");
    const double h = std::pow(static_cast<double>(T) * n, -1.0 / (2.0 * r + d));
    return {h, h};
}

// Threshold rate sqrt(ln T) * sqrt(1 + T^{d/(2r+d)} n^{-2r/(2r+d)}); the
// tail-index exponent is taken at its sub-Gaussian value 1/2.
inline double threshold_rate(int T, int n, int d, int r = 2) {
    if (T < 2 || n < 1) throw std::invalid_argument("threshold_rate: T >= 2, n >= 1 required");
    const double denom = 2.0 * r + d;
    const double ratio = std::pow(static_cast<double>(T), d / denom) *
                         std::pow(static_cast<double>(n), -2.0 * r / denom);
    return std::sqrt(std::log(static_cast<double>(T))) * std::sqrt(1.0 + ratio);
}

namespace detail {

// center * 2^x for x evenly spaced in [lo, hi]; a single point sits at the
// center itself.
inline std::vector<double> geometric_span(double center, double lo, double hi, int size) {
    if (size < 1) throw std::invalid_argument("grid size must be >= 1");
    std::vector<double> out;
    out.reserve(size);
    if (size == 1) {
        out.push_back(center);
        return out;
    }
    for (int i = 0; i < size; ++i)
        out.push_back(center * std::exp2(lo + (hi - lo) * i / (size - 1)));
    return out;
}

}  // namespace detail

inline TuningGrid candidate_grid(int T, int n, int d, int r = 2, int h_size = 7, int tau_size = 10) {
    TuningGrid grid;
    grid.r = r;
    grid.h_candidates = detail::geometric_span(default_bandwidths(T, n, d, r).first, -2.0, 2.0, h_size);
    grid.tau_candidates = detail::geometric_span(threshold_rate(T, n, d, r), -4.0, 4.0, tau_size);
    return grid;
}

// Rule-of-thumb density bandwidth: per-axis sigma_j * (4/((d+2)N))^{1/(d+4)}
// with N = T*n, isotropicized by the geometric mean across axes.
inline double plugin_hbar(const FunctionalPanel& panel) {
    const std::size_t N = static_cast<std::size_t>(panel.T) * panel.n;
    if (N < 2) throw std::invalid_argument("plugin_hbar: need at least 2 observations");
    const double rate = std::pow(4.0 / ((panel.d + 2.0) * N), 1.0 / (panel.d + 4.0));
    double log_geo = 0.0;
    for (int j = 0; j < panel.d; ++j) {
        detail::KahanSum sum, sq;
        for (std::size_t k = 0; k < N; ++k) {
            const double v = panel.xs[k * panel.d + j];
            sum.add(v);
            sq.add(v * v);
        }
        const double mean = sum.value() / N;
        double var = (sq.value() - N * mean * mean) / (N - 1);
        if (var < 1e-12) var = 1e-12;  // degenerate axis: keep the bandwidth positive
        log_geo += std::log(std::sqrt(var) * rate);
    }
    return std::exp(log_geo / panel.d);
}

namespace detail {

// Held-out segment loss.  `train_cache` holds the train-panel mean estimates
// F_{t',h} evaluated at every validation observation point, cache row
// m = (t-1)*n + (i-1) for validation snapshot t, point i.  For each
// validation observation the prediction is the average of F over the train
// clocks of its segment, minus the two train snapshots adjacent in original
// time (original 2j-1 sits between train clocks j-1 and j), which would
// otherwise leak serially correlated noise into the prediction.  If the
// exclusion empties a (short) segment window the plain segment mean is used.
// Segments live on the train clock; a final odd snapshot joins the last one.
inline double cv_segment_loss(const EvalCache& train_cache, const FunctionalPanel& validation,
                              const std::vector<int>& cps_train, std::vector<double>& residuals_sq) {
    const int Ttr = train_cache.T;
    const int Tva = validation.T;
    const int n = validation.n;
    residuals_sq.assign(static_cast<std::size_t>(Tva) * n, 0.0);

    std::vector<int> bounds;
    bounds.push_back(0);
    for (int c : cps_train) bounds.push_back(c);
    bounds.push_back(Ttr);

    for (std::size_t kseg = 0; kseg + 1 < bounds.size(); ++kseg) {
        const int a = bounds[kseg];
        const int b = bounds[kseg + 1];
        const int hi = (b == Ttr) ? Tva : b;
        for (int j = a + 1; j <= hi; ++j) {
            for (int i = 1; i <= n; ++i) {
                const int m = (j - 1) * n + (i - 1);
                const double seg_sum = train_cache.prefix_at(m, b) - train_cache.prefix_at(m, a);
                const double plain = seg_sum / (b - a);
                double base = seg_sum;
                int cnt = b - a;
                for (int tn : {j, j - 1}) {
                    if (tn > a && tn <= b) {
                        base -= train_cache.mean_at(m, tn);
                        --cnt;
                    }
                }
                const double fbar = cnt > 0 ? base / cnt : plain;
                const double r = fbar - validation.value(j, i);
                residuals_sq[m] = r * r;
            }
        }
    }
    KahanSum total;
    for (double v : residuals_sq) total.add(v);
    return total.value();
}

}  // namespace detail

// Standalone held-out loss for a candidate segmentation on the train clock.
inline double validation_loss(const std::vector<int>& cps_train, const FunctionalPanel& train,
                              const FunctionalPanel& validation, double h, double hbar,
                              KernelFamily family = KernelFamily::gaussian,
                              double density_floor = 1e-3, int threads = 0) {
    for (int c : cps_train)
        if (c <= 0 || c >= train.T)
            throw std::invalid_argument("validation_loss: change-point outside (0, train.T)");
    const DensityField field{{family, train.d}, hbar, density_floor, &train};
    const EvalCache cache = build_eval_cache(train, field, h, validation.xs, threads);
    std::vector<double> r2;
    return detail::cv_segment_loss(cache, validation, cps_train, r2);
}

struct CvCell {
    double h = 0.0;
    double tau = 0.0;
    double loss = 0.0;
    int k_hat = 0;  // detections on the full panel at this (h, tau)
};

struct CvResult {
    double h = 0.0;
    double tau = 0.0;
    double hbar = 0.0;
    double loss = 0.0;
    int k_hat = 0;
    double loss_se = 0.0;                 // sampling spread of the minimal loss
    std::vector<CvCell> table;            // h-major, tau-minor, grid order
    std::vector<int> change_points;       // full-panel detections of the chosen cell
};

// Even/odd cross-validation over the (h, tau) grid.
//
// Detection runs on the full panel (the even-index subsequence has half the
// serial dependence of the original AR-type noise, so thresholds tuned on it
// do not transfer); the loss is still honestly held out: estimated
// change-points are mapped to the train clock (original 2j -> j) and train
// segment means predict the odd-index validation observations.  Among all
// cells within two standard errors of the minimal loss, the largest
// threshold wins (ties: smaller loss, then larger bandwidth) — the usual
// one-SE-style guard against overfitting the validation noise, which here
// shows up as spurious extra detections.
inline CvResult cross_validate(const FunctionalPanel& panel, const TuningGrid& grid,
                               DepthMode depth_mode, std::uint64_t seed,
                               double hbar_override = 0.0, double ck = 4.0,
                               KernelFamily family = KernelFamily::gaussian,
                               double density_floor = 1e-3, int threads = 0) {
    if (panel.T < 4) throw std::invalid_argument("cross_validate: panel.T must be >= 4");
    if (grid.h_candidates.empty() || grid.tau_candidates.empty())
        throw std::invalid_argument("cross_validate: empty candidate grid");

    const auto [train, validation] = split_even_odd(panel);
    const SeededIntervalSet intervals = generate_seeded_intervals(panel.T, depth_mode, ck);

    int M = static_cast<int>(std::ceil(std::log(static_cast<double>(panel.T))));
    if (M < 1) M = 1;
    Rng rng(seed);
    const std::vector<double> eval_pts = sample_eval_points(panel, M, rng);

    struct Cell {
        double loss;
        double h;
        double tau;
        int k_hat;
        std::vector<double> r2;
        std::vector<int> cps;
    };
    std::vector<Cell> cells;
    cells.reserve(grid.h_candidates.size() * grid.tau_candidates.size());

    for (double h : grid.h_candidates) {
        const double hb = hbar_override > 0.0 ? hbar_override : h;
        const DensityField field{{family, panel.d}, hb, density_floor, &panel};
        const EvalCache cache = build_eval_cache(panel, field, h, eval_pts, threads);
        const int rho = compute_rho(panel.T, panel.n, h, panel.d);
        const DensityField train_field{{family, panel.d}, hb, density_floor, &train};
        const EvalCache train_cache = build_eval_cache(train, train_field, h, validation.xs, threads);

        for (double tau : grid.tau_candidates) {
            DetectionResult det = detect_with_cache(cache, intervals, rho, tau, threads);
            std::vector<int> cps_train;
            for (int c : det.change_points) {
                const int ct = c / 2;
                if (ct > 0 && ct < train.T) cps_train.push_back(ct);
            }
            std::sort(cps_train.begin(), cps_train.end());
            cps_train.erase(std::unique(cps_train.begin(), cps_train.end()), cps_train.end());

            Cell cell;
            cell.h = h;
            cell.tau = tau;
            cell.k_hat = static_cast<int>(det.change_points.size());
            cell.loss = detail::cv_segment_loss(train_cache, validation, cps_train, cell.r2);
            cell.cps = std::move(det.change_points);
            cells.push_back(std::move(cell));
        }
    }

    // minimal-loss cell; ties go to the smaller threshold, then smaller bandwidth
    const Cell* best = &cells.front();
    for (const Cell& c : cells) {
        const bool better = c.loss < best->loss ||
                            (c.loss == best->loss &&
                             (c.tau < best->tau || (c.tau == best->tau && c.h < best->h)));
        if (better) best = &c;
    }

    // spread of the minimal loss: sqrt(sum r^4 - (sum r^2)^2 / N)
    detail::KahanSum s2, s4;
    for (double v : best->r2) {
        s2.add(v);
        s4.add(v * v);
    }
    const double N = static_cast<double>(best->r2.size());
    double var_term = s4.value() - s2.value() * s2.value() / N;
    if (var_term < 0.0) var_term = 0.0;
    const double se = std::sqrt(var_term);

    // within the 2-SE band prefer the largest threshold, then smaller loss,
    // then the larger bandwidth
    const double cutoff = best->loss + 2.0 * se;
    double tau_max = -1.0;
    for (const Cell& c : cells)
        if (c.loss <= cutoff && c.tau > tau_max) tau_max = c.tau;
    const Cell* pick = nullptr;
    for (const Cell& c : cells) {
        if (c.loss > cutoff || c.tau != tau_max) continue;
        if (!pick || c.loss < pick->loss || (c.loss == pick->loss && c.h > pick->h)) pick = &c;
    }

    CvResult out;
    out.h = pick->h;
    out.tau = pick->tau;
    out.hbar = hbar_override > 0.0 ? hbar_override : pick->h;
    out.loss = pick->loss;
    out.k_hat = pick->k_hat;
    out.loss_se = se;
    out.change_points = pick->cps;
    out.table.reserve(cells.size());
    for (const Cell& c : cells) out.table.push_back({c.h, c.tau, c.loss, c.k_hat});
    return out;
}

inline void write_loss_table(std::ostream& out, const std::vector<CvCell>& table) {
    out << "h,tau,loss,K_hat\n";
    for (const CvCell& c : table)
        out << detail::format_double(c.h) << ',' << detail::format_double(c.tau) << ','
            << detail::format_double(c.loss) << ',' << c.k_hat << '\n';
}

}  // namespace fsbs
