#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "panel.hpp"  // detail::format_double

namespace fsbs {

// Symmetric two-sided Hausdorff distance on the integer time axis.
// Conventions for empty sets: both empty -> 0; exactly one empty -> T.
inline double hausdorff(const std::vector<int>& est, const std::vector<int>& truth, int T) {
    if (est.empty() && truth.empty()) return 0.0;
    if (est.empty() || truth.empty()) return static_cast<double>(T);
    int worst = 0;
    auto one_sided = [&](const std::vector<int>& a, const std::vector<int>& b) {
        for (int x : a) {
            int nearest = std::abs(x - b.front());
            for (int y : b) nearest = std::min(nearest, std::abs(x - y));
            worst = std::max(worst, nearest);
        }
    };
    one_sided(est, truth);
    one_sided(truth, est);
    return static_cast<double>(worst);
}

inline int k_diff(const std::vector<int>& est, const std::vector<int>& truth) {
    return std::abs(static_cast<int>(est.size()) - static_cast<int>(truth.size()));
}

struct EvalRecord {
    int K_true = 0;
    int K_hat = 0;
    double hausdorff_dist = 0.0;
    bool under = false;  // K_hat < K_true
    bool exact = false;
    bool over = false;   // K_hat > K_true
};

inline EvalRecord make_record(const std::vector<int>& est, const std::vector<int>& truth, int T) {
    EvalRecord r;
    r.K_true = static_cast<int>(truth.size());
    r.K_hat = static_cast<int>(est.size());
    r.hausdorff_dist = hausdorff(est, truth, T);
    r.under = r.K_hat < r.K_true;
    r.exact = r.K_hat == r.K_true;
    r.over = r.K_hat > r.K_true;
    return r;
}

struct SummaryRow {
    double p_under = 0.0;
    double p_exact = 0.0;
    double p_over = 0.0;
    double mean_abs_kdiff = 0.0;
    double mean_hausdorff = 0.0;
    double sd_abs_kdiff = 0.0;
    double sd_hausdorff = 0.0;
};

inline SummaryRow summarize(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw std::invalid_argument("summarize: no records");
    const double N = static_cast<double>(records.size());
    SummaryRow row;
    double k1 = 0.0, k2 = 0.0, h1 = 0.0, h2 = 0.0;
    for (const EvalRecord& r : records) {
        row.p_under += r.under;
        row.p_exact += r.exact;
        row.p_over += r.over;
        const double kd = std::abs(r.K_hat - r.K_true);
        k1 += kd;
        k2 += kd * kd;
        h1 += r.hausdorff_dist;
        h2 += r.hausdorff_dist * r.hausdorff_dist;
    }
    row.p_under /= N;
    row.p_exact /= N;
    row.p_over /= N;
    row.mean_abs_kdiff = k1 / N;
    row.mean_hausdorff = h1 / N;
    // population standard deviation: a single replication reports zero spread
    row.sd_abs_kdiff = std::sqrt(std::max(0.0, k2 / N - row.mean_abs_kdiff * row.mean_abs_kdiff));
    row.sd_hausdorff = std::sqrt(std::max(0.0, h2 / N - row.mean_hausdorff * row.mean_hausdorff));
    return row;
}

inline void write_summary_csv(std::ostream& out, const std::string& model, const SummaryRow& row) {
    out << "model,p_under,p_exact,p_over,mean_abs_kdiff,mean_hausdorff,sd_abs_kdiff,sd_hausdorff\n";
    out << model << ',' << detail::format_double(row.p_under) << ','
        << detail::format_double(row.p_exact) << ',' << detail::format_double(row.p_over) << ','
        << detail::format_double(row.mean_abs_kdiff) << ','
        << detail::format_double(row.mean_hausdorff) << ','
        << detail::format_double(row.sd_abs_kdiff) << ','
        << detail::format_double(row.sd_hausdorff) << '\n';
}

}  // namespace fsbs
