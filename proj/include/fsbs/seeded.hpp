#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fsbs {

// Deterministic multiscale interval system.  Scale k contributes 2^k - 1
// intervals of length T*2^{-k+1}, evenly shifted by T*2^{-k} before rounding:
//   (s, e] with s = floor((i-1)*T/2^k), e = ceil((i-1)*T/2^k + T/2^{k-1}).
struct SeededInterval {
    int s = 0;
    int e = 0;
    int k = 1;  // scale
    int i = 1;  // shift index within the scale
};

enum class DepthMode {
    paper,  // ceil(ck * ln ln T) scales
    full,   // ceil(log2 T) scales; safer when segments are much shorter than T
};

struct SeededIntervalSet {
    int T = 0;
    int depth = 0;
    long raw_count = 0;  // sum over k of 2^k - 1, before de-duplication
    std::vector<SeededInterval> intervals;  // canonical order: ascending k, then i
};

inline int seeded_depth(int T, DepthMode mode, double ck = 4.0) {
    if (mode == DepthMode::full) {
        int k = 0;
        while ((std::int64_t{1} << k) < T) ++k;  // exact ceil(log2 T)
        return k < 1 ? 1 : k;
    }
    if (!(ck > 0.0)) throw std::invalid_argument("seeded_depth: ck must be positive");
    int k = static_cast<int>(std::ceil(ck * std::log(std::log(static_cast<double>(T)))));
    return k < 1 ? 1 : k;
}

inline SeededIntervalSet generate_seeded_intervals(int T, DepthMode mode = DepthMode::full, double ck = 4.0) {
    if (T < 2) throw std::invalid_argument("seeded intervals need T >= 2");
    SeededIntervalSet set;
    set.T = T;
    set.depth = seeded_depth(T, mode, ck);
    std::set<std::pair<int, int>> seen;  // rounding can collide at deep scales
    for (int k = 1; k <= set.depth; ++k) {
        const std::int64_t count = (std::int64_t{1} << k) - 1;
        set.raw_count += count;
        for (std::int64_t i = 1; i <= count; ++i) {
            // exact integer arithmetic: floor(a/2^k) and ceil((a+2T)/2^k)
            const std::int64_t a = (i - 1) * static_cast<std::int64_t>(T);
            const int s = static_cast<int>(a >> k);
            const int e = static_cast<int>((a + 2 * static_cast<std::int64_t>(T) +
                                            (std::int64_t{1} << k) - 1) >> k);
            if (!seen.emplace(s, e).second) continue;
            set.intervals.push_back({s, e, k, static_cast<int>(i)});
        }
    }
    return set;
}

// Intervals (a,b] with s <= a, b <= e and b - a > min_len, canonical order.
inline std::vector<SeededInterval> intervals_within(const SeededIntervalSet& set,
                                                    int s, int e, int min_len) {
    if (!(0 <= s && s < e && e <= set.T))
        throw std::invalid_argument("intervals_within: need 0 <= s < e <= T");
    std::vector<SeededInterval> out;
    for (const SeededInterval& iv : set.intervals)
        if (iv.s >= s && iv.e <= e && iv.e - iv.s > min_len) out.push_back(iv);
    return out;
}

// Inspection dump, CSV `k,i,s,e`.
inline void dump_intervals(std::ostream& out, const SeededIntervalSet& set) {
    out << "k,i,s,e\n";
    for (const SeededInterval& iv : set.intervals)
        out << iv.k << ',' << iv.i << ',' << iv.s << ',' << iv.e << '\n';
}

}  // namespace fsbs
