#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

namespace fsbs {

// A functional panel: T snapshots, each observed at n grid points in [0,1]^d.
// Storage is flat and (t,i)-major so kernel sums stream linearly.
// Immutable after construction; safe to share across threads by reference.
struct FunctionalPanel {
    int T = 0;
    int n = 0;
    int d = 0;
    std::vector<double> xs;            // ((t-1)*n + (i-1))*d + j, 1-based t,i
    std::vector<double> ys;            // (t-1)*n + (i-1)
    std::vector<int> original_index;   // local snapshot t -> time index in the parent panel

    const double* point(int t, int i) const {
        return xs.data() + (static_cast<std::size_t>(t - 1) * n + (i - 1)) * d;
    }
    double value(int t, int i) const {
        return ys[static_cast<std::size_t>(t - 1) * n + (i - 1)];
    }
};

namespace detail {

inline std::string panel_header(int d) {
    std::string h = "t,i";
    for (int j = 1; j <= d; ++j) h += ",x" + std::to_string(j);
    h += ",y";
    return h;
}

inline void split_fields(const std::string& line, std::vector<std::string>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto res = std::from_chars(b, e, out);
    return res.ec == std::errc() && res.ptr == e;
}

inline bool parse_int(const std::string& s, long& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto res = std::from_chars(b, e, out);
    return res.ec == std::errc() && res.ptr == e;
}

// Shortest decimal that round-trips the double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

[[noreturn]] inline void row_error(long row, const std::string& what) {
    throw std::runtime_error("row " + std::to_string(row) + ": " + what);
}

}  // namespace detail

// Reads the CSV panel format: header `t,i,x1,...,xd,y`, one observation per
// row, t contiguous from 1, equal point count per snapshot.  Coordinates
// outside [0,1] are an error unless `rescale` is set, in which case each
// offending coordinate axis is min-max rescaled to [0,1].  Errors carry the
// 1-based row number (header = row 1).
inline FunctionalPanel load_panel(std::istream& in, int d, bool rescale = false) {
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");

    std::string line;
    long row = 0;
    if (!std::getline(in, line)) throw std::runtime_error("row 1: missing header");
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string want = detail::panel_header(d);
    if (line != want)
        detail::row_error(row, "bad header, expected `" + want + "` got `" + line + "`");

    FunctionalPanel p;
    p.d = d;
    std::vector<std::string> fields;
    long cur_t = 0;          // snapshot currently being filled
    int cur_count = 0;       // points seen for cur_t
    long block_start_row = 0;
    long first_oob_row = 0;  // first row with a coordinate outside [0,1]

    auto close_block = [&]() {
        if (cur_t == 0) return;
        if (p.n == 0) {
            p.n = cur_count;
        } else if (cur_count != p.n) {
            detail::row_error(block_start_row,
                              "inconsistent n: t=" + std::to_string(cur_t) + " has " +
                                  std::to_string(cur_count) + " points, expected " +
                                  std::to_string(p.n));
        }
    };

    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        detail::split_fields(line, fields);
        if (static_cast<int>(fields.size()) != d + 3)
            detail::row_error(row, "malformed row: expected " + std::to_string(d + 3) +
                                       " fields, got " + std::to_string(fields.size()));
        long t, i;
        if (!detail::parse_int(fields[0], t)) detail::row_error(row, "malformed t `" + fields[0] + "`");
        if (!detail::parse_int(fields[1], i)) detail::row_error(row, "malformed i `" + fields[1] + "`");
        if (t == cur_t + 1) {
            close_block();
            cur_t = t;
            cur_count = 0;
            block_start_row = row;
        } else if (t != cur_t) {
            detail::row_error(row, "non-contiguous t: got " + std::to_string(t) +
                                       " after " + std::to_string(cur_t));
        }
        (void)i;  // i is positional; file order within a snapshot is authoritative
        for (int j = 0; j < d; ++j) {
            double v;
            if (!detail::parse_double(fields[2 + j], v))
                detail::row_error(row, "malformed x" + std::to_string(j + 1) + " `" + fields[2 + j] + "`");
            if (!std::isfinite(v))
                detail::row_error(row, "non-finite x" + std::to_string(j + 1));
            if ((v < 0.0 || v > 1.0) && first_oob_row == 0) first_oob_row = row;
            p.xs.push_back(v);
        }
        double y;
        if (!detail::parse_double(fields[2 + d], y))
            detail::row_error(row, "malformed y `" + fields[2 + d] + "`");
        if (!std::isfinite(y)) detail::row_error(row, "non-finite y");
        p.ys.push_back(y);
        ++cur_count;
    }
    close_block();
    if (cur_t == 0) throw std::runtime_error("row 1: no data rows");
    p.T = static_cast<int>(cur_t);

    if (first_oob_row != 0) {
        if (!rescale)
            detail::row_error(first_oob_row,
                              "coordinate outside [0,1] (pass the rescale flag to min-max rescale)");
        for (int j = 0; j < d; ++j) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (std::size_t k = j; k < p.xs.size(); k += d) {
                lo = std::min(lo, p.xs[k]);
                hi = std::max(hi, p.xs[k]);
            }
            if (lo >= 0.0 && hi <= 1.0) continue;  // axis already in range, leave it alone
            const double span = hi - lo;
            for (std::size_t k = j; k < p.xs.size(); k += d)
                p.xs[k] = span > 0.0 ? (p.xs[k] - lo) / span : 0.5;
        }
    }

    p.original_index.resize(p.T);
    for (int t = 1; t <= p.T; ++t) p.original_index[t - 1] = t;
    return p;
}

inline void write_panel(std::ostream& out, const FunctionalPanel& p) {
    out << detail::panel_header(p.d) << '\n';
    for (int t = 1; t <= p.T; ++t)
        for (int i = 1; i <= p.n; ++i) {
            out << t << ',' << i;
            const double* x = p.point(t, i);
            for (int j = 0; j < p.d; ++j) out << ',' << detail::format_double(x[j]);
            out << ',' << detail::format_double(p.value(t, i)) << '\n';
        }
}

inline FunctionalPanel load_panel_file(const std::string& path, int d, bool rescale = false) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_panel(in, d, rescale);
}

inline void write_panel_file(const std::string& path, const FunctionalPanel& p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_panel(out, p);
}

// Train = snapshots at even original indices {2,4,...} re-indexed 1..floor(T/2);
// validation = odd indices {1,3,...} re-indexed 1..ceil(T/2).  original_index
// composes through repeated splits.
inline std::pair<FunctionalPanel, FunctionalPanel> split_even_odd(const FunctionalPanel& p) {
    if (p.T < 2) throw std::invalid_argument("split_even_odd: T must be >= 2");
    FunctionalPanel train, val;
    train.n = val.n = p.n;
    train.d = val.d = p.d;
    train.T = p.T / 2;
    val.T = p.T - train.T;
    const std::size_t snap_x = static_cast<std::size_t>(p.n) * p.d;
    auto copy_snapshot = [&](FunctionalPanel& dst, int src_t) {
        const std::size_t off = static_cast<std::size_t>(src_t - 1);
        dst.xs.insert(dst.xs.end(), p.xs.begin() + off * snap_x, p.xs.begin() + (off + 1) * snap_x);
        dst.ys.insert(dst.ys.end(), p.ys.begin() + off * p.n, p.ys.begin() + (off + 1) * p.n);
        dst.original_index.push_back(p.original_index[src_t - 1]);
    };
    for (int t = 1; t <= p.T; ++t) copy_snapshot(t % 2 == 0 ? train : val, t);
    return {std::move(train), std::move(val)};
}

}  // namespace fsbs
