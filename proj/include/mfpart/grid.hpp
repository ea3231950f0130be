#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mfpart/errors.hpp"

namespace mfpart {

/// Moment orders and box sizes shared by every (q, s) cell of an analysis.
/// Every box size divides analyzed_length exactly.
struct AnalysisGrid {
    std::vector<double> q_values;
    std::vector<std::size_t> box_sizes;
    std::size_t analyzed_length = 0;

    std::size_t q_count() const { return q_values.size(); }
    std::size_t s_count() const { return box_sizes.size(); }

    /// Index of q on the grid, or npos if absent (matched to 1e-9).
    std::size_t q_index(double q) const {
        for (std::size_t i = 0; i < q_values.size(); ++i)
            if (std::abs(q_values[i] - q) < 1e-9) return i;
        return npos;
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct GridConfig {
    std::size_t min_boxes = 4;     // largest box leaves at least this many boxes
    int scales_per_decade = 16;    // density of the log-spaced target list
    double max_gap_ratio = 2.0;    // a usable length has no divisor gap wider than this
};

inline double snap_q(double q) { return std::round(q * 1e9) / 1e9; }

/// qmin, qmin + step, ..., qmax with accumulated rounding removed. q = 0 and
/// q = 1 are always present: normalization and box counting depend on them.
inline std::vector<double> make_q_grid(double qmin, double qmax, double qstep) {
    if (!(qstep > 0.0) || !(qmax > qmin) || !std::isfinite(qmin) || !std::isfinite(qmax))
        throw UsageError("q grid needs qmin < qmax and qstep > 0");
    std::vector<double> q;
    const auto steps = static_cast<long>(std::floor((qmax - qmin) / qstep + 1e-9));
    for (long k = 0; k <= steps; ++k) q.push_back(snap_q(qmin + static_cast<double>(k) * qstep));
    q.push_back(0.0);
    q.push_back(1.0);
    std::sort(q.begin(), q.end());
    q.erase(std::unique(q.begin(), q.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }), q.end());
    for (auto& v : q)
        if (v == 0.0) v = 0.0;  // no -0.0 in output documents
    return q;
}

/// Divisors of n in ascending order.
inline std::vector<std::size_t> divisors(std::size_t n) {
    std::vector<std::size_t> lo, hi;
    for (std::size_t d = 1; d * d <= n; ++d) {
        if (n % d != 0) continue;
        lo.push_back(d);
        if (d != n / d) hi.push_back(n / d);
    }
    lo.insert(lo.end(), hi.rbegin(), hi.rend());
    return lo;
}

/// True when the divisors of T up to T/min_boxes cover [1, T/min_boxes]
/// with no ratio gap above max_gap_ratio, top end included.
inline bool has_dense_divisors(std::size_t T, const GridConfig& cfg) {
    const std::size_t limit = T / cfg.min_boxes;
    if (limit < 1) return false;
    std::size_t prev = 1;
    for (std::size_t d : divisors(T)) {
        if (d > limit) break;
        if (static_cast<double>(d) > cfg.max_gap_ratio * static_cast<double>(prev)) return false;
        prev = d;
    }
    return static_cast<double>(limit) <= cfg.max_gap_ratio * static_cast<double>(prev);
}

/// Largest T <= length whose divisor set is dense on a log scale. Powers of
/// two always qualify, so the search ends by length/2 at the latest; in
/// practice it stops within a few steps.
inline std::size_t choose_analyzed_length(std::size_t length, const GridConfig& cfg = {}) {
    if (length < cfg.min_boxes) throw InsufficientScalingRangeError("series too short to analyze");
    for (std::size_t T = length; T >= cfg.min_boxes; --T)
        if (has_dense_divisors(T, cfg)) return T;
    throw InsufficientScalingRangeError("series too short to analyze");
}

/// Divisors of T nearest (in log distance) to log-spaced targets between 1
/// and T/min_boxes, deduplicated.
inline std::vector<std::size_t> select_box_sizes(std::size_t T, const GridConfig& cfg = {}) {
    const std::size_t limit = T / cfg.min_boxes;
    std::vector<std::size_t> cand;
    for (std::size_t d : divisors(T))
        if (d <= limit) cand.push_back(d);
    if (cand.empty()) throw InsufficientScalingRangeError("no admissible box sizes");

    std::vector<std::size_t> chosen{cand.front(), cand.back()};
    const double decades = std::log10(static_cast<double>(limit));
    const int n_targets = static_cast<int>(std::floor(decades * cfg.scales_per_decade)) + 1;
    for (int k = 0; k < n_targets; ++k) {
        const double target = static_cast<double>(k) / cfg.scales_per_decade;
        std::size_t best = cand.front();
        double best_dist = 1e300;
        for (std::size_t d : cand) {
            const double dist = std::abs(std::log10(static_cast<double>(d)) - target);
            if (dist < best_dist) {
                best_dist = dist;
                best = d;
            }
        }
        chosen.push_back(best);
    }
    std::sort(chosen.begin(), chosen.end());
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
    return chosen;
}

inline AnalysisGrid make_grid(std::size_t series_length, double qmin, double qmax, double qstep,
                              const GridConfig& cfg = {}) {
    AnalysisGrid g;
    g.q_values = make_q_grid(qmin, qmax, qstep);
    g.analyzed_length = choose_analyzed_length(series_length, cfg);
    g.box_sizes = select_box_sizes(g.analyzed_length, cfg);
    return g;
}

}  // namespace mfpart
