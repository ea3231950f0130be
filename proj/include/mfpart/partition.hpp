#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mfpart/errors.hpp"
#include "mfpart/grid.hpp"
#include "mfpart/parallel.hpp"

namespace mfpart {

/// Box sums u(n) and normalized measure mu(n) at one box size.
struct BoxMeasure {
    std::size_t s = 0;
    std::vector<double> u;
    std::vector<double> mu;
    double total = 0.0;
    double max_u = 0.0;
    std::size_t zero_box_count = 0;
};

inline BoxMeasure build_measure(std::span<const double> v, std::size_t s, std::size_t T) {
    if (s == 0 || T == 0 || T % s != 0) throw UsageError("box size must divide the analyzed length");
    if (T > v.size()) throw UsageError("analyzed length exceeds series length");
    BoxMeasure m;
    m.s = s;
    const std::size_t N = T / s;
    m.u.resize(N);
    for (std::size_t n = 0; n < N; ++n) {
        double acc = 0.0;
        for (std::size_t t = 0; t < s; ++t) {
            const double x = v[n * s + t];
            if (!(x >= 0.0)) throw DomainError("volatility values must be non-negative");
            acc += x;
        }
        m.u[n] = acc;
        m.total += acc;
        m.max_u = std::max(m.max_u, acc);
        if (acc == 0.0) ++m.zero_box_count;
    }
    if (!(m.total > 0.0)) throw DegenerateSeriesError("series sums to zero: prices never moved");
    m.mu.resize(N);
    for (std::size_t n = 0; n < N; ++n) m.mu[n] = m.u[n] / m.total;
    return m;
}

namespace detail {

/// ln(u/max_u) for every non-empty box; the reusable part of the log formula.
struct LogRatios {
    std::vector<double> r;
    double min_r = 0.0;
    double ln_max_over_total = 0.0;
    std::size_t zero_boxes = 0;
};

inline LogRatios log_ratios(const BoxMeasure& m) {
    LogRatios lr;
    lr.r.reserve(m.u.size());
    const double ln_max = std::log(m.max_u);
    for (double u : m.u) {
        if (u > 0.0) {
            lr.r.push_back(std::log(u) - ln_max);
            lr.min_r = std::min(lr.min_r, lr.r.back());
        }
    }
    lr.zero_boxes = m.zero_box_count;
    lr.ln_max_over_total = ln_max - std::log(m.total);
    return lr;
}

/// ln sum (u/max_u)^q + q ln(max_u / sum u). For q < 0 the smallest box
/// dominates, so its term is factored out before exponentiating.
inline std::optional<double> ln_partition(const LogRatios& lr, double q) {
    if (q < 0.0 && lr.zero_boxes > 0) return std::nullopt;
    const double shift = q < 0.0 ? q * lr.min_r : 0.0;
    double acc = 0.0;
    if (q == 0.0) {
        acc = static_cast<double>(lr.r.size());
    } else {
        for (double r : lr.r) acc += std::exp(q * r - shift);
    }
    return shift + std::log(acc) + q * lr.ln_max_over_total;
}

}  // namespace detail

/// ln chi_q(s), or nullopt when q < 0 meets an empty box. With 0^0 taken as
/// 0, q = 0 counts non-empty boxes only.
inline std::optional<double> ln_partition(const BoxMeasure& m, double q) {
    return detail::ln_partition(detail::log_ratios(m), q);
}

/// Contiguous run of box-size indices [first, last] used for one q's fit.
struct ScalingRange {
    std::size_t first = 0;
    std::size_t last = 0;
    std::optional<std::size_t> jump_cut;  // s_c: boxes of this size and smaller were excluded

    std::size_t count() const { return last - first + 1; }
};

/// ln chi over the (q, s) grid, row-major by q. Undefined cells are nullopt.
struct PartitionTable {
    AnalysisGrid grid;
    std::vector<std::optional<double>> ln_chi;
    std::vector<std::size_t> zero_box_count;         // per box size
    std::vector<std::optional<ScalingRange>> ranges;  // per q, filled by range selection

    const std::optional<double>& at(std::size_t qi, std::size_t si) const { return ln_chi[qi * grid.s_count() + si]; }
    std::optional<double>& at(std::size_t qi, std::size_t si) { return ln_chi[qi * grid.s_count() + si]; }
};

/// Fills every (q, s) cell. Columns are independent, so the result does not
/// depend on `jobs`.
inline PartitionTable compute_partition_table(std::span<const double> v, const AnalysisGrid& grid,
                                              unsigned jobs = 1) {
    PartitionTable table;
    table.grid = grid;
    table.ln_chi.assign(grid.q_count() * grid.s_count(), std::nullopt);
    table.zero_box_count.assign(grid.s_count(), 0);
    table.ranges.assign(grid.q_count(), std::nullopt);

    // Fail fast on a flat series before spawning work.
    build_measure(v, grid.analyzed_length, grid.analyzed_length);

    parallel_for(grid.s_count(), jobs, [&](std::size_t si) {
        const BoxMeasure m = build_measure(v, grid.box_sizes[si], grid.analyzed_length);
        const detail::LogRatios lr = detail::log_ratios(m);
        table.zero_box_count[si] = m.zero_box_count;
        for (std::size_t qi = 0; qi < grid.q_count(); ++qi) table.at(qi, si) = detail::ln_partition(lr, grid.q_values[qi]);
    });
    return table;
}

}  // namespace mfpart
