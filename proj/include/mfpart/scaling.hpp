#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfpart/errors.hpp"
#include "mfpart/partition.hpp"

namespace mfpart {

struct RangeConfig {
    std::size_t min_scales = 5;
    double jump_threshold = 5.0;
};

namespace detail {

inline double median(std::vector<double> x) {
    if (x.empty()) return 0.0;
    const auto mid = x.begin() + static_cast<std::ptrdiff_t>(x.size() / 2);
    std::nth_element(x.begin(), mid, x.end());
    if (x.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(x.begin(), mid);
    return 0.5 * (lo + hi);
}

// Increments smaller than this (per unit ln s) never count as jumps; they are
// rounding noise on an exact power law.
inline constexpr double kJumpFloor = 1e-9;

}  // namespace detail

/// Chooses the fitted box-size window for row qi.
///
/// q >= 0 uses every defined scale. For q < 0, the largest undefined scale and
/// the largest scale whose log-slope to the next scale exceeds
/// jump_threshold x the upper-half median both mark s_c; the fit keeps scales
/// strictly above s_c. When fewer than min_scales survive, the widest jump-free
/// run of defined scales is used instead. Returns nullopt if nothing usable
/// remains.
inline std::optional<ScalingRange> select_scaling_range(const PartitionTable& table, std::size_t qi,
                                                        const RangeConfig& cfg = {}) {
    const auto& grid = table.grid;
    const std::size_t S = grid.s_count();
    const double q = grid.q_values[qi];

    auto ln_s = [&](std::size_t si) { return std::log(static_cast<double>(grid.box_sizes[si])); };
    auto defined = [&](std::size_t si) { return table.at(qi, si).has_value(); };

    // Longest run of defined scales (ties go to larger scales), optionally
    // also split wherever `is_break(si)` says si starts a new segment.
    auto widest_run = [&](auto&& is_break) -> std::optional<ScalingRange> {
        std::optional<ScalingRange> best;
        std::size_t si = 0;
        while (si < S) {
            if (!defined(si)) {
                ++si;
                continue;
            }
            std::size_t end = si;
            while (end + 1 < S && defined(end + 1) && !is_break(end + 1)) ++end;
            if (!best || end - si + 1 >= best->count()) best = ScalingRange{si, end, std::nullopt};
            si = end + 1;
        }
        if (best && best->first > 0) best->jump_cut = grid.box_sizes[best->first - 1];
        if (!best || best->count() < cfg.min_scales) return std::nullopt;
        return best;
    };

    if (q >= 0.0) return widest_run([](std::size_t) { return false; });

    std::optional<std::size_t> cut;  // index of s_c
    for (std::size_t si = 0; si < S; ++si)
        if (!defined(si)) cut = si;

    const std::size_t start = cut ? *cut + 1 : 0;
    // increment[j] is the log-slope between scales start+j-1 and start+j.
    std::vector<double> increment;
    for (std::size_t si = start + 1; si < S; ++si)
        increment.push_back(std::abs(*table.at(qi, si) - *table.at(qi, si - 1)) / (ln_s(si) - ln_s(si - 1)));

    double limit = std::numeric_limits<double>::infinity();
    if (increment.size() >= 2) {
        const std::size_t upper_from = (increment.size() + 1) / 2;
        std::vector<double> upper(increment.begin() + static_cast<std::ptrdiff_t>(upper_from), increment.end());
        limit = std::max(cfg.jump_threshold * detail::median(upper), detail::kJumpFloor);
    }
    auto jumps_into = [&](std::size_t si) {
        if (si <= start || si >= S) return false;
        return increment[si - start - 1] > limit;
    };

    for (std::size_t si = start + 1; si < S; ++si)
        if (jumps_into(si)) cut = si - 1;

    const std::size_t first = cut ? *cut + 1 : 0;
    if (first < S && S - first >= cfg.min_scales) {
        ScalingRange r{first, S - 1, std::nullopt};
        if (cut) r.jump_cut = grid.box_sizes[*cut];
        return r;
    }
    return widest_run(jumps_into);
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r2 = 1.0;
};

/// Unweighted least squares y = slope * x + intercept.
inline LinearFit ols(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw InsufficientScalingRangeError("regression needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw InsufficientScalingRangeError("regression abscissae are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ssr += e * e;
    }
    f.slope_stderr = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2) / sxx) : 0.0;
    f.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    return f;
}

/// tau(q) estimates with the Legendre-derived spectrum. Per-q entries are
/// nullopt where no usable scaling range existed.
struct ScalingResult {
    std::vector<std::optional<double>> tau;
    std::vector<std::optional<double>> fit_stderr;
    std::vector<std::optional<double>> fit_r2;
    std::vector<std::optional<double>> alpha;
    std::vector<std::optional<double>> f_alpha;
    double alpha_min = 0.0;
    double alpha_max = 0.0;
    double delta_alpha = 0.0;
    double F = 0.0;
    bool non_concave = false;
    std::vector<std::string> warnings;
};

/// Selects a range for every q (stored in table.ranges) and fits the slope of
/// ln chi against ln s over it.
inline ScalingResult estimate_tau(PartitionTable& table, const RangeConfig& cfg = {}) {
    const auto& grid = table.grid;
    ScalingResult res;
    res.tau.assign(grid.q_count(), std::nullopt);
    res.fit_stderr = res.tau;
    res.fit_r2 = res.tau;
    res.alpha = res.tau;
    res.f_alpha = res.tau;
    table.ranges.assign(grid.q_count(), std::nullopt);
    for (std::size_t qi = 0; qi < grid.q_count(); ++qi) {
        table.ranges[qi] = select_scaling_range(table, qi, cfg);
        if (!table.ranges[qi]) {
            res.warnings.push_back("insufficient scaling range at q=" + std::to_string(grid.q_values[qi]));
            continue;
        }
        std::vector<double> x, y;
        for (std::size_t si = table.ranges[qi]->first; si <= table.ranges[qi]->last; ++si) {
            x.push_back(std::log(static_cast<double>(grid.box_sizes[si])));
            y.push_back(*table.at(qi, si));
        }
        const LinearFit fit = ols(x, y);
        res.tau[qi] = fit.slope;
        res.fit_stderr[qi] = fit.slope_stderr;
        res.fit_r2[qi] = fit.r2;
    }
    return res;
}

namespace detail {

/// Derivative at x of the parabola through three points (any spacing).
inline double three_point_derivative(const double xs[3], const double ys[3], double x) {
    double d = 0.0;
    for (int i = 0; i < 3; ++i) {
        double denom = 1.0;
        for (int k = 0; k < 3; ++k)
            if (k != i) denom *= xs[i] - xs[k];
        double numer = 0.0;
        for (int j = 0; j < 3; ++j) {
            if (j == i) continue;
            double prod = 1.0;
            for (int k = 0; k < 3; ++k)
                if (k != i && k != j) prod *= x - xs[k];
            numer += prod;
        }
        d += ys[i] * numer / denom;
    }
    return d;
}

}  // namespace detail

/// alpha = dtau/dq by central differences (second-order one-sided at the ends
/// of each run of defined tau), f = q alpha - tau. Fills the spectrum fields
/// of `res`; throws when no run of three consecutive defined tau exists.
inline void legendre_spectrum(std::span<const double> q, ScalingResult& res) {
    const std::size_t n = q.size();
    res.alpha.assign(n, std::nullopt);
    res.f_alpha.assign(n, std::nullopt);
    res.non_concave = false;

    bool any = false;
    std::size_t i = 0;
    while (i < n) {
        if (!res.tau[i]) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end + 1 < n && res.tau[end + 1]) ++end;
        if (end - i + 1 >= 3) {
            any = true;
            for (std::size_t k = i; k <= end; ++k) {
                const std::size_t c = std::clamp(k, i + 1, end - 1);
                const double xs[3] = {q[c - 1], q[c], q[c + 1]};
                const double ys[3] = {*res.tau[c - 1], *res.tau[c], *res.tau[c + 1]};
                const double a = detail::three_point_derivative(xs, ys, q[k]);
                res.alpha[k] = a;
                res.f_alpha[k] = q[k] * a - *res.tau[k];
            }
        }
        i = end + 1;
    }
    if (!any) throw InsufficientScalingRangeError("tau(q) is not defined on three consecutive q values");

    std::optional<std::size_t> imin, imax;
    for (std::size_t k = 0; k < n; ++k) {
        if (!res.alpha[k]) continue;
        if (!imin || *res.alpha[k] < *res.alpha[*imin]) imin = k;
        if (!imax || *res.alpha[k] > *res.alpha[*imax]) imax = k;
        if (k > 0 && res.alpha[k - 1] && *res.alpha[k] - *res.alpha[k - 1] > 1e-6) res.non_concave = true;
    }
    res.alpha_min = *res.alpha[*imin];
    res.alpha_max = *res.alpha[*imax];
    res.delta_alpha = res.alpha_max - res.alpha_min;
    res.F = 0.5 * (*res.f_alpha[*imin] + *res.f_alpha[*imax]);
    if (res.non_concave) res.warnings.push_back("tau(q) is not concave: alpha(q) increases somewhere");
}

/// Fits tau from an already-filled table and derives the spectrum.
inline ScalingResult fit_scaling(PartitionTable& table, const RangeConfig& cfg = {}) {
    ScalingResult res = estimate_tau(table, cfg);
    legendre_spectrum(table.grid.q_values, res);
    return res;
}

}  // namespace mfpart
