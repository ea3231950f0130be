#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfpart/errors.hpp"

namespace mfpart {

/// Mass exponent of the binomial p-model, tau(q) = -ln(p^q + (1-p)^q) / ln 2.
/// The dominant branch is factored out so large |q| cannot overflow.
inline double pmodel_tau(double p, double q) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("p-model parameter must lie in (0, 1)");
    const double a = std::log(p), b = std::log1p(-p);
    const double hi = q >= 0.0 ? std::max(a, b) : std::min(a, b);
    const double lo = hi == a ? b : a;
    return -(q * hi + std::log1p(std::exp(q * (lo - hi)))) / std::numbers::ln2;
}

/// alpha(q) = dtau/dq of the p-model.
inline double pmodel_alpha(double p, double q) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("p-model parameter must lie in (0, 1)");
    const double a = std::log(p), b = std::log1p(-p);
    // weights p^q / (p^q + (1-p)^q) computed in log space
    const double m = std::max(q * a, q * b);
    const double wa = std::exp(q * a - m), wb = std::exp(q * b - m);
    return -(wa * a + wb * b) / ((wa + wb) * std::numbers::ln2);
}

struct PModelFit {
    double p = 0.5;
    double rss = 0.0;
    std::vector<double> q;               // q values that entered the fit
    std::vector<double> per_q_residuals;  // tau_est - tau_model
    double grid_scan_rss = 0.0;           // best objective before golden-section refinement
    bool poor_fit = false;
    std::vector<std::string> warnings;
};

namespace detail {

inline double pmodel_rss(double p, std::span<const double> q, std::span<const double> tau) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double e = tau[i] - pmodel_tau(p, q[i]);
        s += e * e;
    }
    return s;
}

}  // namespace detail

inline constexpr double kPModelLowerBound = 1e-9;

/// Least-squares p over the valid tau points, canonicalized to p <= 0.5
/// (the model is symmetric under p <-> 1-p). A coarse scan brackets the
/// minimum, golden-section search refines it to 1e-8 in p.
inline PModelFit fit_pmodel(std::span<const double> q_grid, std::span<const std::optional<double>> tau) {
    if (q_grid.size() != tau.size()) throw UsageError("q grid and tau sizes differ");
    PModelFit fit;
    std::vector<double> t;
    for (std::size_t i = 0; i < q_grid.size(); ++i)
        if (tau[i] && std::isfinite(*tau[i])) {
            fit.q.push_back(q_grid[i]);
            t.push_back(*tau[i]);
        }
    if (fit.q.size() < 5) throw InsufficientScalingRangeError("p-model fit needs at least five valid tau values");

    auto objective = [&](double p) { return detail::pmodel_rss(p, fit.q, t); };

    constexpr int kScan = 200;
    const double lo_bound = kPModelLowerBound, hi_bound = 0.5;
    const double step = (hi_bound - lo_bound) / kScan;
    int best = 0;
    double best_val = objective(lo_bound);
    for (int k = 1; k <= kScan; ++k) {
        const double val = objective(lo_bound + step * k);
        if (val < best_val) {
            best_val = val;
            best = k;
        }
    }
    fit.grid_scan_rss = best_val;

    double a = lo_bound + step * std::max(best - 1, 0);
    double b = lo_bound + step * std::min(best + 1, kScan);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = objective(c), fd = objective(d);
    while (b - a > 1e-8) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    double p = 0.5 * (a + b);
    double rss = objective(p);
    // The scan point itself may beat the refined interior (e.g. minimum at 0.5).
    const double scan_p = lo_bound + step * best;
    if (best_val < rss) {
        p = scan_p;
        rss = best_val;
    }
    fit.p = std::min(p, 0.5);
    fit.rss = rss;
    for (std::size_t i = 0; i < fit.q.size(); ++i) fit.per_q_residuals.push_back(t[i] - pmodel_tau(fit.p, fit.q[i]));
    if (fit.p < 1e-3) {
        fit.poor_fit = true;
        fit.warnings.push_back("p-model fit ran into the p -> 0 boundary (rss=" + std::to_string(rss) + ")");
    }
    return fit;
}

/// Relative-frequency histogram g(p) with the population mean and standard
/// deviation of the fitted values.
struct PHistogram {
    std::vector<double> bin_edges;  // size = frequencies.size() + 1
    std::vector<double> frequencies;
    double mean_p = 0.0;
    double std_p = 0.0;
    std::size_t count = 0;
};

inline PHistogram build_histogram(std::span<const double> p_values, double bin_width = 0.01) {
    if (p_values.empty()) throw EmptyInputError("histogram needs at least one value");
    if (!(bin_width > 0.0)) throw UsageError("bin width must be positive");
    PHistogram h;
    h.count = p_values.size();
    auto bin_of = [&](double x) { return static_cast<long>(std::floor(x / bin_width + 1e-9)); };
    long lo = bin_of(p_values[0]), hi = lo;
    double sum = 0.0;
    for (double x : p_values) {
        lo = std::min(lo, bin_of(x));
        hi = std::max(hi, bin_of(x));
        sum += x;
    }
    h.mean_p = sum / static_cast<double>(h.count);
    double ss = 0.0;
    for (double x : p_values) ss += (x - h.mean_p) * (x - h.mean_p);
    h.std_p = std::sqrt(ss / static_cast<double>(h.count));

    h.frequencies.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (long k = lo; k <= hi + 1; ++k) h.bin_edges.push_back(static_cast<double>(k) * bin_width);
    for (double x : p_values) h.frequencies[static_cast<std::size_t>(bin_of(x) - lo)] += 1.0;
    for (auto& g : h.frequencies) g /= static_cast<double>(h.count);
    return h;
}

}  // namespace mfpart
