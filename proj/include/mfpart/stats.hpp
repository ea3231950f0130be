#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mfpart/analysis.hpp"
#include "mfpart/errors.hpp"
#include "mfpart/parallel.hpp"
#include "mfpart/random.hpp"

namespace mfpart {

/// Fisher-Yates permutation driven by mt19937_64(seed).
inline std::vector<double> shuffle(std::span<const double> v, std::uint64_t seed) {
    std::vector<double> out(v.begin(), v.end());
    if (out.size() < 2) return out;
    Rng rng(seed);
    for (std::size_t i = out.size() - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(out[i], out[pick(rng)]);
    }
    return out;
}

struct BootstrapConfig {
    std::size_t n = 1000;
    double level = 0.01;
    std::uint64_t master_seed = 0;
    double max_failed_fraction = 0.10;
    unsigned jobs = 1;
};

struct BootstrapReport {
    std::size_t n = 0;
    std::size_t n_valid = 0;
    double delta_alpha_real = 0.0;
    double F_real = 0.0;
    std::vector<std::optional<double>> delta_alpha_rnd;  // nullopt for failed replicates
    std::vector<std::optional<double>> F_rnd;
    std::vector<std::size_t> failed_replicates;
    double p1 = 0.0;
    double p2 = 0.0;
    bool significant_1 = false;
    bool significant_2 = false;
    double level = 0.01;
    std::uint64_t master_seed = 0;
    std::vector<std::string> warnings;
};

/// Fills p1, p2, n_valid, failed_replicates and the significance flags from
/// the per-replicate statistics already stored in `rep` (nullopt = failed).
/// Throws UnreliableTestError when too many replicates failed.
inline void tally_replicates(BootstrapReport& rep, const BootstrapConfig& cfg) {
    rep.n_valid = 0;
    rep.failed_replicates.clear();
    std::size_t count1 = 0, count2 = 0;
    for (std::size_t k = 0; k < rep.n; ++k) {
        if (!rep.delta_alpha_rnd[k]) {
            rep.failed_replicates.push_back(k);
            continue;
        }
        ++rep.n_valid;
        if (rep.delta_alpha_real <= *rep.delta_alpha_rnd[k]) ++count1;
        if (rep.F_real >= *rep.F_rnd[k]) ++count2;
    }
    const double failed_fraction = static_cast<double>(rep.failed_replicates.size()) / static_cast<double>(rep.n);
    if (failed_fraction > cfg.max_failed_fraction || rep.n_valid == 0)
        throw UnreliableTestError(std::to_string(rep.failed_replicates.size()) + " of " + std::to_string(rep.n) +
                                  " bootstrap replicates failed");
    if (!rep.failed_replicates.empty())
        rep.warnings.push_back(std::to_string(rep.failed_replicates.size()) +
                               " replicates failed and were excluded from the denominator");

    rep.p1 = static_cast<double>(count1) / static_cast<double>(rep.n_valid);
    rep.p2 = static_cast<double>(count2) / static_cast<double>(rep.n_valid);
    rep.significant_1 = rep.p1 <= cfg.level;
    rep.significant_2 = rep.p2 <= cfg.level;
}

/// Shuffle test of multifractality.
///
/// The real series is analyzed once; replicate k shuffles its analyzed prefix
/// with derive_seed(master_seed, k) and reruns the full analysis (range
/// selection included) on the same grid. p1 counts replicates with
/// delta_alpha_real <= delta_alpha_rnd, p2 those with F_real >= F_rnd, both
/// over the replicates that completed.
inline BootstrapReport bootstrap_test(std::span<const double> v, const AnalysisConfig& analysis_cfg,
                                      const BootstrapConfig& cfg) {
    if (cfg.n == 0) throw UsageError("bootstrap needs at least one replicate");
    if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw UsageError("significance level must lie in (0, 1)");

    AnalysisConfig inner = analysis_cfg;
    inner.jobs = 1;
    const Analysis real = analyze(v, inner);
    const AnalysisGrid& grid = real.table.grid;
    const std::span<const double> prefix = v.first(grid.analyzed_length);

    BootstrapReport rep;
    rep.n = cfg.n;
    rep.level = cfg.level;
    rep.master_seed = cfg.master_seed;
    rep.delta_alpha_real = real.scaling.delta_alpha;
    rep.F_real = real.scaling.F;
    rep.delta_alpha_rnd.assign(cfg.n, std::nullopt);
    rep.F_rnd.assign(cfg.n, std::nullopt);

    parallel_for(cfg.n, cfg.jobs, [&](std::size_t k) {
        try {
            const auto shuffled = shuffle(prefix, derive_seed(cfg.master_seed, k));
            const Analysis a = analyze_on_grid(shuffled, grid, inner);
            rep.delta_alpha_rnd[k] = a.scaling.delta_alpha;
            rep.F_rnd[k] = a.scaling.F;
        } catch (const Error&) {
            // recorded below as a failed replicate
        }
    });

    tally_replicates(rep, cfg);
    return rep;
}

}  // namespace mfpart
