#pragma once

#include <span>
#include <string>

#include "mfpart/grid.hpp"
#include "mfpart/partition.hpp"
#include "mfpart/scaling.hpp"

namespace mfpart {

struct AnalysisConfig {
    double qmin = -3.0;
    double qmax = 5.0;
    double qstep = 0.2;
    RangeConfig range;
    GridConfig grid;
    unsigned jobs = 1;
};

/// Everything one series' partition-function analysis produces.
struct Analysis {
    std::string instrument_id;
    PartitionTable table;
    ScalingResult scaling;
};

inline AnalysisGrid grid_for(std::size_t series_length, const AnalysisConfig& cfg) {
    return make_grid(series_length, cfg.qmin, cfg.qmax, cfg.qstep, cfg.grid);
}

/// Analysis on a fixed grid; the series must be at least grid.analyzed_length
/// long and only that prefix is used.
inline Analysis analyze_on_grid(std::span<const double> v, const AnalysisGrid& grid, const AnalysisConfig& cfg) {
    Analysis a;
    a.table = compute_partition_table(v, grid, cfg.jobs);
    a.scaling = fit_scaling(a.table, cfg.range);
    return a;
}

inline Analysis analyze(std::span<const double> v, const AnalysisConfig& cfg = {}) {
    return analyze_on_grid(v, grid_for(v.size(), cfg), cfg);
}

}  // namespace mfpart
