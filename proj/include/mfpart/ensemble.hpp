#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mfpart/analysis.hpp"
#include "mfpart/errors.hpp"
#include "mfpart/parallel.hpp"

namespace mfpart {

struct EnsembleMember {
    std::string id;
    PartitionTable table;
};

struct SeriesInput {
    std::string id;
    std::vector<double> values;
};

/// Per-member partition functions on a shared grid plus their quenched
/// <ln chi> and annealed ln<chi> averages. Members are held in id order.
struct EnsembleTable {
    std::vector<std::string> member_ids;
    AnalysisGrid common_grid;
    std::vector<std::vector<std::optional<double>>> ln_chi_per_member;
    PartitionTable quenched;
    PartitionTable annealed;
    std::vector<std::size_t> member_count_per_cell;  // row-major (q, s)
    double quorum = 0.8;
};

namespace detail {

inline std::vector<std::size_t> positions_of(const std::vector<double>& common, const std::vector<double>& values) {
    std::vector<std::size_t> pos;
    for (double q : common)
        for (std::size_t i = 0; i < values.size(); ++i)
            if (std::abs(values[i] - q) < 1e-9) {
                pos.push_back(i);
                break;
            }
    return pos;
}

}  // namespace detail

/// Restricts every member to the q values and box sizes they all share,
/// then averages each (q, s) cell over the members where it is defined.
/// Cells defined for fewer than quorum x members stay undefined.
inline EnsembleTable align_members(std::vector<EnsembleMember> members, double quorum = 0.8) {
    if (members.empty()) throw IncompatibleMembersError("ensemble has no members");
    if (!(quorum > 0.0 && quorum <= 1.0)) throw UsageError("quorum must lie in (0, 1]");
    std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t m = 1; m < members.size(); ++m)
        if (members[m].id == members[m - 1].id) throw IncompatibleMembersError("duplicate member id " + members[m].id);

    EnsembleTable et;
    et.quorum = quorum;
    et.common_grid = members.front().table.grid;
    for (const auto& m : members) {
        std::vector<double> q;
        for (double x : et.common_grid.q_values)
            if (m.table.grid.q_index(x) != AnalysisGrid::npos) q.push_back(x);
        et.common_grid.q_values = std::move(q);
        std::vector<std::size_t> s;
        std::set_intersection(et.common_grid.box_sizes.begin(), et.common_grid.box_sizes.end(),
                              m.table.grid.box_sizes.begin(), m.table.grid.box_sizes.end(), std::back_inserter(s));
        et.common_grid.box_sizes = std::move(s);
        et.common_grid.analyzed_length = std::min(et.common_grid.analyzed_length, m.table.grid.analyzed_length);
    }
    if (et.common_grid.q_values.empty() || et.common_grid.box_sizes.empty())
        throw IncompatibleMembersError("members share no (q, s) cells");

    const std::size_t Q = et.common_grid.q_count(), S = et.common_grid.s_count();
    for (const auto& m : members) {
        et.member_ids.push_back(m.id);
        const auto qpos = detail::positions_of(et.common_grid.q_values, m.table.grid.q_values);
        std::vector<std::size_t> spos;
        for (std::size_t s : et.common_grid.box_sizes)
            spos.push_back(static_cast<std::size_t>(
                std::lower_bound(m.table.grid.box_sizes.begin(), m.table.grid.box_sizes.end(), s) -
                m.table.grid.box_sizes.begin()));
        std::vector<std::optional<double>> cells(Q * S);
        for (std::size_t qi = 0; qi < Q; ++qi)
            for (std::size_t si = 0; si < S; ++si) cells[qi * S + si] = m.table.at(qpos[qi], spos[si]);
        et.ln_chi_per_member.push_back(std::move(cells));
    }

    auto blank = [&] {
        PartitionTable t;
        t.grid = et.common_grid;
        t.ln_chi.assign(Q * S, std::nullopt);
        t.zero_box_count.assign(S, 0);
        t.ranges.assign(Q, std::nullopt);
        return t;
    };
    et.quenched = blank();
    et.annealed = blank();
    et.member_count_per_cell.assign(Q * S, 0);

    const double needed = quorum * static_cast<double>(members.size()) - 1e-9;
    for (std::size_t c = 0; c < Q * S; ++c) {
        std::size_t k = 0;
        double sum = 0.0;
        double peak = -std::numeric_limits<double>::infinity();
        for (const auto& cells : et.ln_chi_per_member) {
            if (!cells[c]) continue;
            ++k;
            sum += *cells[c];
            peak = std::max(peak, *cells[c]);
        }
        et.member_count_per_cell[c] = k;
        if (k == 0 || static_cast<double>(k) < needed) continue;
        double lse = 0.0;
        for (const auto& cells : et.ln_chi_per_member)
            if (cells[c]) lse += std::exp(*cells[c] - peak);
        const double kd = static_cast<double>(k);
        et.quenched.ln_chi[c] = sum / kd;
        et.annealed.ln_chi[c] = peak + std::log(lse / kd);
    }
    return et;
}

/// tau_Q from <ln chi_q(s)> = tau_Q(q) ln s + c, with its Legendre spectrum.
inline ScalingResult quenched_tau(EnsembleTable& et, const RangeConfig& cfg = {}) {
    return fit_scaling(et.quenched, cfg);
}

/// tau_A from ln<chi_q(s)> = tau_A(q) ln s + c, with its Legendre spectrum.
inline ScalingResult annealed_tau(EnsembleTable& et, const RangeConfig& cfg = {}) {
    return fit_scaling(et.annealed, cfg);
}

/// Truncates all series to one common analyzed length and computes each
/// member's partition table on the shared grid.
inline std::vector<EnsembleMember> analyze_members(const std::vector<SeriesInput>& series,
                                                   const AnalysisConfig& cfg) {
    if (series.empty()) throw IncompatibleMembersError("ensemble has no members");
    std::size_t shortest = series.front().values.size();
    for (const auto& s : series) shortest = std::min(shortest, s.values.size());
    const AnalysisGrid grid = grid_for(shortest, cfg);

    std::vector<EnsembleMember> out(series.size());
    parallel_for(series.size(), cfg.jobs, [&](std::size_t i) {
        out[i].id = series[i].id;
        out[i].table = compute_partition_table(series[i].values, grid, 1);
    });
    return out;
}

struct EnsembleResult {
    EnsembleTable table;
    ScalingResult quenched;
    ScalingResult annealed;
};

inline EnsembleResult run_ensemble(std::vector<EnsembleMember> members, double quorum, const RangeConfig& cfg = {}) {
    EnsembleResult r;
    r.table = align_members(std::move(members), quorum);
    r.quenched = quenched_tau(r.table, cfg);
    r.annealed = annealed_tau(r.table, cfg);
    return r;
}

}  // namespace mfpart
