#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfpart/analysis.hpp"
#include "mfpart/ensemble.hpp"
#include "mfpart/ingest.hpp"
#include "mfpart/errors.hpp"
#include "mfpart/pmodel.hpp"
#include "mfpart/stats.hpp"

namespace mfpart {

using json = nlohmann::json;

inline constexpr const char* kToolkitVersion = "1.0.0";

namespace detail {

inline json optional_array(const std::vector<std::optional<double>>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(x ? json(*x) : json(nullptr));
    return a;
}

inline std::vector<std::optional<double>> read_optional_array(const json& a) {
    std::vector<std::optional<double>> v;
    for (const auto& x : a) v.push_back(x.is_null() ? std::nullopt : std::optional<double>(x.get<double>()));
    return v;
}

inline json table_matrix(const PartitionTable& t) {
    json rows = json::array();
    for (std::size_t qi = 0; qi < t.grid.q_count(); ++qi) {
        json row = json::array();
        for (std::size_t si = 0; si < t.grid.s_count(); ++si) {
            const auto& c = t.at(qi, si);
            row.push_back(c ? json(*c) : json(nullptr));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json grid_json(const AnalysisGrid& g) {
    return {{"q", g.q_values}, {"s", g.box_sizes}, {"analyzed_length", g.analyzed_length}};
}

inline AnalysisGrid read_grid(const json& j) {
    AnalysisGrid g;
    g.q_values = j.at("q").get<std::vector<double>>();
    g.box_sizes = j.at("s").get<std::vector<std::size_t>>();
    g.analyzed_length = j.at("analyzed_length").get<std::size_t>();
    return g;
}

inline json ranges_json(const PartitionTable& t) {
    json a = json::array();
    for (std::size_t qi = 0; qi < t.grid.q_count(); ++qi) {
        const auto& r = t.ranges[qi];
        if (!r) {
            a.push_back(nullptr);
            continue;
        }
        a.push_back({{"q", t.grid.q_values[qi]},
                     {"s_lo", t.grid.box_sizes[r->first]},
                     {"s_hi", t.grid.box_sizes[r->last]},
                     {"s_c", r->jump_cut ? json(*r->jump_cut) : json(nullptr)},
                     {"n_scales", r->count()}});
    }
    return a;
}

}  // namespace detail

inline json spectrum_json(const ScalingResult& r) {
    return {{"tau", detail::optional_array(r.tau)},
            {"alpha", detail::optional_array(r.alpha)},
            {"f_alpha", detail::optional_array(r.f_alpha)},
            {"alpha_min", r.alpha_min},
            {"alpha_max", r.alpha_max},
            {"delta_alpha", r.delta_alpha},
            {"F", r.F}};
}

/// The analysis document: grid, ln_chi (rows by q, null where undefined),
/// tau and spectrum, fit diagnostics, and the caller's config echo.
inline json analysis_to_json(const Analysis& a, const json& config) {
    json j = spectrum_json(a.scaling);
    j["kind"] = "analysis";
    j["version"] = kToolkitVersion;
    j["config"] = config;
    j["instrument_id"] = a.instrument_id;
    j["grid"] = detail::grid_json(a.table.grid);
    j["ln_chi"] = detail::table_matrix(a.table);
    j["diagnostics"] = {{"tau_stderr", detail::optional_array(a.scaling.fit_stderr)},
                        {"tau_r2", detail::optional_array(a.scaling.fit_r2)},
                        {"scaling_range", detail::ranges_json(a.table)},
                        {"zero_box_count", a.table.zero_box_count},
                        {"non_concave", a.scaling.non_concave},
                        {"warnings", a.scaling.warnings}};
    return j;
}

/// Rebuilds the table and tau/spectrum from an analysis document. Scaling
/// ranges are not restored; refit if they are needed.
inline Analysis analysis_from_json(const json& j) {
    if (j.value("kind", "") != "analysis") throw FormatError("not an analysis document");
    Analysis a;
    a.instrument_id = j.value("instrument_id", "");
    a.table.grid = detail::read_grid(j.at("grid"));
    const std::size_t Q = a.table.grid.q_count(), S = a.table.grid.s_count();
    const auto& rows = j.at("ln_chi");
    if (rows.size() != Q) throw FormatError("ln_chi row count does not match q grid");
    for (const auto& row : rows) {
        if (row.size() != S) throw FormatError("ln_chi column count does not match box sizes");
        for (const auto& c : row)
            a.table.ln_chi.push_back(c.is_null() ? std::nullopt : std::optional<double>(c.get<double>()));
    }
    a.table.ranges.assign(Q, std::nullopt);
    const auto& diag = j.at("diagnostics");
    a.table.zero_box_count = diag.at("zero_box_count").get<std::vector<std::size_t>>();
    a.scaling.tau = detail::read_optional_array(j.at("tau"));
    a.scaling.alpha = detail::read_optional_array(j.at("alpha"));
    a.scaling.f_alpha = detail::read_optional_array(j.at("f_alpha"));
    a.scaling.fit_stderr = detail::read_optional_array(diag.at("tau_stderr"));
    a.scaling.fit_r2 = detail::read_optional_array(diag.at("tau_r2"));
    a.scaling.alpha_min = j.at("alpha_min").get<double>();
    a.scaling.alpha_max = j.at("alpha_max").get<double>();
    a.scaling.delta_alpha = j.at("delta_alpha").get<double>();
    a.scaling.F = j.at("F").get<double>();
    a.scaling.non_concave = diag.value("non_concave", false);
    a.scaling.warnings = diag.value("warnings", std::vector<std::string>{});
    return a;
}

inline json bootstrap_to_json(const BootstrapReport& r, const json& config) {
    return {{"kind", "bootstrap"},
            {"version", kToolkitVersion},
            {"config", config},
            {"n", r.n},
            {"n_valid", r.n_valid},
            {"master_seed", r.master_seed},
            {"level", r.level},
            {"delta_alpha_real", r.delta_alpha_real},
            {"F_real", r.F_real},
            {"delta_alpha_rnd", detail::optional_array(r.delta_alpha_rnd)},
            {"F_rnd", detail::optional_array(r.F_rnd)},
            {"failed_replicates", r.failed_replicates},
            {"p1", r.p1},
            {"p2", r.p2},
            {"significant_1", r.significant_1},
            {"significant_2", r.significant_2},
            {"warnings", r.warnings}};
}

inline json pmodel_fit_json(const PModelFit& f) {
    return {{"p", f.p},
            {"rss", f.rss},
            {"q", f.q},
            {"per_q_residuals", f.per_q_residuals},
            {"poor_fit", f.poor_fit},
            {"warnings", f.warnings}};
}

inline json histogram_json(const PHistogram& h) {
    return {{"bin_edges", h.bin_edges},
            {"g", h.frequencies},
            {"mean_p", h.mean_p},
            {"std_p", h.std_p},
            {"count", h.count}};
}

inline json ensemble_to_json(const EnsembleResult& r, const json& config) {
    const auto& t = r.table;
    json counts = json::array();
    for (std::size_t qi = 0; qi < t.common_grid.q_count(); ++qi) {
        json row = json::array();
        for (std::size_t si = 0; si < t.common_grid.s_count(); ++si)
            row.push_back(t.member_count_per_cell[qi * t.common_grid.s_count() + si]);
        counts.push_back(std::move(row));
    }
    return {{"kind", "ensemble"},
            {"version", kToolkitVersion},
            {"config", config},
            {"member_ids", t.member_ids},
            {"quorum", t.quorum},
            {"grid", detail::grid_json(t.common_grid)},
            {"member_count", counts},
            {"quenched",
             {{"ln_chi", detail::table_matrix(t.quenched)},
              {"scaling_range", detail::ranges_json(t.quenched)},
              {"spectrum", spectrum_json(r.quenched)},
              {"warnings", r.quenched.warnings}}},
            {"annealed",
             {{"ln_chi", detail::table_matrix(t.annealed)},
              {"scaling_range", detail::ranges_json(t.annealed)},
              {"spectrum", spectrum_json(r.annealed)},
              {"warnings", r.annealed.warnings}}}};
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

/// `{"morning": ["09:30", "11:30"], "afternoon": ["13:00", "15:00"],
///   "trading_days": ["2005-01-04", ...]}`; every key is optional.

inline SessionCalendar calendar_from_json(const json& j) {
    SessionCalendar cal = cn_a_share_calendar();
    auto window = [](const json& w) {
        if (!w.is_array() || w.size() != 2) throw FormatError("calendar window must be [start, end]");
        const auto a = parse_time_of_day(w[0].get<std::string>());
        const auto b = parse_time_of_day(w[1].get<std::string>());
        if (!a || !b || *a % 60 != 0 || *b % 60 != 0) throw FormatError("calendar window times must be HH:MM");
        return SessionWindow{*a / 60, *b / 60};
    };
    try {
        if (j.contains("morning")) cal.morning = window(j["morning"]);
        if (j.contains("afternoon")) cal.afternoon = window(j["afternoon"]);
        if (j.contains("trading_days"))
            for (const auto& d : j["trading_days"]) {
                const auto date = parse_date(d.get<std::string>());
                if (!date) throw FormatError("bad trading day " + d.dump());
                cal.trading_days.insert(*date);
            }
    } catch (const json::exception& e) {
        throw FormatError(std::string("calendar: ") + e.what());
    }
    cal.validate();
    return cal;
}

/// `builtin:cn-a-share` or a path to a calendar JSON file.
inline SessionCalendar load_calendar(const std::string& spec) {
    if (spec == "builtin:cn-a-share") return cn_a_share_calendar();
    if (spec.starts_with("builtin:")) throw UsageError("unknown builtin calendar " + spec);
    return calendar_from_json(read_json_file(spec));
}

/// Two-space indented, trailing newline; stable byte output for a given value.
inline void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace mfpart
