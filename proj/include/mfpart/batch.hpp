#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "mfpart/analysis.hpp"
#include "mfpart/errors.hpp"
#include "mfpart/ingest.hpp"
#include "mfpart/json_io.hpp"
#include "mfpart/parallel.hpp"
#include "mfpart/pmodel.hpp"
#include "mfpart/stats.hpp"
#include "mfpart/volatility_io.hpp"

namespace mfpart {

/// Loads a volatility series from any supported input: MFVOL001 binary,
/// volatility CSV, or tick CSV (optionally gzipped), which is ingested with
/// `calendar`.
inline VolatilitySeries load_series(const std::filesystem::path& path, const SessionCalendar& calendar) {
    const std::string bytes = read_file_bytes(path);
    const std::string id = instrument_id_from_path(path);
    if (std::string_view(bytes).substr(0, 8) == kVolatilityMagic) return parse_volatility_binary(bytes, id);
    const bool gz = bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1F &&
                    static_cast<unsigned char>(bytes[1]) == 0x8B;
    if (!gz && std::string_view(bytes).starts_with("bin_start_timestamp,v")) return parse_volatility_csv(bytes, id);
    const ParsedTicks parsed = read_tick_file(path);
    VolatilitySeries vol = build_volatility(parsed.series, calendar);
    if (vol.instrument_id.empty()) vol.instrument_id = id;
    return vol;
}

struct BatchConfig {
    AnalysisConfig analysis;
    SessionCalendar calendar = cn_a_share_calendar();
    std::size_t bootstrap_n = 0;  // 0 skips the shuffle test
    double level = 0.01;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    json config_echo = json::object();
};

struct BatchRow {
    std::string instrument;
    double delta_alpha = 0.0;
    double F = 0.0;
    double p = 0.0;
    std::optional<double> p1;
    std::optional<double> p2;
    std::vector<std::string> flags;
};

struct BatchFailure {
    std::string file;
    std::string error;
};

struct BatchOutcome {
    std::vector<BatchRow> rows;
    std::vector<BatchFailure> failures;
    std::size_t inputs = 0;
};

/// Analyzes every regular file in `input_dir` (sorted by name) and writes
/// `<name>.analysis.json` (plus `<name>.bootstrap.json` when bootstrapping),
/// `summary.csv` and `failures.json` into `out_dir`. A file that cannot be
/// processed becomes a failure entry; the batch keeps going.
inline BatchOutcome run_batch(const std::filesystem::path& input_dir, const std::filesystem::path& out_dir,
                              const BatchConfig& cfg) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(input_dir)) throw UsageError(input_dir.string() + " is not a directory");
    fs::create_directories(out_dir);

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(input_dir))
        if (e.is_regular_file() && !e.path().filename().string().starts_with(".")) files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::vector<std::optional<BatchRow>> rows(files.size());
    std::vector<std::string> errors(files.size());

    AnalysisConfig acfg = cfg.analysis;
    acfg.jobs = 1;

    parallel_for(files.size(), cfg.jobs, [&](std::size_t i) {
        const std::string name = instrument_id_from_path(files[i]);
        try {
            const VolatilitySeries vol = load_series(files[i], cfg.calendar);
            Analysis a = analyze(vol.values, acfg);
            a.instrument_id = vol.instrument_id.empty() ? name : vol.instrument_id;
            json echo = cfg.config_echo;
            echo["input"] = files[i].filename().string();
            write_json_file(out_dir / (name + ".analysis.json"), analysis_to_json(a, echo));

            BatchRow row;
            row.instrument = name;
            row.delta_alpha = a.scaling.delta_alpha;
            row.F = a.scaling.F;
            const PModelFit fit = fit_pmodel(a.table.grid.q_values, a.scaling.tau);
            row.p = fit.p;
            if (fit.poor_fit) row.flags.push_back("poor_pmodel_fit");
            if (a.scaling.non_concave) row.flags.push_back("non_concave");
            if (!vol.partial_days.empty()) row.flags.push_back("partial_days=" + std::to_string(vol.partial_days.size()));
            if (cfg.bootstrap_n > 0) {
                BootstrapConfig bcfg;
                bcfg.n = cfg.bootstrap_n;
                bcfg.level = cfg.level;
                bcfg.master_seed = cfg.seed;
                const BootstrapReport rep = bootstrap_test(vol.values, acfg, bcfg);
                write_json_file(out_dir / (name + ".bootstrap.json"), bootstrap_to_json(rep, echo));
                row.p1 = rep.p1;
                row.p2 = rep.p2;
                if (rep.significant_1) row.flags.push_back("significant_1");
                if (rep.significant_2) row.flags.push_back("significant_2");
            }
            rows[i] = std::move(row);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    BatchOutcome out;
    out.inputs = files.size();
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (rows[i])
            out.rows.push_back(std::move(*rows[i]));
        else
            out.failures.push_back({files[i].filename().string(), errors[i]});
    }

    std::ofstream summary(out_dir / "summary.csv", std::ios::binary);
    summary << "instrument,delta_alpha,F,p,p1,p2,flags\n";
    for (const auto& r : out.rows) {
        std::string flags;
        for (const auto& f : r.flags) flags += (flags.empty() ? "" : ";") + f;
        summary << r.instrument << ',' << detail::format_double(r.delta_alpha) << ',' << detail::format_double(r.F)
                << ',' << detail::format_double(r.p) << ',' << (r.p1 ? detail::format_double(*r.p1) : "") << ','
                << (r.p2 ? detail::format_double(*r.p2) : "") << ',' << flags << '\n';
    }
    json failures = json::array();
    for (const auto& f : out.failures) failures.push_back({{"file", f.file}, {"error", f.error}});
    write_json_file(out_dir / "failures.json", failures);
    return out;
}

}  // namespace mfpart
