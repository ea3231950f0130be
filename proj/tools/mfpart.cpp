// mfpart: command-line front end for partition-function multifractal analysis.
//
// Subcommands: ingest, analyze, bootstrap, pmodel, ensemble, synth, export, batch.
// Exit codes: 0 success, 1 failure or partial batch failure, 2 usage/config error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mfpart/mfpart.hpp"

namespace fs = std::filesystem;
using namespace mfpart;

namespace {

struct GridOptions {
    double qmin = -3.0;
    double qmax = 5.0;
    double qstep = 0.2;
    std::size_t min_scales = 5;
    double jump_threshold = 5.0;
    int jobs = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--qmin", qmin, "smallest moment order")->capture_default_str();
        cmd->add_option("--qmax", qmax, "largest moment order")->capture_default_str();
        cmd->add_option("--qstep", qstep, "moment order step")->capture_default_str();
        cmd->add_option("--min-scales", min_scales, "minimum box sizes in a fit")->capture_default_str();
        cmd->add_option("--jump-threshold", jump_threshold, "jump factor over the upper-scale median increment")
            ->capture_default_str();
        cmd->add_option("--jobs", jobs, "worker threads (default: MFPART_JOBS or 1)");
    }

    AnalysisConfig config() const {
        AnalysisConfig c;
        c.qmin = qmin;
        c.qmax = qmax;
        c.qstep = qstep;
        c.range.min_scales = min_scales;
        c.range.jump_threshold = jump_threshold;
        c.jobs = resolve_jobs(jobs);
        return c;
    }

    // --jobs is left out of the echo: outputs must not depend on it.
    json echo() const {
        return {{"qmin", qmin}, {"qmax", qmax}, {"qstep", qstep}, {"min_scales", min_scales},
                {"jump_threshold", jump_threshold}, {"box_min_boxes", GridConfig{}.min_boxes},
                {"box_scales_per_decade", GridConfig{}.scales_per_decade}};
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << text;
}

int run_ingest(const std::string& ticks, const std::string& calendar, const std::string& out) {
    const SessionCalendar cal = load_calendar(calendar);
    const ParsedTicks parsed = read_tick_file(ticks);
    const VolatilitySeries vol = build_volatility(parsed.series, cal);
    write_volatility_file(out, vol);
    std::cerr << "ingest: " << parsed.series.ticks.size() << " ticks, " << parsed.dropped << " dropped, "
              << vol.day_boundaries.size() << " days, " << vol.partial_days.size() << " partial, " << vol.values.size()
              << " bins -> " << out << '\n';
    return 0;
}

int run_analyze(const std::string& vol_path, const GridOptions& g, const std::string& out) {
    const VolatilitySeries vol = read_volatility_file(vol_path);
    Analysis a = analyze(vol.values, g.config());
    a.instrument_id = vol.instrument_id;
    json echo = g.echo();
    echo["vol"] = fs::path(vol_path).filename().string();
    write_json_file(out, analysis_to_json(a, echo));
    std::cerr << "analyze: T=" << a.table.grid.analyzed_length << " scales=" << a.table.grid.s_count()
              << " delta_alpha=" << a.scaling.delta_alpha << " F=" << a.scaling.F << '\n';
    return 0;
}

int run_bootstrap(const std::string& vol_path, const GridOptions& g, std::size_t n, double level, std::uint64_t seed,
                  const std::string& out) {
    const VolatilitySeries vol = read_volatility_file(vol_path);
    const AnalysisConfig acfg = g.config();
    BootstrapConfig b;
    b.n = n;
    b.level = level;
    b.master_seed = seed;
    b.jobs = acfg.jobs;
    const BootstrapReport rep = bootstrap_test(vol.values, acfg, b);
    json echo = g.echo();
    echo["vol"] = fs::path(vol_path).filename().string();
    echo["n"] = n;
    echo["level"] = level;
    echo["seed"] = seed;
    write_json_file(out, bootstrap_to_json(rep, echo));
    std::cerr << "bootstrap: p1=" << rep.p1 << " p2=" << rep.p2 << " valid=" << rep.n_valid << '/' << rep.n << '\n';
    return 0;
}

int run_pmodel(const std::string& tau_path, double bin_width, const std::string& out) {
    std::vector<fs::path> docs;
    const bool dir_mode = fs::is_directory(tau_path);
    if (dir_mode) {
        for (const auto& e : fs::directory_iterator(tau_path))
            if (e.is_regular_file() && e.path().extension() == ".json") docs.push_back(e.path());
        std::sort(docs.begin(), docs.end());
    } else {
        docs.push_back(tau_path);
    }

    json fits = json::array();
    json failures = json::array();
    std::vector<double> ps;
    for (const auto& path : docs) {
        try {
            const json doc = read_json_file(path);
            if (doc.value("kind", "") != "analysis") continue;
            const Analysis a = analysis_from_json(doc);
            const PModelFit fit = fit_pmodel(a.table.grid.q_values, a.scaling.tau);
            json entry = pmodel_fit_json(fit);
            entry["instrument_id"] = a.instrument_id;
            entry["source"] = path.filename().string();
            fits.push_back(std::move(entry));
            ps.push_back(fit.p);
        } catch (const Error& e) {
            if (!dir_mode) throw;
            failures.push_back({{"file", path.filename().string()}, {"error", e.what()}});
        }
    }
    if (ps.empty()) throw EmptyInputError("no analysis documents could be fitted");

    json doc = {{"kind", "pmodel"},
                {"version", kToolkitVersion},
                {"config", {{"tau", fs::path(tau_path).filename().string()}, {"bin_width", bin_width}}},
                {"fits", fits},
                {"failures", failures}};
    if (dir_mode) doc["histogram"] = histogram_json(build_histogram(ps, bin_width));
    write_json_file(out, doc);
    std::cerr << "pmodel: " << ps.size() << " fits, " << failures.size() << " failures\n";
    return failures.empty() ? 0 : 1;
}

int run_ensemble(const std::string& dir, const GridOptions& g, double quorum, const std::string& out) {
    if (!fs::is_directory(dir)) throw UsageError(dir + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && !e.path().filename().string().starts_with(".")) files.push_back(e.path());
    std::sort(files.begin(), files.end());

    const AnalysisConfig acfg = g.config();
    std::vector<EnsembleMember> members;
    std::vector<SeriesInput> series;
    for (const auto& f : files) {
        if (f.extension() == ".json") {
            const json doc = read_json_file(f);
            if (doc.value("kind", "") != "analysis") continue;
            Analysis a = analysis_from_json(doc);
            members.push_back({a.instrument_id.empty() ? instrument_id_from_path(f) : a.instrument_id, a.table});
        } else {
            VolatilitySeries v = read_volatility_file(f);
            series.push_back({v.instrument_id, std::move(v.values)});
        }
    }
    if (!members.empty() && !series.empty())
        throw UsageError("ensemble directory mixes analysis documents and volatility series");
    if (!series.empty()) members = analyze_members(series, acfg);

    const EnsembleResult r = run_ensemble(std::move(members), quorum, acfg.range);
    json echo = g.echo();
    echo["analyses"] = fs::path(dir).filename().string();
    echo["quorum"] = quorum;
    write_json_file(out, ensemble_to_json(r, echo));
    std::cerr << "ensemble: " << r.table.member_ids.size() << " members, delta_alpha_Q=" << r.quenched.delta_alpha
              << " delta_alpha_A=" << r.annealed.delta_alpha << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partition-function multifractal analysis of intraday volatility"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolkitVersion);

    std::string ticks, calendar = "builtin:cn-a-share", out, vol, tau, analyses, in, kind, mode = "det", dir;
    GridOptions grid;
    std::size_t n = 1000, length = 1 << 14, bootstrap_n = 0;
    double level = 0.01, quorum = 0.8, p = 0.4, bin_width = 0.01, mu_log = 0.0, sigma_log = 1.0;
    std::uint64_t seed = 0;
    int depth = 14;

    auto* ingest = app.add_subcommand("ingest", "tick CSV -> one-minute volatility series");
    ingest->add_option("--ticks", ticks, "tick CSV (instrument,timestamp,price), optionally gzipped")->required();
    ingest->add_option("--calendar", calendar, "calendar JSON path or builtin:cn-a-share")->capture_default_str();
    ingest->add_option("--out", out, "output path (.bin for binary columns, CSV otherwise)")->required();

    auto* analyze_cmd = app.add_subcommand("analyze", "partition function, tau(q) and f(alpha)");
    analyze_cmd->add_option("--vol", vol, "volatility series (.bin or CSV)")->required();
    analyze_cmd->add_option("--out", out, "analysis JSON")->required();
    grid.attach(analyze_cmd);

    auto* boot = app.add_subcommand("bootstrap", "shuffle test of multifractality");
    boot->add_option("--vol", vol, "volatility series (.bin or CSV)")->required();
    boot->add_option("--n", n, "number of shuffled replicates")->capture_default_str();
    boot->add_option("--level", level, "significance level")->capture_default_str();
    boot->add_option("--seed", seed, "master seed")->capture_default_str();
    boot->add_option("--out", out, "report JSON")->required();
    grid.attach(boot);

    auto* pmodel = app.add_subcommand("pmodel", "fit the p-model to tau(q)");
    pmodel->add_option("--tau", tau, "analysis JSON or a directory of them")->required();
    pmodel->add_option("--bin-width", bin_width, "g(p) histogram bin width")->capture_default_str();
    pmodel->add_option("--out", out, "fit JSON")->required();

    auto* ens = app.add_subcommand("ensemble", "quenched and annealed ensemble averages");
    ens->add_option("--analyses", analyses, "directory of analysis JSONs or volatility series")->required();
    ens->add_option("--quorum", quorum, "fraction of members a cell needs")->capture_default_str();
    ens->add_option("--out", out, "ensemble JSON")->required();
    grid.attach(ens);

    auto* synth = app.add_subcommand("synth", "synthetic series");
    synth->require_subcommand(1);
    auto* cascade = synth->add_subcommand("cascade", "binomial p-model cascade");
    cascade->add_option("--p", p, "weight of one half")->capture_default_str();
    cascade->add_option("--depth", depth, "levels; length is 2^depth")->capture_default_str();
    cascade->add_option("--mode", mode, "det or rand")->capture_default_str();
    cascade->add_option("--seed", seed, "seed for rand mode")->capture_default_str();
    cascade->add_option("--out", out, "output path (.bin or CSV)")->required();
    auto* lognormal = synth->add_subcommand("lognormal", "i.i.d. log-normal values");
    lognormal->add_option("--length", length, "number of values")->capture_default_str();
    lognormal->add_option("--mu", mu_log, "mean of ln v")->capture_default_str();
    lognormal->add_option("--sigma", sigma_log, "std of ln v")->capture_default_str();
    lognormal->add_option("--seed", seed, "seed")->capture_default_str();
    lognormal->add_option("--out", out, "output path (.bin or CSV)")->required();

    auto* exp = app.add_subcommand("export", "plot-ready CSV from a result document");
    exp->add_option("--in", in, "analysis, ensemble or pmodel JSON")->required();
    exp->add_option("--kind", kind, "chi_vs_s | tau_vs_q | f_vs_alpha | gp_hist")->required();
    exp->add_option("--out", out, "CSV path")->required();

    auto* batch = app.add_subcommand("batch", "analyze every instrument file in a directory");
    batch->add_option("--dir", dir, "input directory (tick or volatility files)")->required();
    batch->add_option("--out", out, "output directory")->required();
    batch->add_option("--calendar", calendar, "calendar for tick inputs")->capture_default_str();
    batch->add_option("--bootstrap-n", bootstrap_n, "shuffled replicates per instrument (0 = skip)")
        ->capture_default_str();
    batch->add_option("--level", level, "significance level")->capture_default_str();
    batch->add_option("--seed", seed, "master seed")->capture_default_str();
    grid.attach(batch);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*ingest) return run_ingest(ticks, calendar, out);
        if (*analyze_cmd) return run_analyze(vol, grid, out);
        if (*boot) return run_bootstrap(vol, grid, n, level, seed, out);
        if (*pmodel) return run_pmodel(tau, bin_width, out);
        if (*ens) return run_ensemble(analyses, grid, quorum, out);
        if (*cascade) {
            VolatilitySeries s;
            s.instrument_id = "cascade";
            s.values = generate_cascade({p, depth, parse_cascade_mode(mode), seed});
            write_volatility_file(out, s);
            return 0;
        }
        if (*lognormal) {
            VolatilitySeries s;
            s.instrument_id = "lognormal";
            s.values = generate_iid_lognormal(length, mu_log, sigma_log, seed);
            write_volatility_file(out, s);
            return 0;
        }
        if (*exp) {
            const PlotKind k = parse_plot_kind(kind);
            write_text(out, export_plotdata(read_json_file(in), k));
            return 0;
        }
        if (*batch) {
            BatchConfig cfg;
            cfg.analysis = grid.config();
            cfg.calendar = load_calendar(calendar);
            cfg.bootstrap_n = bootstrap_n;
            cfg.level = level;
            cfg.seed = seed;
            cfg.jobs = cfg.analysis.jobs;
            cfg.config_echo = grid.echo();
            cfg.config_echo["calendar"] = calendar;
            cfg.config_echo["bootstrap_n"] = bootstrap_n;
            cfg.config_echo["level"] = level;
            cfg.config_echo["seed"] = seed;
            const BatchOutcome r = run_batch(dir, out, cfg);
            std::cerr << "batch: " << r.rows.size() << " analyzed, " << r.failures.size() << " failed of " << r.inputs
                      << '\n';
            for (const auto& f : r.failures) std::cerr << "  " << f.file << ": " << f.error << '\n';
            return r.failures.empty() ? 0 : 1;
        }
    } catch (const UsageError& e) {
        std::cerr << "mfpart: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "mfpart: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
