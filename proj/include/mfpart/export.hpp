#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>

#include "mfpart/errors.hpp"
#include "mfpart/json_io.hpp"
#include "mfpart/volatility_io.hpp"

namespace mfpart {

enum class PlotKind { chi_vs_s, tau_vs_q, f_vs_alpha, gp_hist };

inline PlotKind parse_plot_kind(std::string_view s) {
    if (s == "chi_vs_s") return PlotKind::chi_vs_s;
    if (s == "tau_vs_q") return PlotKind::tau_vs_q;
    if (s == "f_vs_alpha") return PlotKind::f_vs_alpha;
    if (s == "gp_hist") return PlotKind::gp_hist;
    throw UsageError("unknown plot kind '" + std::string(s) + "' (chi_vs_s, tau_vs_q, f_vs_alpha, gp_hist)");
}

namespace detail {

inline std::string cell(const json& v) { return v.is_null() ? std::string() : format_double(v.get<double>()); }

inline void chi_rows(std::ostringstream& os, const json& grid, const json& ln_chi) {
    const auto& q = grid.at("q");
    const auto& s = grid.at("s");
    for (std::size_t qi = 0; qi < q.size(); ++qi) {
        const double qv = q[qi].get<double>();
        if (std::abs(qv - 1.0) < 1e-9) continue;
        for (std::size_t si = 0; si < s.size(); ++si) {
            const auto& c = ln_chi[qi][si];
            if (c.is_null()) continue;
            os << format_double(qv) << ',' << s[si].get<std::size_t>() << ','
               << format_double(std::exp(c.get<double>() / (qv - 1.0))) << '\n';
        }
    }
}

inline void spectrum_rows(std::ostringstream& os, const json& spectrum, std::string_view prefix) {
    const auto& a = spectrum.at("alpha");
    const auto& f = spectrum.at("f_alpha");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].is_null() || f[i].is_null()) continue;
        os << prefix << format_double(a[i].get<double>()) << ',' << format_double(f[i].get<double>()) << '\n';
    }
}

}  // namespace detail

/// Plot-ready CSV from an analysis, ensemble or p-model document.
/// chi_vs_s emits chi_q(s)^(1/(q-1)) for q != 1.
inline std::string export_plotdata(const json& doc, PlotKind kind) {
    const std::string doc_kind = doc.value("kind", "");
    std::ostringstream os;
    if (doc_kind == "analysis") {
        switch (kind) {
            case PlotKind::chi_vs_s:
                os << "q,s,chi_pow\n";
                detail::chi_rows(os, doc.at("grid"), doc.at("ln_chi"));
                break;
            case PlotKind::tau_vs_q: {
                os << "q,tau\n";
                const auto& q = doc.at("grid").at("q");
                const auto& tau = doc.at("tau");
                for (std::size_t i = 0; i < q.size(); ++i)
                    if (!tau[i].is_null())
                        os << detail::format_double(q[i].get<double>()) << ',' << detail::format_double(tau[i].get<double>()) << '\n';
                break;
            }
            case PlotKind::f_vs_alpha:
                os << "alpha,f\n";
                detail::spectrum_rows(os, doc, "");
                break;
            case PlotKind::gp_hist:
                throw UsageError("gp_hist needs a p-model document with a histogram");
        }
        return os.str();
    }
    if (doc_kind == "ensemble") {
        switch (kind) {
            case PlotKind::chi_vs_s:
                os << "average,q,s,chi_pow\n";
                for (const char* avg : {"quenched", "annealed"}) {
                    std::ostringstream part;
                    detail::chi_rows(part, doc.at("grid"), doc.at(avg).at("ln_chi"));
                    std::istringstream lines(part.str());
                    for (std::string line; std::getline(lines, line);) os << avg << ',' << line << '\n';
                }
                break;
            case PlotKind::tau_vs_q: {
                os << "q,tau_quenched,tau_annealed\n";
                const auto& q = doc.at("grid").at("q");
                const auto& tq = doc.at("quenched").at("spectrum").at("tau");
                const auto& ta = doc.at("annealed").at("spectrum").at("tau");
                for (std::size_t i = 0; i < q.size(); ++i)
                    os << detail::format_double(q[i].get<double>()) << ',' << detail::cell(tq[i]) << ',' << detail::cell(ta[i])
                       << '\n';
                break;
            }
            case PlotKind::f_vs_alpha:
                os << "average,alpha,f\n";
                detail::spectrum_rows(os, doc.at("quenched").at("spectrum"), "quenched,");
                detail::spectrum_rows(os, doc.at("annealed").at("spectrum"), "annealed,");
                break;
            case PlotKind::gp_hist:
                throw UsageError("gp_hist needs a p-model document with a histogram");
        }
        return os.str();
    }
    if (doc_kind == "pmodel") {
        if (kind != PlotKind::gp_hist) throw UsageError("p-model documents only export gp_hist");
        if (!doc.contains("histogram")) throw UsageError("p-model document has no histogram (single-file fit)");
        const auto& h = doc.at("histogram");
        const auto& edges = h.at("bin_edges");
        const auto& g = h.at("g");
        os << "p,g\n";
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double mid = 0.5 * (edges[i].get<double>() + edges[i + 1].get<double>());
            os << detail::format_double(mid) << ',' << detail::format_double(g[i].get<double>()) << '\n';
        }
        return os.str();
    }
    throw FormatError("unrecognized document kind '" + doc_kind + "'");
}

}  // namespace mfpart
