#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fedsea/config_io.hpp"
#include "fedsea/experiment.hpp"

namespace fedsea {

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// JSON documents.
// ---------------------------------------------------------------------------

inline json to_json(const Theorem1Terms& t) {
    return {{"init_term", t.init_term},
            {"variance_term", t.variance_term},
            {"spatial_drift", t.spatial_drift},
            {"temporal_drift", t.temporal_drift},
            {"sum", t.sum()}};
}

inline json to_json(const Theorem2Terms& t) {
    json j{{"log_term", t.log_term},
           {"drift_term", t.drift_term},
           {"t0", t.t0},
           {"t0_ceiling_form", t.t0_ceiling_form},
           {"E_head_cap", t.E_head_cap},
           {"kappa", t.kappa},
           {"sum", t.sum()}};
    j["E_head"] = t.E_head ? json(*t.E_head) : json(nullptr);
    return j;
}

inline json to_json(const Lemma1Verdict& v) {
    return {{"pass", v.pass}, {"steps", v.steps}, {"failures", v.failures}, {"max_violation", v.max_violation},
            {"max_abs_gap", v.max_abs_gap}};
}

inline json to_json(const Lemma2Verdict& v) {
    return {{"pass", v.pass},       {"t", v.t},         {"estimate", v.estimate},
            {"std_error", v.std_error}, {"rhs", v.rhs}, {"virtual_part", v.virtual_part},
            {"drift_part", v.drift_part}};
}

inline json to_json(const Lemma3Verdict& v) {
    return {{"pass", v.pass}, {"replicates", v.replicates}, {"lhs", v.lhs}, {"lhs_std_error", v.lhs_std_error},
            {"rhs", v.rhs}};
}

inline json to_json(const BoundReport& b) {
    json j;
    j["empirical_regret"] = b.empirical_regret;
    j["empirical_regret_std_error"] = b.empirical_regret_std_error;
    j["D"] = b.D;
    j["theorem1_terms"] = b.theorem1 ? to_json(*b.theorem1) : json(nullptr);
    j["theorem2_terms"] = b.theorem2 ? to_json(*b.theorem2) : json(nullptr);
    json audits;
    audits["lemma1"] = b.lemma1 ? to_json(*b.lemma1) : json(nullptr);
    audits["lemma3"] = b.lemma3 ? to_json(*b.lemma3) : json(nullptr);
    audits["lemma2"] = json::array();
    for (const auto& v : b.lemma2) audits["lemma2"].push_back(to_json(v));
    audits["moving_target_split_max_error"] = b.max_split_error;
    j["lemma_audit_verdicts"] = audits;
    return j;
}

inline json to_json(const FitResult& f) {
    json j{{"model", to_string(f.model)}, {"r_squared", f.r_squared}, {"horizons", f.horizons}, {"values", f.values},
           {"point_std_errors", f.point_std_errors}};
    if (f.model == FitModel::power_law) {
        j["a"] = f.a;
        j["b"] = f.b;
        j["a_std_error"] = f.a_std_error;
        j["b_std_error"] = f.b_std_error;
    } else {
        j["a"] = f.a;
        j["c"] = f.c;
        j["a_std_error"] = f.a_std_error;
        j["c_std_error"] = f.c_std_error;
    }
    return j;
}

inline json profile_json(const HeterogeneityProfile& p) {
    json j{{"zeta_sq_bar", p.zeta_sq_bar}, {"K_sq_bar", p.K_sq_bar},     {"sigma_sq_bar", p.sigma_sq_bar},
           {"zeta_sq_max", p.zeta_sq_max}, {"K_sq_max", p.K_sq_max},     {"sigma_sq_max", p.sigma_sq_max},
           {"zeta_exact", p.zeta_exact},   {"sigma_exact", p.sigma_exact}, {"visited_ball", p.visited_ball}};
    j["domain_radius"] = p.domain.bounded() ? json(*p.domain.radius) : json("unbounded");
    return j;
}

inline json result_json(const ExperimentResult& r) {
    json j;
    j["config"] = to_json(r.config);
    j["config_hash"] = hex64(r.hash);
    j["constants"] = {{"L", r.L}, {"mu", r.mu}, {"D", r.D}};
    j["comparators"] = {{"method", to_string(r.comparator_method)},
                        {"best_in_hindsight", r.best_in_hindsight},
                        {"residual", r.comparator_residual}};
    j["step_size"] = {{"first", r.step_sizes.front()}, {"last", r.step_sizes.back()}};
    j["regret"] = {{"value", r.regret}, {"std_error", r.regret_std_error}, {"replicates", r.replicates.size()}};
    j["profile"] = profile_json(r.profile);
    j["bound_report"] = to_json(r.bounds);
    j["theory_compliant"] = r.theory_compliant;
    j["notes"] = r.notes;
    json reps = json::array();
    for (const auto& s : r.replicates)
        reps.push_back({{"replicate", s.replicate},
                        {"regret", s.regret},
                        {"sum_V", s.sum_consensus},
                        {"sum_gap_optimum", s.sum_gap_optimum},
                        {"max_iterate_norm", s.max_iterate_norm},
                        {"projected_steps", s.projected_steps},
                        {"lemma1_pass", s.lemma1.pass},
                        {"split_error", s.split.relative_error}});
    j["replicate_summaries"] = reps;
    return j;
}

inline json to_json(const StudyRow& r) {
    return {{"value", r.value},       {"regret", r.regret},       {"std_error", r.std_error},
            {"ratio", r.ratio},       {"ratio_std_error", r.ratio_std_error}, {"reference", r.reference},
            {"regime_ok", r.regime_ok}};
}

// ---------------------------------------------------------------------------
// Files.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace detail

inline std::string trace_csv(const ExperimentResult& r) {
    std::string s = "t,regret_cum,V_t,zeta_sq,K_sq,sigma_sq,eta_t,sync_flag\n";
    for (std::size_t t = 0; t < r.regret_cum.size(); ++t) {
        s += std::to_string(t + 1);
        for (double v : {r.regret_cum[t], r.consensus[t], r.profile.zeta_sq[t], r.profile.K_sq[t], r.profile.sigma_sq[t],
                         r.step_sizes[t]}) {
            s += ',';
            s += format_double(v);
        }
        s += r.sync[t] ? ",1\n" : ",0\n";
    }
    return s;
}

struct Series {
    std::string name;
    std::vector<double> x, y;
};

// Static line plot; axes optionally logarithmic. Non-positive values are dropped on log axes.
inline std::string svg_line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                                 const std::vector<Series>& series, bool logx = false, bool logy = false) {
    const double W = 640, H = 420, left = 70, right = 150, top = 40, bottom = 50;
    auto tx = [&](double v) { return logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return logy ? std::log10(v) : v; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!logx || x > 0) && (!logy || y > 0);
    };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (usable(s.x[i], s.y[i])) {
                x0 = std::min(x0, tx(s.x[i]));
                x1 = std::max(x1, tx(s.x[i]));
                y0 = std::min(y0, ty(s.y[i]));
                y1 = std::max(y1, ty(s.y[i]));
            }
    if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * (W - left - right); };
    auto py = [&](double v) { return H - bottom - (ty(v) - y0) / (y1 - y0) * (H - top - bottom); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + format_double(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";
    s += "<line x1=\"70\" y1=\"370\" x2=\"490\" y2=\"370\" stroke=\"black\"/>\n";
    s += "<line x1=\"70\" y1=\"40\" x2=\"70\" y2=\"370\" stroke=\"black\"/>\n";
    auto tick_label = [](double v, bool log) { return format_double(std::round((log ? std::pow(10.0, v) : v) * 1e4) / 1e4); };
    for (int k = 0; k <= 4; ++k) {
        const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
        const double sx = left + (W - left - right) * k / 4.0, sy = H - bottom - (H - top - bottom) * k / 4.0;
        s += "<text x=\"" + format_double(sx) + "\" y=\"388\" text-anchor=\"middle\">" + tick_label(fx, logx) + "</text>\n";
        s += "<text x=\"64\" y=\"" + format_double(sy + 4) + "\" text-anchor=\"end\">" + tick_label(fy, logy) + "</text>\n";
    }
    s += "<text x=\"280\" y=\"410\" text-anchor=\"middle\">" + xlabel + (logx ? " (log)" : "") + "</text>\n";
    s += "<text x=\"16\" y=\"205\" text-anchor=\"middle\" transform=\"rotate(-90 16 205)\">" + ylabel + (logy ? " (log)" : "") + "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& sr = series[k];
        const char* color = colors[k % 8];
        // Thin long series so files stay small.
        const std::size_t stride = std::max<std::size_t>(1, sr.x.size() / 2000);
        std::string pts;
        for (std::size_t i = 0; i < sr.x.size(); ++i) {
            if (i % stride != 0 && i + 1 != sr.x.size()) continue;
            if (!usable(sr.x[i], sr.y[i])) continue;
            pts += format_double(std::round(px(sr.x[i]) * 100) / 100) + "," + format_double(std::round(py(sr.y[i]) * 100) / 100) + " ";
        }
        s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        if (sr.x.size() <= 64)
            for (std::size_t i = 0; i < sr.x.size(); ++i)
                if (usable(sr.x[i], sr.y[i]))
                    s += "<circle cx=\"" + format_double(std::round(px(sr.x[i]) * 100) / 100) + "\" cy=\"" +
                         format_double(std::round(py(sr.y[i]) * 100) / 100) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(k);
        s += "<rect x=\"500\" y=\"" + format_double(ly) + "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
        s += "<text x=\"515\" y=\"" + format_double(ly + 9) + "\">" + sr.name + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

inline Series regret_series(const ExperimentResult& r, const std::string& name) {
    Series s{name, {}, r.regret_cum};
    s.x.resize(r.regret_cum.size());
    for (std::size_t t = 0; t < s.x.size(); ++t) s.x[t] = static_cast<double>(t + 1);
    return s;
}

inline void emit_run(const ExperimentResult& r, const std::filesystem::path& dir, bool plots) {
    std::filesystem::create_directories(dir);
    detail::write_text(dir / "trace.csv", trace_csv(r));
    detail::write_text(dir / "result.json", result_json(r).dump(2) + "\n");
    if (plots)
        detail::write_text(dir / "regret.svg", svg_line_plot("Cumulative regret", "t", "regret", {regret_series(r, "regret")}));
}

inline std::string cell_file_name(std::size_t index, const std::string& label) {
    std::string safe;
    for (char ch : label) safe += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '=' || ch == '.' || ch == '-' || ch == '_') ? ch : '_';
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "cell%04zu_", index);
    return prefix + safe + ".csv";
}

inline void emit_sweep(const SweepResult& r, const std::filesystem::path& dir, bool plots) {
    std::filesystem::create_directories(dir / "cells");
    json doc;
    doc["sweep"] = to_json(r.spec);
    doc["cells"] = json::array();
    std::vector<Series> curves;
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
        const auto& cell = r.cells[i];
        const std::string file = cell_file_name(i, cell.label);
        detail::write_text(dir / "cells" / file, trace_csv(cell.result));
        json coords = json::object();
        for (const auto& [name, v] : cell.coords) coords[name] = v;
        doc["cells"].push_back({{"label", cell.label}, {"coords", coords}, {"trace_csv", "cells/" + file},
                                {"result", result_json(cell.result)}});
        curves.push_back(regret_series(cell.result, cell.label));
    }
    doc["fits"] = json::array();
    std::vector<Series> fit_series;
    for (const auto& f : r.fits) {
        doc["fits"].push_back({{"group", f.group},
                               {"power_law", f.power ? to_json(*f.power) : json(nullptr)},
                               {"log_law", f.log ? to_json(*f.log) : json(nullptr)},
                               {"errors", f.errors}});
        if (f.power) fit_series.push_back({f.group.empty() ? "regret" : f.group, f.power->horizons, f.power->values});
    }
    detail::write_text(dir / "result.json", doc.dump(2) + "\n");
    if (plots) {
        detail::write_text(dir / "regret_curves.svg", svg_line_plot("Cumulative regret per cell", "t", "regret", curves));
        if (!fit_series.empty())
            detail::write_text(dir / "scaling.svg", svg_line_plot("Final regret vs horizon", "T", "regret", fit_series, true, true));
    }
}

inline json study_json(const std::vector<StudyRow>& rows, const std::vector<ExperimentResult>& runs) {
    json j = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        json row = to_json(rows[i]);
        row["result"] = result_json(runs[i]);
        j.push_back(row);
    }
    return j;
}

inline void emit_speedup(const SpeedupStudy& s, const std::filesystem::path& dir, bool plots) {
    std::filesystem::create_directories(dir);
    json doc{{"rows", study_json(s.rows, s.runs)}, {"strictly_decreasing", s.strictly_decreasing}, {"warnings", s.warnings}};
    detail::write_text(dir / "result.json", doc.dump(2) + "\n");
    std::string csv = "M,regret,std_error,ratio,ratio_std_error,predicted_ratio,regime_ok\n";
    Series measured{"measured ratio", {}, {}}, predicted{"1/sqrt(M)", {}, {}};
    for (const auto& r : s.rows) {
        csv += std::to_string(r.value) + "," + format_double(r.regret) + "," + format_double(r.std_error) + "," +
               format_double(r.ratio) + "," + format_double(r.ratio_std_error) + "," + format_double(r.reference) + "," +
               (r.regime_ok ? "1" : "0") + "\n";
        measured.x.push_back(static_cast<double>(r.value));
        measured.y.push_back(r.ratio);
        predicted.x.push_back(static_cast<double>(r.value));
        predicted.y.push_back(r.reference);
    }
    detail::write_text(dir / "speedup.csv", csv);
    if (plots)
        detail::write_text(dir / "speedup.svg", svg_line_plot("Regret ratio vs clients", "M", "regret(M)/regret(1)",
                                                              {measured, predicted}, true, true));
}

inline void emit_tau(const TauStudy& s, const std::filesystem::path& dir, bool plots) {
    std::filesystem::create_directories(dir);
    json doc{{"rows", study_json(s.rows, s.runs)},
             {"tau_star", s.tau_star},
             {"ratio_at_tau_star", s.ratio_at_tau_star},
             {"non_decreasing", s.non_decreasing}};
    detail::write_text(dir / "result.json", doc.dump(2) + "\n");
    std::string csv = "tau,regret,std_error,ratio,ratio_std_error,rounds,is_tau_star\n";
    Series measured{"regret", {}, {}};
    for (const auto& r : s.rows) {
        csv += std::to_string(r.value) + "," + format_double(r.regret) + "," + format_double(r.std_error) + "," +
               format_double(r.ratio) + "," + format_double(r.ratio_std_error) + "," + format_double(r.reference) + "," +
               (r.value == s.tau_star ? "1" : "0") + "\n";
        measured.x.push_back(static_cast<double>(r.value));
        measured.y.push_back(r.regret);
    }
    detail::write_text(dir / "tau.csv", csv);
    if (plots)
        detail::write_text(dir / "tau.svg", svg_line_plot("Regret vs synchronization period (tau* = " +
                                                              std::to_string(s.tau_star) + ")",
                                                          "tau", "regret", {measured}, true, false));
}

inline void emit_audit(const AuditReport& a, const std::filesystem::path& dir, bool plots) {
    emit_run(a.run, dir, plots);
    json doc{{"pass", a.pass}, {"frozen_steps", a.frozen_steps}, {"config_hash", hex64(a.run.hash)}};
    doc["lemma2"] = json::array();
    for (const auto& v : a.lemma2) doc["lemma2"].push_back(to_json(v));
    doc["lemma1"] = to_json(*a.run.bounds.lemma1);
    doc["lemma3"] = a.run.bounds.lemma3 ? to_json(*a.run.bounds.lemma3) : json(nullptr);
    detail::write_text(dir / "audit.json", doc.dump(2) + "\n");
}

}  // namespace fedsea
