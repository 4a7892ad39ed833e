// nsmx: command-line harness for the spectral Navier-Stokes-Maxwell toolbox.
//
// Subcommands: simulate, sweep <kind>, verify-lemmas, fit-report,
// checkpoint-save, checkpoint-load. Configuration comes from a JSON file
// (one section per experiment kind) plus --override dotted-path flags; every
// threshold asserted here is read from the config, never hard-coded. Exit
// code is nonzero when any configured assertion fails.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nsm/checkpoint.hpp"
#include "nsm/diagnostics.hpp"
#include "nsm/dynamics.hpp"
#include "nsm/experiments.hpp"
#include "nsm/spectral_ops.hpp"

namespace {

using json = nlohmann::json;
using namespace nsm;

json load_config(const std::string& path, bool explicit_path) {
    if (!std::filesystem::exists(path)) {
        if (explicit_path) throw ConfigError("config file not found: " + path);
        return json::object();
    }
    return json::parse(read_text_file(path));
}

// --override a.b.c=VALUE ; VALUE parsed as JSON when possible, string otherwise.
void apply_override(json& doc, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like path.to.key=value: " + kv);
    const std::string path = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;
    }
    json* cur = &doc;
    std::size_t pos = 0;
    while (true) {
        const auto dot = path.find('.', pos);
        const std::string seg = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (seg.empty()) throw ConfigError("override has an empty path segment: " + kv);
        if (dot == std::string::npos) {
            (*cur)[seg] = value;
            break;
        }
        cur = &((*cur)[seg]);
        pos = dot + 1;
    }
}

json section_of(const json& doc, const std::string& name) {
    if (doc.contains(name)) return doc.at(name);
    return json::object();
}

void write_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot open for writing: " + path);
    os << content;
}

// Collected pass/fail lines; the process exit code reflects the worst one.
struct Checks {
    int failures = 0;

    void expect(bool ok, const std::string& name, const std::string& detail) {
        std::cout << (ok ? "PASS" : "FAIL") << ' ' << name << ": " << detail << '\n';
        if (!ok) ++failures;
    }
};

std::string g17(double x) { return format_g17(x); }

// --- result -> JSON ----------------------------------------------------------

json fit_json(const RateFit& f) {
    return json{{"exponent", f.exponent},
                {"intercept", f.intercept},
                {"r_squared", f.r_squared},
                {"residuals", f.residuals}};
}

json limit_json(const LimitSweepResult& r) {
    json pts = json::array();
    for (const auto& p : r.points)
        pts.push_back({{"param", p.param},
                       {"err_v", p.err_v},
                       {"err_eb", p.err_eb},
                       {"err_total", p.err_total}});
    return json{{"points", pts}, {"fit", fit_json(r.fit)}, {"monotone", r.monotone}};
}

json light_json(const LightSpeedResult& r) {
    json pts = json::array();
    for (const auto& p : r.points)
        pts.push_back({{"c", p.c}, {"err_vb", p.err_vb}, {"e_sup_hs", p.e_sup_hs}});
    return json{{"points", pts},
                {"decreasing_tail", r.decreasing_tail},
                {"e_sup_ratio", r.e_sup_ratio}};
}

json helicity_json(const HelicityDriftResult& r) {
    json pts = json::array();
    for (const auto& p : r.points)
        pts.push_back({{"sigma", p.sigma},
                       {"h0", p.h0},
                       {"gamma0_sq", p.gamma0_sq},
                       {"drift_max", p.drift_max},
                       {"margin_max", p.margin_max},
                       {"b_hml2_min", p.b_hml2_min},
                       {"samples", p.series.size()}});
    return json{{"points", pts}, {"bound_ok", r.bound_ok}, {"monotone_ok", r.monotone_ok}};
}

json stability_json(const StabilityResult& r) {
    return json{{"vej0", r.vej0},
                {"grad_b0", r.grad_b0},
                {"vej_at_T", r.vej_at_T},
                {"grad_b_at_T", r.grad_b_at_T},
                {"threshold_time_v", r.threshold_time_v},
                {"integral_half", r.integral_half},
                {"integral_full", r.integral_full},
                {"decay_ok", r.decay_ok},
                {"integral_stable", r.integral_stable},
                {"samples", r.series.size()}};
}

json picard_json(const PicardResult& r) {
    return json{{"diffs", r.diffs},
                {"ratios", r.ratios},
                {"level1_error", r.level1_error},
                {"final_vs_direct", r.final_vs_direct},
                {"tail_constant", r.tail_constant},
                {"gamma0_xs", r.gamma0_xs},
                {"contraction_ok", r.contraction_ok}};
}

json lemma_json(const LemmaSuiteResult& r) {
    json env = json::array();
    for (const auto& e : r.envelopes)
        env.push_back({{"q", e.q}, {"p", e.p}, {"c3", e.c3}, {"c4", e.c4}});
    json para = json::object();
    for (const char* name : {"para1", "para2", "para3", "para4", "para5", "para6"})
        para[name] = {{"lo", r.para_lo.max_ratio(name)}, {"hi", r.para_hi.max_ratio(name)}};
    return json{{"ft_max_ratio", r.ft_max_ratio},
                {"bernstein_l2_l1_max", r.bernstein_l2_l1_max},
                {"bernstein_linf_l2_max", r.bernstein_linf_l2_max},
                {"bony_residual_max", r.bony_residual_max},
                {"para_ratios", para},
                {"para_drift_max", r.para_drift_max},
                {"envelopes", env},
                {"c3_positive", r.c3_positive},
                {"c3_stable", r.c3_stable},
                {"heat_ratio_max", r.heat_ratio_max},
                {"heat_skipped", r.heat_skipped}};
}

void write_report(const std::string& dir, const std::string& kind, const json& result) {
    if (dir.empty()) return;
    json rep{{"kind", kind}, {"result", result}};
    write_file(dir + "/report.json", rep.dump(2) + "\n");
    std::cout << "wrote " << dir << "/report.json\n";
}

// --- subcommand bodies --------------------------------------------------------

NormSpec norm_from(const json& q) {
    NormSpec n;
    n.field = q.value("field", n.field);
    n.kind = q.value("kind", n.kind);
    n.index = q.value("index", n.index);
    n.homogeneous = q.value("homogeneous", n.homogeneous);
    n.label = q.value("label", n.label);
    return n;
}

int cmd_simulate(const json& doc, std::string out_dir) {
    const json jr = section_of(doc, "run");
    const RunSetup run = run_setup_from_json(jr.dump());
    if (out_dir.empty()) out_dir = jr.value("output_dir", std::string("out/simulate"));
    std::vector<NormSpec> extra;
    if (jr.contains("norms"))
        for (const auto& q : jr.at("norms")) extra.push_back(norm_from(q));

    const Box box = make_box(run);
    SimState state = make_initial(run.initial, box, run.variant, run.params);
    const SimState initial = state;
    std::vector<DiagnosticsRecord> series;
    Observer obs = [&](const SimState& s) { series.push_back(record(s, run.params, extra)); };
    state = simulate(std::move(state), run.params, run.stepper, run.t_final, run.observe_every,
                     obs);

    const double residual = energy_balance_residual(initial, state);
    std::ostringstream csv, jsonl;
    write_csv(csv, series);
    write_jsonl(jsonl, series);
    write_file(out_dir + "/diagnostics.csv", csv.str());
    write_file(out_dir + "/diagnostics.jsonl", jsonl.str());

    const DiagnosticsRecord& last = series.back();
    json summary{{"variant", to_string(run.variant)},
                 {"dim", box.dim},
                 {"n", box.n},
                 {"t_final", state.t},
                 {"dt", run.stepper.dt},
                 {"records", series.size()},
                 {"energy_initial", series.front().energy},
                 {"energy_final", last.energy},
                 {"helicity_final", last.helicity},
                 {"energy_balance_residual", residual}};
    write_file(out_dir + "/summary.json", summary.dump(2) + "\n");

    std::cout << to_string(run.variant) << " on " << box.n << "^" << box.dim
              << " box: t=" << g17(state.t) << " energy=" << g17(last.energy)
              << " helicity=" << g17(last.helicity) << '\n'
              << "energy-balance residual (stepper integrals): " << g17(residual) << '\n'
              << "wrote " << out_dir << "/diagnostics.{csv,jsonl} (" << series.size()
              << " records)\n";

    Checks ck;
    if (jr.contains("assert")) {
        const json& a = jr.at("assert");
        if (a.contains("max_energy_residual"))
            ck.expect(std::abs(residual) <= a.at("max_energy_residual").get<double>(),
                      "energy_residual",
                      g17(residual) + " vs " + g17(a.at("max_energy_residual").get<double>()));
        if (a.contains("max_divergence")) {
            const double dmax = std::max(
                std::max(divergence_l2(state.v), divergence_l2(state.B)), divergence_l2(state.j));
            ck.expect(dmax <= a.at("max_divergence").get<double>(), "solenoidality",
                      g17(dmax) + " vs " + g17(a.at("max_divergence").get<double>()));
        }
    }
    return ck.failures == 0 ? 0 : 1;
}

int cmd_sweep_limit(const json& sec, const std::string& kind, std::string out_dir) {
    LimitSweepSpec spec = limit_spec_from_json(sec.dump());
    if (!out_dir.empty()) spec.output_dir = out_dir;
    const LimitSweepResult res = (kind == "kappa_limit")      ? run_kappa_limit(spec)
                                 : (kind == "inviscid_limit") ? run_inviscid_limit(spec)
                                                              : LimitSweepResult{};
    std::cout << kind << ": " << res.points.size() << " points, exponent "
              << g17(res.fit.exponent) << " (R^2 " << g17(res.fit.r_squared) << "), errors "
              << (res.monotone ? "monotone" : "NOT monotone") << '\n';
    for (const auto& p : res.points)
        std::cout << "  param " << g17(p.param) << " -> err " << g17(p.err_total) << '\n';
    write_report(spec.output_dir, kind, limit_json(res));

    Checks ck;
    if (sec.contains("assert")) {
        const json& a = sec.at("assert");
        if (a.contains("min_exponent"))
            ck.expect(res.fit.exponent >= a.at("min_exponent").get<double>(), "exponent",
                      g17(res.fit.exponent) + " vs min " +
                          g17(a.at("min_exponent").get<double>()));
        if (a.contains("max_exponent"))
            ck.expect(res.fit.exponent <= a.at("max_exponent").get<double>(), "exponent_cap",
                      g17(res.fit.exponent) + " vs max " +
                          g17(a.at("max_exponent").get<double>()));
        if (a.contains("min_r_squared"))
            ck.expect(res.fit.r_squared >= a.at("min_r_squared").get<double>(), "r_squared",
                      g17(res.fit.r_squared) + " vs min " +
                          g17(a.at("min_r_squared").get<double>()));
        if (a.value("monotone", false))
            ck.expect(res.monotone, "monotone", res.monotone ? "errors nondecreasing" : "violated");
    }
    return ck.failures == 0 ? 0 : 1;
}

int cmd_sweep_light(const json& sec, std::string out_dir) {
    LimitSweepSpec spec = limit_spec_from_json(sec.dump());
    if (!out_dir.empty()) spec.output_dir = out_dir;
    const LightSpeedResult res = run_light_speed_limit(spec);
    std::cout << "light_speed_limit: " << res.points.size() << " points, tail "
              << (res.decreasing_tail ? "decreasing" : "NOT decreasing") << ", e_sup ratio "
              << g17(res.e_sup_ratio) << '\n';
    for (const auto& p : res.points)
        std::cout << "  c " << g17(p.c) << " -> err " << g17(p.err_vb) << ", sup|E|_Hs "
                  << g17(p.e_sup_hs) << '\n';
    write_report(spec.output_dir, "light_speed_limit", light_json(res));

    Checks ck;
    if (sec.contains("assert")) {
        const json& a = sec.at("assert");
        if (a.value("decreasing_tail", false))
            ck.expect(res.decreasing_tail, "decreasing_tail",
                      res.decreasing_tail ? "last two points decrease" : "violated");
        if (a.contains("max_e_sup_ratio"))
            ck.expect(res.e_sup_ratio <= a.at("max_e_sup_ratio").get<double>(), "e_sup_ratio",
                      g17(res.e_sup_ratio) + " vs max " +
                          g17(a.at("max_e_sup_ratio").get<double>()));
    }
    return ck.failures == 0 ? 0 : 1;
}

int cmd_sweep_helicity(const json& sec, const std::string& kind, std::string out_dir) {
    HelicityDriftSpec spec = helicity_spec_from_json(sec.dump());
    if (!out_dir.empty()) spec.output_dir = out_dir;
    const HelicityDriftResult res = run_sigma_helicity(spec);
    std::cout << kind << " (" << to_string(spec.run.variant) << "): h0 "
              << (res.points.empty() ? 0.0 : res.points.front().h0) << ", bound "
              << (res.bound_ok ? "holds" : "VIOLATED") << ", drift "
              << (res.monotone_ok ? "nonincreasing" : "NOT monotone") << " in sigma\n";
    for (const auto& p : res.points)
        std::cout << "  sigma " << g17(p.sigma) << " -> drift_max " << g17(p.drift_max)
                  << ", margin_max " << g17(p.margin_max) << '\n';
    write_report(spec.output_dir, kind, helicity_json(res));

    Checks ck;
    if (sec.contains("assert")) {
        const json& a = sec.at("assert");
        if (a.value("bound_ok", false))
            ck.expect(res.bound_ok, "drift_bound",
                      res.bound_ok ? "every sample under the bound" : "violated");
        if (a.value("monotone_ok", false))
            ck.expect(res.monotone_ok, "drift_monotone",
                      res.monotone_ok ? "nonincreasing in sigma" : "violated");
        if (a.value("strict_decrease", false)) {
            bool strict = res.points.size() >= 2;
            for (std::size_t i = 1; i < res.points.size(); ++i)
                if (!(res.points[i].drift_max < res.points[i - 1].drift_max)) strict = false;
            ck.expect(strict, "drift_strict_decrease",
                      strict ? "strictly decreasing in sigma" : "violated");
        }
    }
    return ck.failures == 0 ? 0 : 1;
}

int cmd_sweep_stability(const json& sec, std::string out_dir) {
    StabilitySpec spec = stability_spec_from_json(sec.dump());
    if (!out_dir.empty()) spec.output_dir = out_dir;
    const StabilityResult res = run_stability_decay(spec);
    std::cout << "stability_decay: ||(v,E,j)|| " << g17(res.vej0) << " -> " << g17(res.vej_at_T)
              << ", ||grad B|| " << g17(res.grad_b0) << " -> " << g17(res.grad_b_at_T)
              << ", v-threshold at t=" << g17(res.threshold_time_v) << '\n'
              << "  H^s integrals: [0,T] " << g17(res.integral_half) << ", [0,2T] "
              << g17(res.integral_full) << '\n';
    write_report(spec.output_dir, "stability_decay", stability_json(res));

    Checks ck;
    if (sec.contains("assert")) {
        const json& a = sec.at("assert");
        if (a.value("decay_ok", false))
            ck.expect(res.decay_ok, "decay",
                      res.decay_ok ? "both series under the configured fraction" : "violated");
        if (a.value("integral_stable", false))
            ck.expect(res.integral_stable, "integral_stable",
                      res.integral_stable ? "stable under horizon doubling" : "violated");
    }
    return ck.failures == 0 ? 0 : 1;
}

int cmd_sweep_picard(const json& sec, std::string out_dir) {
    PicardSpec spec = picard_spec_from_json(sec.dump());
    if (!out_dir.empty()) spec.output_dir = out_dir;
    const PicardResult res = run_picard_reconstruction(spec);
    std::cout << "picard_reconstruction: level-1 closed-form error " << g17(res.level1_error)
              << ", final vs direct " << g17(res.final_vs_direct) << ", contraction "
              << (res.contraction_ok ? "holds" : "VIOLATED") << '\n';
    for (std::size_t k = 0; k < res.diffs.size(); ++k)
        std::cout << "  levels " << (k + 2) << "-" << (k + 1) << ": diff " << g17(res.diffs[k])
                  << (k >= 1 ? ", ratio " + g17(res.ratios[k - 1]) : std::string()) << '\n';
    write_report(spec.output_dir, "picard_reconstruction", picard_json(res));

    Checks ck;
    if (sec.contains("assert")) {
        const json& a = sec.at("assert");
        if (a.value("contraction_ok", false))
            ck.expect(res.contraction_ok, "contraction",
                      res.contraction_ok ? "ratios under the threshold from level 3 on"
                                         : "violated");
        if (a.contains("max_level1_error"))
            ck.expect(res.level1_error <= a.at("max_level1_error").get<double>(), "level1",
                      g17(res.level1_error) + " vs max " +
                          g17(a.at("max_level1_error").get<double>()));
        if (a.contains("final_margin")) {
            const double s = (spec.run.initial.smoothness != 0.0)
                                 ? spec.run.initial.smoothness
                                 : spec.run.dim / 2.0 + 1.5;
            const double r = (spec.r_index != 0.0) ? spec.r_index : s - 1.0;
            const double bound = a.at("final_margin").get<double>() * res.tail_constant *
                                 std::pow(2.0, -spec.n_max * (s - r)) * res.gamma0_xs;
            ck.expect(res.final_vs_direct <= bound, "final_vs_direct",
                      g17(res.final_vs_direct) + " vs " + g17(bound));
        }
    }
    return ck.failures == 0 ? 0 : 1;
}

int cmd_sweep_lemma(const json& sec, std::string out_dir) {
    LemmaSuiteSpec spec = lemma_spec_from_json(sec.dump());
    if (!out_dir.empty()) spec.output_dir = out_dir;
    const LemmaSuiteResult res = run_lemma_suite(spec);
    std::cout << "lemma_verification: truncation-tail max ratio " << g17(res.ft_max_ratio)
              << ", Bony residual " << g17(res.bony_residual_max) << ", para drift "
              << g17(res.para_drift_max) << ", heat ratio " << g17(res.heat_ratio_max) << '\n';
    for (const char* name : {"para1", "para2", "para3", "para4", "para5", "para6"})
        std::cout << "  " << name << ": lo " << g17(res.para_lo.max_ratio(name)) << ", hi "
                  << g17(res.para_hi.max_ratio(name)) << '\n';
    write_report(spec.output_dir, "lemma_verification", lemma_json(res));

    Checks ck;
    if (sec.contains("assert")) {
        const json& a = sec.at("assert");
        auto cap = [&](const char* key, double got, const char* name) {
            if (a.contains(key))
                ck.expect(got <= a.at(key).get<double>(), name,
                          g17(got) + " vs max " + g17(a.at(key).get<double>()));
        };
        cap("max_ft_ratio", res.ft_max_ratio, "truncation_tail");
        cap("max_bony_residual", res.bony_residual_max, "bony_identity");
        cap("max_bernstein_l2_l1", res.bernstein_l2_l1_max, "bernstein_l2_l1");
        cap("max_bernstein_linf_l2", res.bernstein_linf_l2_max, "bernstein_linf_l2");
        cap("max_para_drift", res.para_drift_max, "para_resolution_drift");
        cap("max_heat_ratio", res.heat_ratio_max, "forced_heat_ratio");
        if (a.value("c3_positive", false))
            ck.expect(res.c3_positive, "envelope_c3_positive",
                      res.c3_positive ? "all fitted decay constants positive" : "violated");
        if (a.value("c3_stable", false))
            ck.expect(res.c3_stable, "envelope_c3_stable",
                      res.c3_stable ? "within the factor-4 band across shells" : "violated");
    }
    return ck.failures == 0 ? 0 : 1;
}

int cmd_sweep(const json& doc, const std::string& kind, const std::string& out_dir) {
    const json sec = section_of(doc, kind);
    if (kind == "kappa_limit" || kind == "inviscid_limit")
        return cmd_sweep_limit(sec, kind, out_dir);
    if (kind == "light_speed_limit") return cmd_sweep_light(sec, out_dir);
    if (kind == "sigma_helicity" || kind == "sigma_helicity_hmhd")
        return cmd_sweep_helicity(sec, kind, out_dir);
    if (kind == "stability_decay") return cmd_sweep_stability(sec, out_dir);
    if (kind == "picard_reconstruction") return cmd_sweep_picard(sec, out_dir);
    if (kind == "lemma_verification") return cmd_sweep_lemma(sec, out_dir);
    throw ConfigError("unknown sweep kind: " + kind);
}

int cmd_fit_report(const std::string& input, const std::string& x_col,
                   const std::string& y_col, const std::string& output, double min_exp,
                   double max_exp, double min_r2) {
    const std::string text = read_text_file(input);
    std::istringstream is(text);
    std::string line;
    std::vector<std::string> header;
    int xi = -1, yi = -1;
    std::vector<std::array<double, 2>> pts;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (header.empty()) {
            header = cells;
            for (std::size_t i = 0; i < header.size(); ++i) {
                if (header[i] == x_col) xi = static_cast<int>(i);
                if (header[i] == y_col) yi = static_cast<int>(i);
            }
            if (xi < 0 || yi < 0)
                throw ConfigError("columns '" + x_col + "'/'" + y_col + "' not found in " +
                                  input);
            continue;
        }
        if (static_cast<int>(cells.size()) <= std::max(xi, yi)) continue;
        pts.push_back({std::stod(cells[xi]), std::stod(cells[yi])});
    }
    const RateFit fit = fit_rate(pts);
    std::cout << "fit of " << y_col << " ~ " << x_col << "^p over " << pts.size()
              << " points: exponent " << g17(fit.exponent) << ", intercept "
              << g17(fit.intercept) << ", R^2 " << g17(fit.r_squared) << '\n';
    if (!output.empty()) {
        write_file(output, fit_json(fit).dump(2) + "\n");
        std::cout << "wrote " << output << '\n';
    }
    Checks ck;
    if (!std::isnan(min_exp))
        ck.expect(fit.exponent >= min_exp, "exponent", g17(fit.exponent) + " vs min " + g17(min_exp));
    if (!std::isnan(max_exp))
        ck.expect(fit.exponent <= max_exp, "exponent_cap",
                  g17(fit.exponent) + " vs max " + g17(max_exp));
    if (!std::isnan(min_r2))
        ck.expect(fit.r_squared >= min_r2, "r_squared",
                  g17(fit.r_squared) + " vs min " + g17(min_r2));
    return ck.failures == 0 ? 0 : 1;
}

int cmd_checkpoint_save(const json& doc, const std::string& path) {
    const RunSetup run = run_setup_from_json(section_of(doc, "run").dump());
    const Box box = make_box(run);
    const SimState s = make_initial(run.initial, box, run.variant, run.params);
    Checkpoint ck;
    ck.box = box;
    ck.fields.emplace("v", s.v);
    ck.fields.emplace("E", s.E);
    ck.fields.emplace("B", s.B);
    ck.fields.emplace("j", s.j);
    ck.scalars.emplace("t", s.t);
    ck.save(path);
    std::cout << "saved " << path << ": " << to_string(run.variant) << " initial state on "
              << box.n << "^" << box.dim << " box, ||v|| " << g17(l2_norm(s.v)) << ", ||B|| "
              << g17(l2_norm(s.B)) << '\n';
    return 0;
}

int cmd_checkpoint_load(const std::string& path) {
    const Checkpoint ck = Checkpoint::load(path);
    std::cout << "checkpoint " << path << ": box " << ck.box.n << "^" << ck.box.dim
              << " length " << g17(ck.box.length) << '\n';
    for (const auto& [name, f] : ck.fields)
        std::cout << "  field " << name << ": L2 " << g17(l2_norm(f)) << ", divergence "
                  << g17(divergence_l2(f)) << '\n';
    for (const auto& [name, v] : ck.scalars) std::cout << "  scalar " << name << " = " << g17(v) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral Navier-Stokes-Maxwell simulator and verification harness"};
    app.require_subcommand(1);

    std::string config_path = "configs/defaults.json";
    bool config_explicit = false;
    std::vector<std::string> overrides;
    std::string out_dir;
    app.add_option("-c,--config", config_path, "JSON config file")
        ->each([&](const std::string&) { config_explicit = true; });
    app.add_option("--override", overrides,
                   "dotted-path config override, e.g. run.stepper.dt=5e-4 (repeatable)");
    app.add_option("-o,--output-dir", out_dir, "output directory (overrides the config)");

    auto* sim = app.add_subcommand("simulate", "run one simulation from the 'run' section");

    std::string kind;
    auto* sweep = app.add_subcommand("sweep", "run a parameter-sweep experiment");
    sweep->add_option("kind", kind,
                      "kappa_limit | inviscid_limit | light_speed_limit | sigma_helicity | "
                      "sigma_helicity_hmhd | stability_decay | picard_reconstruction | "
                      "lemma_verification")
        ->required();

    auto* verify = app.add_subcommand("verify-lemmas", "run the harmonic-analysis lemma suite");

    std::string fit_input, fit_x = "param", fit_y = "err_total", fit_out;
    double min_exp = std::nan(""), max_exp = std::nan(""), min_r2 = std::nan("");
    auto* fit = app.add_subcommand("fit-report", "fit a rate from a (parameter, error) CSV");
    fit->add_option("-i,--input", fit_input, "CSV file with a header row")->required();
    fit->add_option("--x-col", fit_x, "parameter column name");
    fit->add_option("--y-col", fit_y, "error column name");
    fit->add_option("--output", fit_out, "write the fit as JSON here");
    fit->add_option("--min-exponent", min_exp, "fail when the exponent is below this");
    fit->add_option("--max-exponent", max_exp, "fail when the exponent is above this");
    fit->add_option("--min-r-squared", min_r2, "fail when R^2 is below this");

    std::string ck_path;
    auto* cksave = app.add_subcommand("checkpoint-save",
                                      "generate the 'run' initial state and save it");
    cksave->add_option("-p,--path", ck_path, "checkpoint file")->required();
    auto* ckload = app.add_subcommand("checkpoint-load", "load a checkpoint and summarize it");
    ckload->add_option("-p,--path", ck_path, "checkpoint file")->required();

    // let -c/-o/--override appear after the subcommand as well
    for (auto* sub : {sim, sweep, verify, fit, cksave, ckload}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        json doc;
        if (!app.got_subcommand(ckload) && !app.got_subcommand(fit)) {
            doc = load_config(config_path, config_explicit);
            for (const auto& kv : overrides) apply_override(doc, kv);
        }
        if (app.got_subcommand(sim)) return cmd_simulate(doc, out_dir);
        if (app.got_subcommand(sweep)) return cmd_sweep(doc, kind, out_dir);
        if (app.got_subcommand(verify)) return cmd_sweep(doc, "lemma_verification", out_dir);
        if (app.got_subcommand(fit))
            return cmd_fit_report(fit_input, fit_x, fit_y, fit_out, min_exp, max_exp, min_r2);
        if (app.got_subcommand(cksave)) return cmd_checkpoint_save(doc, ck_path);
        if (app.got_subcommand(ckload)) return cmd_checkpoint_load(ck_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
