// Acceptance gate: runs every numerical-verification criterion end to end and
// prints one PASS/FAIL line per criterion with the measured quantities of
// interest. All thresholds come from the JSON config given as argv[1]; the
// exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "nsm/experiments.hpp"
#include "ohm_oracle.hpp"

using namespace nsm;
using json = nlohmann::json;

namespace {

int g_failures = 0;

void report(bool pass, const std::string& name, const std::string& detail, double seconds) {
    if (!pass) ++g_failures;
    std::printf("%s %s: %s  [%.1fs]\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str(),
                seconds);
    std::fflush(stdout);
}

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

// Every criterion runs inside a guard so one failure cannot take down the gate.
template <typename Fn>
void criterion(const std::string& name, Fn&& fn) {
    Timer t;
    try {
        fn(t);
    } catch (const std::exception& e) {
        report(false, name, std::string("exception: ") + e.what(), t.seconds());
    }
}

double simulate_residual(const RunSetup& run, double dt) {
    RunSetup r = run;
    r.stepper.dt = dt;
    const SimState s0 = shared_initial(r, "");
    const SimState s1 =
        simulate(s0, r.params, r.stepper, r.t_final, 0, nullptr);
    return std::abs(energy_balance_residual(s0, s1));
}

void energy_balance_criterion(const json& sec) {
    criterion("criterion-01 energy-balance", [&](const Timer& t) {
        const RunSetup run = run_setup_from_json(sec.at("run").dump());
        const double max_residual = sec.at("max_residual").get<double>();
        const double min_factor = sec.at("min_halving_factor").get<double>();
        const double r1 = simulate_residual(run, run.stepper.dt);
        const double r2 = simulate_residual(run, 0.5 * run.stepper.dt);
        const double factor = r1 / std::max(r2, 1e-300);
        const bool pass = r1 <= max_residual && factor >= min_factor;
        report(pass, "criterion-01 energy-balance",
               "residual=" + fmt(r1) + " (cap " + fmt(max_residual) + "), halving factor=" +
                   fmt(factor) + " (floor " + fmt(min_factor) + ")",
               t.seconds());
    });
}

void helicity_criterion(const json& sec, const std::string& name) {
    criterion(name, [&](const Timer& t) {
        const HelicityDriftSpec spec = helicity_spec_from_json(sec.dump());
        const bool strict = sec.value("require_strict_decrease", false);
        const HelicityDriftResult res = run_sigma_helicity(spec);
        bool strictly_decreasing = true;
        for (std::size_t i = 1; i < res.points.size(); ++i)
            if (!(res.points[i].drift_max < res.points[i - 1].drift_max))
                strictly_decreasing = false;
        std::string detail;
        for (const auto& pt : res.points)
            detail += "sigma=" + fmt(pt.sigma) + " margin=" + fmt(pt.margin_max) + " ";
        detail += strict ? (std::string("strict-decrease=") + (strictly_decreasing ? "yes" : "no"))
                         : (std::string("nonincreasing=") + (res.monotone_ok ? "yes" : "no"));
        const bool pass = res.bound_ok && res.monotone_ok && (!strict || strictly_decreasing);
        report(pass, name, detail, t.seconds());
    });
}

void limit_criterion(const json& sec, const std::string& name, bool inviscid) {
    criterion(name, [&](const Timer& t) {
        const LimitSweepSpec spec = limit_spec_from_json(sec.dump());
        const double min_expo = sec.at("min_exponent").get<double>();
        const double min_r2 = sec.at("min_r_squared").get<double>();
        const LimitSweepResult res = inviscid ? run_inviscid_limit(spec) : run_kappa_limit(spec);
        const bool pass = res.fit.exponent >= min_expo && res.fit.r_squared >= min_r2;
        report(pass, name,
               "exponent=" + fmt(res.fit.exponent) + " (floor " + fmt(min_expo) + "), R^2=" +
                   fmt(res.fit.r_squared) + " (floor " + fmt(min_r2) + "), points=" +
                   std::to_string(res.points.size()),
               t.seconds());
    });
}

void light_speed_criterion(const json& sec) {
    criterion("criterion-06 light-speed-limit", [&](const Timer& t) {
        const LimitSweepSpec spec = limit_spec_from_json(sec.dump());
        const double max_ratio = sec.at("max_e_sup_ratio").get<double>();
        const LightSpeedResult res = run_light_speed_limit(spec);
        std::string errs;
        for (const auto& pt : res.points) errs += fmt(pt.err_vb) + " ";
        const bool pass = res.decreasing_tail && res.e_sup_ratio <= max_ratio;
        report(pass, "criterion-06 light-speed-limit",
               "errors=[" + errs + "] tail-decrease=" + (res.decreasing_tail ? "yes" : "no") +
                   ", E-sup ratio=" + fmt(res.e_sup_ratio) + " (cap " + fmt(max_ratio) + ")",
               t.seconds());
    });
}

void stability_criterion(const json& sec) {
    criterion("criterion-07 stability-decay", [&](const Timer& t) {
        const StabilitySpec spec = stability_spec_from_json(sec.dump());
        const StabilityResult res = run_stability_decay(spec);
        const double b_l2_final = res.series.empty() ? 0.0 : res.series.back().b_l2;
        report(res.decay_ok, "criterion-07 stability-decay",
               "vej(T)/vej(0)=" + fmt(res.vej_at_T / res.vej0) + ", gradB(T)/gradB(0)=" +
                   fmt(res.grad_b_at_T / res.grad_b0) + " (cap " + fmt(spec.decay_fraction) +
                   "), B_l2(2T)=" + fmt(b_l2_final) + " (recorded only)",
               t.seconds());
    });
}

void ohm_oracle_criterion(const json& sec) {
    criterion("criterion-08 ohm-oracle", [&](const Timer& t) {
        const int instances = sec.at("instances").get<int>();
        const int instances_3d = sec.at("instances_3d").get<int>();
        const int n = sec.at("n").get<int>();
        const double contraction_cap = sec.at("kappa_sup_b_max").get<double>();
        const std::uint64_t seed = sec.at("seed").get<std::uint64_t>();
        const double tol_fp = sec.at("tol_fixed_point").get<double>();
        const double tol_rt = sec.at("tol_roundtrip").get<double>();
        const int det_points = sec.at("det_points").get<int>();

        // exact determinant at random points
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        int det_exact = 0;
        for (int i = 0; i < det_points; ++i) {
            const double kappa = std::abs(u(rng));
            const std::array<double, 3> B{u(rng), u(rng), u(rng)};
            const HallMatrixPoint M{kappa, B};
            const double expect = kappa * kappa * (B[0] * B[0] + B[1] * B[1] + B[2] * B[2]) + 1.0;
            if (M.det() == expect) ++det_exact;
        }

        // grid-level round trip and fixed-point-versus-dense equivalence
        double worst_rt = 0.0, worst_fp = 0.0;
        int done = 0;
        for (int dim : {2, 3}) {
            const Box box(dim, n);
            const double m = box.dealias_radius();
            const nsm::testutil::DenseOhmOracle oracle(box, m);
            const int count = (dim == 2) ? instances - instances_3d : instances_3d;
            for (int i = 0; i < count; ++i, ++done) {
                const std::uint64_t s = seed + 7919ULL * static_cast<std::uint64_t>(done);
                PhysicalParams p;
                p.kappa = 0.1 + 0.4 * ((done % 5) / 4.0);
                p.sigma = 0.5 + (done % 3) * 0.75;
                p.c = 0.5 + (done % 4) * 0.5;
                SpectralField v = truncate(leray_project(random_band_field(box, s + 1, 1, 2, 1.0)), m);
                SpectralField E = truncate(leray_project(random_band_field(box, s + 2, 1, 2, 1.0)), m);
                SpectralField B = truncate(leray_project(random_band_field(box, s + 3, 1, 1, 1.0)), m);
                zero_mean_modes(v);
                zero_mean_modes(E);
                zero_mean_modes(B);
                const double target = contraction_cap * (0.3 + 0.7 * ((done % 7) / 6.0));
                B *= target / (p.kappa * sup_magnitude(B));

                // round trip of the pointwise matrix across the grid; the
                // narrow band keeps the product inside the dealias mask
                const SpectralField jf = random_band_field(box, s + 4, 1, 1, 1.0);
                const SpectralField rt = hall_matrix_solve(hall_matrix_apply(jf, B, p.kappa),
                                                           B, p.kappa);
                worst_rt = std::max(worst_rt, l2_norm(rt - jf) / l2_norm(jf));

                OhmSolveOptions opts;
                opts.tol = 1e-13;
                const auto fp = solve_ohm_implicit(v, E, B, p, m, opts);
                const SpectralField direct = oracle.solve(v, E, B, p);
                worst_fp = std::max(worst_fp, l2_norm(fp.j - direct) / l2_norm(direct));
            }
        }
        const bool pass = det_exact == det_points && worst_rt <= tol_rt && worst_fp <= tol_fp;
        report(pass, "criterion-08 ohm-oracle",
               "dense-vs-fixed-point=" + fmt(worst_fp) + " (cap " + fmt(tol_fp) +
                   "), round-trip=" + fmt(worst_rt) + " (cap " + fmt(tol_rt) + "), det exact " +
                   std::to_string(det_exact) + "/" + std::to_string(det_points) + ", instances=" +
                   std::to_string(done),
               t.seconds());
    });
}

void lemma_criterion(const json& sec) {
    criterion("criterion-09 lemma-suite", [&](const Timer& t) {
        const LemmaSuiteSpec spec = lemma_spec_from_json(sec.dump());
        const double max_ft = sec.at("max_ft_ratio").get<double>();
        const double max_bony = sec.at("max_bony_residual").get<double>();
        const double max_b21 = sec.at("max_bernstein_l2_l1").get<double>();
        const double max_bi2 = sec.at("max_bernstein_linf_l2").get<double>();
        const double max_drift = sec.at("max_para_drift").get<double>();
        const double max_heat = sec.at("max_heat_ratio").get<double>();

        const LemmaSuiteResult res = run_lemma_suite(spec);
        bool ratios_finite = true;
        for (const char* nm : {"para1", "para2", "para3", "para4", "para5", "para6"}) {
            if (!std::isfinite(res.para_lo.max_ratio(nm)) ||
                !std::isfinite(res.para_hi.max_ratio(nm)))
                ratios_finite = false;
        }
        const bool pass = res.ft_max_ratio <= max_ft && res.bony_residual_max <= max_bony &&
                          res.bernstein_l2_l1_max <= max_b21 &&
                          res.bernstein_linf_l2_max <= max_bi2 && ratios_finite &&
                          res.para_drift_max <= max_drift && res.c3_positive && res.c3_stable &&
                          res.heat_ratio_max <= max_heat;
        report(pass, "criterion-09 lemma-suite",
               "ft=" + fmt(res.ft_max_ratio) + ", bony=" + fmt(res.bony_residual_max) +
                   ", bernstein=(" + fmt(res.bernstein_l2_l1_max) + "," +
                   fmt(res.bernstein_linf_l2_max) + "), para-drift=" + fmt(res.para_drift_max) +
                   " (cap " + fmt(max_drift) + "), c3 positive=" +
                   (res.c3_positive ? "yes" : "no") + " stable=" + (res.c3_stable ? "yes" : "no") +
                   ", heat=" + fmt(res.heat_ratio_max) + " (cap " + fmt(max_heat) + ")",
               t.seconds());
    });
}

void picard_criterion(const json& sec) {
    criterion("criterion-10 picard-reconstruction", [&](const Timer& t) {
        const PicardSpec spec = picard_spec_from_json(sec.dump());
        const double max_level1 = sec.at("max_level1_error").get<double>();
        const double margin = sec.at("final_margin").get<double>();
        const PicardResult res = run_picard_reconstruction(spec);

        const Box box = make_box(spec.run);
        const double s = spec.run.initial.smoothness > 0.0 ? spec.run.initial.smoothness
                                                           : default_smoothness(box);
        const double r = spec.r_index > 0.0 ? spec.r_index : s - 1.0;
        const double tail = margin * res.tail_constant *
                            std::pow(2.0, -spec.n_max * (s - r)) * res.gamma0_xs;
        std::string ratios;
        for (double q : res.ratios) ratios += fmt(q) + " ";
        const bool pass = res.contraction_ok && res.level1_error <= max_level1 &&
                          res.final_vs_direct <= tail;
        report(pass, "criterion-10 picard-reconstruction",
               "ratios=[" + ratios + "] (cap " + fmt(spec.ratio_threshold) + " from level 3), " +
                   "level1=" + fmt(res.level1_error) + " (cap " + fmt(max_level1) +
                   "), final-vs-direct=" + fmt(res.final_vs_direct) + " <= " + fmt(tail) +
                   " (margin " + fmt(margin) + " on measured tail constant " +
                   fmt(res.tail_constant) + ")",
               t.seconds());
    });
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <config.json>\n");
        return 2;
    }
    json doc;
    try {
        doc = json::parse(read_text_file(argv[1]));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }

    energy_balance_criterion(doc.at("energy_balance"));
    helicity_criterion(doc.at("helicity_maxwell"), "criterion-02 helicity-drift");
    helicity_criterion(doc.at("helicity_hmhd"), "criterion-03 helicity-drift-critical");
    limit_criterion(doc.at("kappa_limit"), "criterion-04 hall-limit-rate", false);
    limit_criterion(doc.at("inviscid_limit"), "criterion-05 inviscid-limit-rate", true);
    light_speed_criterion(doc.at("light_speed"));
    stability_criterion(doc.at("stability"));
    ohm_oracle_criterion(doc.at("ohm_oracle"));
    lemma_criterion(doc.at("lemma_suite"));
    picard_criterion(doc.at("picard"));

    std::printf("acceptance: %d/10 criteria passed\n", 10 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
