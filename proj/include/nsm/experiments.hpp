#pragma once

#include <array>
#include <string>
#include <vector>

#include "nsm/diagnostics.hpp"
#include "nsm/dynamics.hpp"
#include "nsm/littlewood_paley.hpp"

namespace nsm {

// --- rate fitting ------------------------------------------------------------

struct RateFit {
    double exponent = 0.0;
    double intercept = 0.0;  // of the log-log line
    double r_squared = 0.0;
    std::vector<double> residuals;  // per-point log residuals
};

// Least squares on (log parameter, log error). Throws NonPositiveInput on a
// nonpositive coordinate and FitDegenerate when every error sits at the
// roundoff floor.
RateFit fit_rate(const std::vector<std::array<double, 2>>& points);

// --- shared run description ---------------------------------------------------

struct RunSetup {
    int dim = 2;
    int n = 64;
    double box_length = 0.0;  // <= 0: the 2*pi default
    SystemVariant variant = SystemVariant::NSM_GO;
    PhysicalParams params;
    StepperConfig stepper;
    InitialSpec initial;
    double t_final = 0.5;
    int observe_every = 10;
};

Box make_box(const RunSetup& run);

// Shared initial data: generated once from run.initial; when dir is nonempty
// it is saved to <dir>/initial.ckpt and read back, so every consumer sees the
// checkpoint bytes.
SimState shared_initial(const RunSetup& run, const std::string& dir);

// --- limit sweeps (parameter -> error against a reference run) ----------------

struct LimitPoint {
    double param = 0.0;
    double err_v = 0.0;   // ||v_param - v_ref||
    double err_eb = 0.0;  // ||(E,B) difference|| (B only for an MHD reference)
    double err_total = 0.0;
};

struct LimitSweepSpec {
    RunSetup run;               // the sweep system
    std::vector<double> grid;   // kappa, nu, or c values
    double error_sobolev_index = 0.0;  // comparison norm H^{s'}; 0 = L2
    std::string output_dir;     // empty: nothing written
    int max_concurrency = 1;
};

struct LimitSweepResult {
    std::vector<LimitPoint> points;
    RateFit fit;             // err_total against the parameter
    bool monotone = false;   // errors nondecreasing in the parameter
    std::string csv;
};

// NSM-GO with kappa from the grid against the kappa = 0 solenoidal-Ohm
// reference, shared initial data, errors at t_final.
LimitSweepResult run_kappa_limit(const LimitSweepSpec& spec);

// NSM-GO with nu from the grid against the nu = 0 reference.
LimitSweepResult run_inviscid_limit(const LimitSweepSpec& spec);

struct LightSpeedPoint {
    double c = 0.0;
    double err_vb = 0.0;    // ||(v^c - v, B^c - B)(T)||
    double e_sup_hs = 0.0;  // sup_t ||E^c||_{H^s} over the sampled times
};

struct LightSpeedResult {
    std::vector<LightSpeedPoint> points;
    bool decreasing_tail = false;  // error strictly decreases on the last two points
    double e_sup_ratio = 0.0;      // max over grid of e_sup_hs / e_sup_hs(first c)
    std::string csv;
};

// NSM-GO with c from the (ascending) grid against the magnetohydrodynamic
// reference sharing (v0, B0). No rate is fitted: only decrease is reported.
LightSpeedResult run_light_speed_limit(const LimitSweepSpec& spec);

// --- helicity drift under large conductivity -----------------------------------

struct HelicityDriftSample {
    double t = 0.0;
    double h = 0.0;
    double drift = 0.0;  // |h - h0|
    double bound = 0.0;  // the variant's drift bound at this time
    double b_hml2 = 0.0;  // ||B||^2 in the homogeneous -1/2 Sobolev norm
};

struct HelicityDriftPoint {
    double sigma = 0.0;
    double h0 = 0.0;
    double gamma0_sq = 0.0;  // ||(v,E,B)(0)||^2 (E dropped for MHD variants)
    double drift_max = 0.0;
    double margin_max = 0.0;  // max over samples of drift / bound
    double b_hml2_min = 0.0;  // lower envelope of the -1/2 norm series
    std::vector<HelicityDriftSample> series;
};

struct HelicityDriftSpec {
    RunSetup run;  // d = 3; beltrami-based initial data
    std::vector<double> sigma_grid;
    std::vector<double> dt_grid;  // per-sigma step; empty = run.stepper.dt
    double perturb_amplitude = 0.0;  // optional random solenoidal perturbation
    std::string output_dir;
    int max_concurrency = 1;
};

struct HelicityDriftResult {
    std::vector<HelicityDriftPoint> points;
    bool bound_ok = false;     // every sample satisfies the drift bound
    bool monotone_ok = false;  // drift_max nonincreasing along the sigma grid
    std::string csv;
};

// Drift bound sigma^{-1/2} (t+1) ||Gamma_0||^2 for the Maxwell system, and
// 2 (t+1) sigma^{-2/7} ||Gamma_0||^2 for the critical MHD variant
// (alpha, beta) = (5/4, 7/4); selected by run.variant.
HelicityDriftResult run_sigma_helicity(const HelicityDriftSpec& spec);

// --- perturbative decay around a constant magnetic background -------------------

struct StabilitySample {
    double t = 0.0;
    double vej_l2 = 0.0;     // ||(v, E, j)||_{L2}
    double grad_b_l2 = 0.0;  // ||grad B||_{L2}
    double b_linf = 0.0;
    double b_l2 = 0.0;  // recorded, never asserted
};

struct StabilitySpec {
    RunSetup run;  // NSM_GO_STAR, alpha = 0, b_star nonzero
    double decay_fraction = 1e-2;
    double integral_tail_tol = 0.05;  // allowed growth of the H^s integrals
                                      // when the horizon doubles
    double smoothness = 0.0;          // 0: the box default
    std::string output_dir;
};

struct StabilityResult {
    std::vector<StabilitySample> series;  // sampled out to 2 * t_final
    double vej0 = 0.0, grad_b0 = 0.0;
    double vej_at_T = 0.0, grad_b_at_T = 0.0;
    double threshold_time_v = -1.0;  // first sample with vej below the fraction
    double integral_half = 0.0;      // int_0^T (||v||_{H^s}^2 + ||j||_{H^s}^2)
    double integral_full = 0.0;      // same out to 2T
    bool decay_ok = false;
    bool integral_stable = false;
    std::string csv;
};

StabilityResult run_stability_decay(const StabilitySpec& spec);

// --- reconstruction through the lagged approximation hierarchy -------------------

struct PicardSpec {
    RunSetup run;  // NSM_GO, small data
    int n_max = 5;
    double r_index = 0.0;  // comparison space X^r; 0: smoothness - 1
    double ratio_threshold = 0.5;
    std::string output_dir;
};

struct PicardResult {
    std::vector<double> diffs;   // diffs[i] = sup_t ||Gamma^{i+2} - Gamma^{i+1}||_{X^r}
    std::vector<double> ratios;  // consecutive quotients
    double level1_error = 0.0;   // level 1 vs one-shot closed-form propagation
    double final_vs_direct = 0.0;  // sup_t ||Gamma^{n_max} - direct||_{X^r}
    double tail_constant = 0.0;    // max_n diffs[n] * 2^{n (s-r)} / ||Gamma_0||_{X^s}
    double gamma0_xs = 0.0;
    bool contraction_ok = false;   // ratios <= threshold from level 3 on
    std::string csv;
};

// Co-evolves hierarchy levels n = 1..n_max (truncation radius 2^n, lagged
// advection/Ohm/Lorentz, level 0 identically zero) and the full implicit-Ohm
// run, all under the same stepper.
PicardResult run_picard_reconstruction(const PicardSpec& spec);

// --- harmonic-analysis lemma suite ----------------------------------------------

struct EnvelopeFit {
    int q = 0;        // shell index (frequency scale 2^q)
    double p = 2.0;   // Lebesgue exponent of the measured norm
    double c3 = 0.0;  // fitted decay-rate constant
    double c4 = 0.0;  // fitted prefactor
};

struct LemmaSuiteSpec {
    int n = 64;      // base resolution (d = 2)
    int n_hi = 128;  // doubled resolution for stability checks
    int trials = 200;
    int heat_trials = 50;
    std::uint64_t seed = 7;
    double s = 1.5;  // regularity for the s-dependent estimates
    std::string output_dir;
};

struct LemmaSuiteResult {
    double ft_max_ratio = 0.0;  // truncation-tail estimate (constant-1 bound)
    double bernstein_l2_l1_max = 0.0;
    double bernstein_linf_l2_max = 0.0;
    double bony_residual_max = 0.0;  // relative reconstruction defect
    LemmaVerification para_lo, para_hi;
    double para_drift_max = 0.0;  // max ratio between the two resolutions
    std::vector<EnvelopeFit> envelopes;
    bool c3_positive = false;
    bool c3_stable = false;     // max/min fitted c3 within a factor of 4
    double heat_ratio_max = 0.0;  // forced-heat maximal-regularity ratio
    int heat_skipped = 0;
    std::string csv;  // per-trial paraproduct rows: inequality,trial,lhs,rhs,ratio
};

LemmaSuiteResult run_lemma_suite(const LemmaSuiteSpec& spec);

// --- JSON plumbing ----------------------------------------------------------------

// Each loader takes the text of a JSON object; absent keys keep defaults.
// Field names are documented by configs/defaults.json.
RunSetup run_setup_from_json(const std::string& text);
LimitSweepSpec limit_spec_from_json(const std::string& text);
HelicityDriftSpec helicity_spec_from_json(const std::string& text);
StabilitySpec stability_spec_from_json(const std::string& text);
PicardSpec picard_spec_from_json(const std::string& text);
LemmaSuiteSpec lemma_spec_from_json(const std::string& text);

// Reads a whole file (throws ConfigError on failure).
std::string read_text_file(const std::string& path);
// Extracts the named top-level section of a JSON document as text; empty name
// returns the whole document.
std::string json_section(const std::string& text, const std::string& section);

}  // namespace nsm
