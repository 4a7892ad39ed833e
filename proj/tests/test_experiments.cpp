#include "nsm/experiments.hpp"

#include <unistd.h>

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "nsm/errors.hpp"
#include "test_util.hpp"

using namespace nsm;
using namespace nsm::testutil;

namespace {

std::vector<std::array<double, 2>> power_points(double c, double expo,
                                                const std::vector<double>& xs) {
    std::vector<std::array<double, 2>> pts;
    for (double x : xs) pts.push_back({x, c * std::pow(x, expo)});
    return pts;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("nsm_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

}  // namespace

TEST_CASE("rate fit recovers exact power laws") {
    const std::vector<double> xs = {0.1, 0.03, 0.01, 0.003, 0.001};
    const auto fit = fit_rate(power_points(3.7, 2.0, xs));
    CHECK(fit.exponent == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(std::log(3.7)).epsilon(1e-10));
    REQUIRE(fit.residuals.size() == xs.size());
    for (double r : fit.residuals) CHECK(std::abs(r) < 1e-12);

    // a constant series has slope zero and (by convention) a perfect fit
    const auto flat = fit_rate(power_points(0.5, 0.0, xs));
    CHECK(flat.exponent == doctest::Approx(0.0));
    CHECK(flat.r_squared == doctest::Approx(1.0));
}

TEST_CASE("rate fit tolerates a subdominant correction term") {
    std::vector<std::array<double, 2>> pts;
    for (double x : {0.1, 0.03, 0.01, 0.003, 0.001}) pts.push_back({x, x * (1.0 + 0.05 * x)});
    const auto fit = fit_rate(pts);
    CHECK(fit.exponent > 0.999);
    CHECK(fit.exponent < 1.01);
    CHECK(fit.r_squared > 0.9999);
}

TEST_CASE("rate fit rejects degenerate input") {
    CHECK_THROWS_AS(static_cast<void>(fit_rate({{0.1, 1.0}})), ConfigError);
    CHECK_THROWS_AS(static_cast<void>(fit_rate({{-0.1, 1.0}, {0.2, 2.0}})), NonPositiveInput);
    CHECK_THROWS_AS(static_cast<void>(fit_rate({{0.1, 0.0}, {0.2, 2.0}})), NonPositiveInput);
    // everything at the roundoff floor: no rate is identifiable
    CHECK_THROWS_AS(static_cast<void>(fit_rate({{0.1, 1e-15}, {0.2, 1e-16}})), FitDegenerate);
}

TEST_CASE("run setup loads from JSON with defaults for absent keys") {
    const std::string text = R"({
      "dim": 3, "n": 16, "box_length": 12.566370614359172,
      "variant": "HMHD",
      "params": {"nu": 0.5, "sigma": 2.0, "c": 3.0, "kappa": 0.25,
                 "alpha": 1.25, "beta": 1.75, "b_star": [0.0, 0.1, 0.9]},
      "stepper": {"dt": 0.004, "truncation_radius": 2.5, "cfl_safety": 0.8,
                  "ohm_tol": 1e-10, "ohm_max_iterations": 77},
      "initial": {"family": "beltrami", "amplitude": 0.33, "seed": 12,
                  "smoothness": 2.25, "k_band": 6},
      "t_final": 0.75, "observe_every": 4
    })";
    const RunSetup r = run_setup_from_json(text);
    CHECK(r.dim == 3);
    CHECK(r.n == 16);
    CHECK(r.box_length == doctest::Approx(2.0 * kTwoPi));
    CHECK(r.variant == SystemVariant::HMHD);
    CHECK(r.params.nu == 0.5);
    CHECK(r.params.sigma == 2.0);
    CHECK(r.params.c == 3.0);
    CHECK(r.params.kappa == 0.25);
    CHECK(r.params.alpha == 1.25);
    CHECK(r.params.beta == 1.75);
    CHECK(r.params.b_star[1] == 0.1);
    CHECK(r.stepper.dt == 0.004);
    CHECK(r.stepper.truncation_radius == 2.5);
    CHECK(r.stepper.cfl_safety == 0.8);
    CHECK(r.stepper.ohm.tol == 1e-10);
    CHECK(r.stepper.ohm.max_iterations == 77);
    CHECK(r.initial.family == "beltrami");
    CHECK(r.initial.amplitude == 0.33);
    CHECK(r.initial.seed == 12);
    CHECK(r.initial.smoothness == 2.25);
    CHECK(r.initial.k_band == 6);
    CHECK(r.t_final == 0.75);
    CHECK(r.observe_every == 4);

    const RunSetup d = run_setup_from_json("{}");
    CHECK(d.dim == 2);
    CHECK(d.n == 64);
    CHECK(d.variant == SystemVariant::NSM_GO);
    CHECK(d.stepper.dt == 1e-3);

    CHECK_THROWS_AS(static_cast<void>(run_setup_from_json("not json")), ConfigError);
    CHECK_THROWS_AS(static_cast<void>(run_setup_from_json(R"({"variant": "XYZ"})")),
                    ConfigError);
}

TEST_CASE("sweep specs load their own sections") {
    const std::string text = R"({
      "run": {"n": 16, "t_final": 0.1},
      "grid": [0.2, 0.1],
      "error_sobolev_index": 1.0,
      "max_concurrency": 4
    })";
    const LimitSweepSpec s = limit_spec_from_json(text);
    CHECK(s.run.n == 16);
    CHECK(s.grid == std::vector<double>{0.2, 0.1});
    CHECK(s.error_sobolev_index == 1.0);
    CHECK(s.max_concurrency == 4);

    const HelicityDriftSpec h = helicity_spec_from_json(
        R"({"sigma_grid": [10.0, 100.0], "dt_grid": [0.02, 0.01], "perturb_amplitude": 0.05})");
    CHECK(h.sigma_grid.size() == 2);
    CHECK(h.dt_grid[1] == 0.01);
    CHECK(h.perturb_amplitude == 0.05);

    const PicardSpec pc = picard_spec_from_json(R"({"n_max": 4, "ratio_threshold": 0.6})");
    CHECK(pc.n_max == 4);
    CHECK(pc.ratio_threshold == 0.6);

    const StabilitySpec st = stability_spec_from_json(R"({"decay_fraction": 0.02})");
    CHECK(st.decay_fraction == 0.02);

    const LemmaSuiteSpec lm = lemma_spec_from_json(R"({"n": 32, "n_hi": 64, "trials": 5})");
    CHECK(lm.n == 32);
    CHECK(lm.n_hi == 64);
    CHECK(lm.trials == 5);
}

TEST_CASE("json_section addresses top-level sections") {
    const std::string doc = R"({"a": {"x": 1}, "b": [1, 2]})";
    CHECK(json_section(doc, "a") == "{\"x\":1}");
    CHECK(json_section(doc, "").find("\"b\"") != std::string::npos);
    CHECK_THROWS_AS(static_cast<void>(json_section(doc, "missing")), ConfigError);
    CHECK_THROWS_AS(static_cast<void>(read_text_file("/no/such/file.json")), ConfigError);
}

TEST_CASE("shared initial data round-trips through its checkpoint") {
    TempDir tmp;
    RunSetup run;
    run.n = 16;
    run.initial.amplitude = 0.2;
    run.initial.seed = 31;
    const SimState direct = shared_initial(run, "");
    const SimState via_ckpt = shared_initial(run, tmp.path.string());
    CHECK(std::filesystem::exists(tmp.path / "initial.ckpt"));
    CHECK(max_coeff_diff(direct.v, via_ckpt.v) == 0.0);
    CHECK(max_coeff_diff(direct.E, via_ckpt.E) == 0.0);
    CHECK(max_coeff_diff(direct.B, via_ckpt.B) == 0.0);
    CHECK(max_coeff_diff(direct.j, via_ckpt.j) == 0.0);
}

TEST_CASE("kappa sweep: deterministic, ordered errors, schema-tagged csv") {
    LimitSweepSpec spec;
    spec.run.n = 16;
    spec.run.t_final = 0.02;
    spec.run.stepper.dt = 0.005;
    spec.run.observe_every = 2;
    spec.run.initial.amplitude = 0.3;
    spec.run.initial.seed = 6;
    spec.grid = {0.2, 0.1, 0.05};
    const auto a = run_kappa_limit(spec);
    REQUIRE(a.points.size() == 3);
    for (const auto& pt : a.points) {
        CHECK(pt.err_total > 0.0);
        CHECK(std::isfinite(pt.err_total));
    }
    // the Hall correction shrinks with kappa
    CHECK(a.points.front().param == 0.2);
    CHECK(a.monotone);
    CHECK(a.csv.rfind("# schema nsm-limit-sweep v1", 0) == 0);
    CHECK(a.fit.exponent > 0.5);

    const auto b = run_kappa_limit(spec);
    CHECK(a.csv == b.csv);

    // concurrency must not change the aggregated result
    LimitSweepSpec par = spec;
    par.max_concurrency = 3;
    const auto c = run_kappa_limit(par);
    CHECK(a.csv == c.csv);
}

TEST_CASE("light speed sweep produces per-c errors and the E envelope") {
    LimitSweepSpec spec;
    spec.run.n = 16;
    spec.run.t_final = 0.02;
    spec.run.stepper.dt = 0.005;
    spec.run.observe_every = 1;
    spec.run.initial.amplitude = 0.2;
    spec.run.initial.seed = 13;
    spec.grid = {1.0, 2.0};
    const auto res = run_light_speed_limit(spec);
    REQUIRE(res.points.size() == 2);
    CHECK(res.points[0].c == 1.0);
    for (const auto& pt : res.points) {
        CHECK(pt.err_vb > 0.0);
        CHECK(pt.e_sup_hs > 0.0);
    }
    CHECK(res.e_sup_ratio >= 1.0);  // includes the reference point itself
    CHECK(res.csv.rfind("# schema nsm-light-speed v1", 0) == 0);
}

TEST_CASE("picard reconstruction smoke: levels, ratios, closed-form level 1") {
    PicardSpec spec;
    spec.run.n = 16;
    spec.run.t_final = 0.02;
    spec.run.stepper.dt = 0.01;
    spec.run.observe_every = 1;
    spec.run.initial.amplitude = 0.05;
    spec.run.initial.seed = 3;
    spec.n_max = 3;
    const auto res = run_picard_reconstruction(spec);
    REQUIRE(res.diffs.size() == 2);   // pairs (2-1), (3-2)
    REQUIRE(res.ratios.size() == 1);
    CHECK(res.level1_error < 1e-9);   // level 1 is exactly the linear flow
    CHECK(res.gamma0_xs > 0.0);
    CHECK(res.final_vs_direct > 0.0);
    CHECK(res.tail_constant > 0.0);
    CHECK(res.csv.rfind("# schema nsm-picard v1", 0) == 0);
}

TEST_CASE("stability decay smoke: sampled series out to the doubled horizon") {
    StabilitySpec spec;
    spec.run.n = 16;
    spec.run.variant = SystemVariant::NSM_GO_STAR;
    spec.run.params.alpha = 0.0;
    spec.run.params.b_star = {0.0, 0.0, 1.0};
    spec.run.t_final = 0.1;
    spec.run.stepper.dt = 0.02;
    spec.run.observe_every = 2;
    spec.run.initial.amplitude = 0.05;
    const auto res = run_stability_decay(spec);
    REQUIRE(!res.series.empty());
    CHECK(res.vej0 > 0.0);
    CHECK(res.grad_b0 > 0.0);
    CHECK(res.series.back().t == doctest::Approx(0.2));  // 2 * t_final
    CHECK(res.integral_full >= res.integral_half);
    CHECK(res.csv.rfind("# schema nsm-stability v1", 0) == 0);
}
