#include "nsm/dynamics.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "nsm/diagnostics.hpp"
#include "nsm/errors.hpp"
#include "test_util.hpp"

using namespace nsm;
using namespace nsm::testutil;

namespace {

using cplx = std::complex<double>;
using Mat6 = std::array<cplx, 36>;
using Vec6 = std::array<cplx, 6>;

Mat6 matmul(const Mat6& a, const Mat6& b) {
    Mat6 r{};
    for (int i = 0; i < 6; ++i)
        for (int k = 0; k < 6; ++k) {
            const cplx aik = a[6 * i + k];
            if (aik == cplx(0.0, 0.0)) continue;
            for (int j = 0; j < 6; ++j) r[6 * i + j] += aik * b[6 * k + j];
        }
    return r;
}

// exp(M) by scaled Taylor series with repeated squaring; independent of the
// production propagator's closed-form 2x2 blocks.
Mat6 matexp(Mat6 m) {
    double norm = 0.0;
    for (const cplx& z : m) norm += std::abs(z);
    int s = 0;
    while (norm > 0.5) {
        norm *= 0.5;
        ++s;
    }
    const double scale = std::ldexp(1.0, -s);
    for (cplx& z : m) z *= scale;

    Mat6 acc{};
    for (int i = 0; i < 6; ++i) acc[6 * i + i] = 1.0;
    Mat6 term = acc;
    for (int n = 1; n <= 24; ++n) {
        term = matmul(term, m);
        for (cplx& z : term) z /= static_cast<double>(n);
        for (int i = 0; i < 36; ++i) acc[i] += term[i];
    }
    for (int i = 0; i < s; ++i) acc = matmul(acc, acc);
    return acc;
}

Vec6 matvec(const Mat6& a, const Vec6& x) {
    Vec6 r{};
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) r[i] += a[6 * i + j] * x[j];
    return r;
}

// Independent per-mode oracle for the linearized system: the Maxwell block
// d/dt (E, B) = (c curl B - sigma c^2 E, -c curl E) as a 6x6 exponential, and
// the scalar heat factors on v (and on B for the MHD variants).
void oracle_propagate(SpectralField& v, SpectralField& E, SpectralField& B,
                      SystemVariant variant, const PhysicalParams& p, double t) {
    const Box& box = v.box();
    const double fs = box.freq_scale();
    for_each_mode(box, [&](std::int64_t flat, int k1, int k2, int k3) {
        const double xi[3] = {fs * k1, fs * k2, fs * k3};
        const double xi2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];

        const double vsym = (xi2 == 0.0) ? ((p.alpha == 0.0) ? 1.0 : 0.0)
                                         : std::pow(xi2, p.alpha);
        const double vfac = std::exp(-t * p.nu * vsym);
        for (int c = 0; c < 3; ++c) v.at(c, flat) *= vfac;

        if (uses_maxwell(variant)) {
            Mat6 m{};
            const double gamma = p.sigma * p.c * p.c;
            for (int a = 0; a < 3; ++a) m[6 * a + a] = -gamma;
            // (i xi x f)_a = i eps_abc xi_b f_c
            const int eps[3][3][3] = {{{0, 0, 0}, {0, 0, 1}, {0, -1, 0}},
                                      {{0, 0, -1}, {0, 0, 0}, {1, 0, 0}},
                                      {{0, 1, 0}, {-1, 0, 0}, {0, 0, 0}}};
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    for (int c = 0; c < 3; ++c) {
                        if (eps[a][b][c] == 0) continue;
                        const cplx ieps(0.0, p.c * eps[a][b][c] * xi[b]);
                        m[6 * a + (3 + c)] += ieps;        // dE_a from B_c
                        m[6 * (3 + a) + c] -= ieps;        // dB_a from E_c
                    }
            for (cplx& z : m) z *= t;
            const Mat6 ex = matexp(m);
            Vec6 u{E.at(0, flat), E.at(1, flat), E.at(2, flat),
                   B.at(0, flat), B.at(1, flat), B.at(2, flat)};
            const Vec6 w = matvec(ex, u);
            for (int c = 0; c < 3; ++c) {
                E.at(c, flat) = w[c];
                B.at(c, flat) = w[3 + c];
            }
        } else {
            const double bsym = (xi2 == 0.0) ? 0.0 : std::pow(xi2, p.beta);
            const double bfac = std::exp(-t * bsym / p.sigma);
            for (int c = 0; c < 3; ++c) B.at(c, flat) *= bfac;
        }
    });
}

double stacked_l2_diff(const SimState& a, const SimState& b) {
    const double dv = l2_norm(a.v - b.v);
    const double de = l2_norm(a.E - b.E);
    const double db = l2_norm(a.B - b.B);
    return std::sqrt(dv * dv + de * de + db * db);
}

}  // namespace

TEST_CASE("zero state has zero right-hand side for every variant") {
    for (auto variant : {SystemVariant::NSM, SystemVariant::NSM_SO, SystemVariant::NSM_GO,
                         SystemVariant::HMHD, SystemVariant::MHD, SystemVariant::NSM_GO_STAR}) {
        const Box box(2, 16);
        PhysicalParams p;
        p.kappa = 0.1;
        if (variant == SystemVariant::NSM_GO_STAR) {
            p.alpha = 0.0;
            p.b_star = {0.0, 0.0, 1.0};
        }
        SimState s(variant, box);
        const auto eval = rhs(s, p, StepperConfig{});
        CHECK(l2_norm(eval.dv) == 0.0);
        CHECK(l2_norm(eval.dB) == 0.0);
        if (variant != SystemVariant::NSM_GO_STAR) CHECK(l2_norm(eval.dE) == 0.0);
        CHECK(eval.diss_v == 0.0);
    }
}

TEST_CASE("instantaneous energy balance: <u, du/dt> = -dissipation for every variant") {
    const Box box(2, 32);
    for (auto variant : {SystemVariant::NSM, SystemVariant::NSM_SO, SystemVariant::NSM_GO,
                         SystemVariant::HMHD, SystemVariant::MHD, SystemVariant::NSM_GO_STAR}) {
        PhysicalParams p;
        p.kappa = 0.08;
        p.sigma = 1.4;
        p.c = 1.2;
        if (variant == SystemVariant::NSM_GO_STAR) {
            p.alpha = 0.0;
            p.b_star = {0.0, 0.0, 1.0};
        }
        if (variant == SystemVariant::HMHD) {
            p.alpha = 1.25;
            p.beta = 1.75;
        }
        InitialSpec spec;
        spec.amplitude = 0.8;
        spec.seed = 60;
        SimState s = make_initial(spec, box, variant, p);
        const auto eval = rhs(s, p, StepperConfig{});
        double total = inner_l2(s.v, eval.dv) + inner_l2(s.B, eval.dB);
        if (uses_maxwell(variant)) total += inner_l2(s.E, eval.dE);
        const double diss = eval.diss_v + eval.diss_j;
        CHECK(std::abs(total + diss) < 1e-10 * std::max(1.0, diss));
    }
}

TEST_CASE("MHD with vanishing B is incompressible Navier-Stokes") {
    const Box box(2, 32);
    PhysicalParams p;
    SimState s(SystemVariant::MHD, box);
    s.v = random_solenoidal(box, 9);
    const auto eval = rhs(s, p, StepperConfig{});
    CHECK(l2_norm(eval.dB) == 0.0);
    SpectralField expect =
        truncate(leray_project(advect(s.v, s.v)), box.dealias_radius());
    expect *= -1.0;
    expect -= frac_laplacian(s.v, 1.0);  // nu = 1
    CHECK(l2_norm(eval.dv - expect) / l2_norm(expect) < 1e-13);
}

TEST_CASE("Hall-MHD with kappa = 0 matches the separately-coded MHD path") {
    // The two variants compute the Lorentz force and induction term through
    // different algebraic routes (curl B x B versus B.grad B, curl(v x B)
    // versus the advective commutator), so agreement is a real check.
    const Box box(2, 32);
    PhysicalParams p;
    p.kappa = 0.0;
    p.sigma = 2.0;
    SimState a(SystemVariant::HMHD, box);
    a.v = random_solenoidal(box, 14);
    a.B = random_solenoidal(box, 15);
    a.j = curl(a.B);
    SimState b(SystemVariant::MHD, box);
    b.v = a.v;
    b.B = a.B;
    b.j = a.j;
    const auto ea = rhs(a, p, StepperConfig{});
    const auto eb = rhs(b, p, StepperConfig{});
    CHECK(l2_norm(ea.dv - eb.dv) / l2_norm(ea.dv) < 1e-11);
    CHECK(l2_norm(ea.dB - eb.dB) / l2_norm(ea.dB) < 1e-11);
    CHECK(rel_diff(ea.diss_j, eb.diss_j) < 1e-12);
}

TEST_CASE("pure shear mode decays exactly through the integrating factor") {
    const Box box(2, 16);
    PhysicalParams p;
    p.nu = 0.7;
    SimState s(SystemVariant::MHD, box);
    s.v = field_from_formula(box, [](double x, double, double) {
        return std::array<double, 3>{0.0, 0.0, std::sin(x)};
    });
    StepperConfig cfg;
    cfg.dt = 0.01;
    const SimState out = simulate(s, p, cfg, 0.1, 0, nullptr);
    // (v.grad)v vanishes identically for a single shear mode, so the run is
    // exactly the heat flow on |xi| = 1
    SpectralField expect = s.v;
    expect *= std::exp(-p.nu * 0.1);
    CHECK(l2_norm(out.v - expect) / l2_norm(expect) < 1e-13);
    CHECK(out.t == doctest::Approx(0.1));
}

TEST_CASE("linear propagator matches an independent matrix-exponential oracle") {
    for (int dim : {2, 3}) {
        const Box box(dim, 16);
        for (auto variant : {SystemVariant::NSM_GO, SystemVariant::MHD}) {
            PhysicalParams p;
            p.nu = 0.8;
            p.sigma = 1.7;
            p.c = 2.2;
            p.alpha = 1.3;
            p.beta = 1.4;
            // unprojected random data: longitudinal and mean modes included
            SpectralField v = random_band_field(box, 71, 0, 5, 1.0);
            SpectralField E = random_band_field(box, 72, 0, 5, 1.0);
            SpectralField B = random_band_field(box, 73, 0, 5, 1.0);
            const double scale = l2_norm(v) + l2_norm(E) + l2_norm(B);

            for (double t : {0.03, 0.7}) {
                SpectralField v1 = v, E1 = E, B1 = B;
                LinearPropagator prop(box, variant, p, t);
                prop.apply(v1, E1, B1);
                CHECK(prop.span() == t);

                SpectralField v2 = v, E2 = E, B2 = B;
                oracle_propagate(v2, E2, B2, variant, p, t);
                CHECK(max_coeff_diff(v1, v2) < 1e-12 * scale);
                CHECK(max_coeff_diff(E1, E2) < 1e-12 * scale);
                CHECK(max_coeff_diff(B1, B2) < 1e-12 * scale);
            }
        }
    }
}

TEST_CASE("linear propagator satisfies the semigroup law exp(A)^k = exp(kA)") {
    const Box box(2, 32);
    PhysicalParams p;
    p.sigma = 3.0;
    p.c = 1.5;
    SpectralField v = random_band_field(box, 81, 0, 10, 1.0);
    SpectralField E = random_band_field(box, 82, 0, 10, 1.0);
    SpectralField B = random_band_field(box, 83, 0, 10, 1.0);
    const double scale = l2_norm(v) + l2_norm(E) + l2_norm(B);

    SpectralField v1 = v, E1 = E, B1 = B;
    const LinearPropagator small(box, SystemVariant::NSM_GO, p, 0.05);
    for (int i = 0; i < 8; ++i) small.apply(v1, E1, B1);
    SpectralField v2 = v, E2 = E, B2 = B;
    const LinearPropagator big(box, SystemVariant::NSM_GO, p, 0.4);
    big.apply(v2, E2, B2);
    CHECK(max_coeff_diff(v1, v2) < 1e-12 * scale);
    CHECK(max_coeff_diff(E1, E2) < 1e-12 * scale);
    CHECK(max_coeff_diff(B1, B2) < 1e-12 * scale);

    // alpha = 0 damps the mean velocity mode (full damping -nu v)
    PhysicalParams pz = p;
    pz.alpha = 0.0;
    pz.b_star = {0.0, 0.0, 1.0};
    SpectralField vm(box), Em(box), Bm(box);
    vm.at(1, 0) = 2.0;
    const LinearPropagator damp(box, SystemVariant::NSM_GO_STAR, pz, 0.3);
    damp.apply(vm, Em, Bm);
    CHECK(std::abs(vm.at(1, 0).real() - 2.0 * std::exp(-0.3)) < 1e-14);
}

TEST_CASE("small-data stepper orbit stays near the exact linear flow") {
    const Box box(2, 16);
    PhysicalParams p;
    p.kappa = 0.05;
    const double eps = 1e-8;
    InitialSpec spec;
    spec.amplitude = eps;
    spec.seed = 19;
    SimState s = make_initial(spec, box, SystemVariant::NSM_GO, p);
    StepperConfig cfg;
    cfg.dt = 0.01;
    const SimState out = simulate(s, p, cfg, 0.2, 0, nullptr);

    SpectralField v = s.v, E = s.E, B = s.B;
    LinearPropagator prop(box, SystemVariant::NSM_GO, p, 0.2);
    prop.apply(v, E, B);
    SimState lin(SystemVariant::NSM_GO, box);
    lin.v = v;
    lin.E = E;
    lin.B = B;
    // the quadratic remainder contributes O(eps^2); relative deviation O(eps)
    CHECK(stacked_l2_diff(out, lin) / eps < 1e-6);
}

TEST_CASE("stepper converges at fourth order (Richardson ratio near 16)") {
    const Box box(2, 32);
    PhysicalParams p;
    p.kappa = 0.1;
    InitialSpec spec;
    spec.amplitude = 0.4;
    spec.seed = 23;
    const SimState s0 = make_initial(spec, box, SystemVariant::NSM_GO, p);
    const double T = 0.1;

    auto run_with = [&](double dt) {
        StepperConfig cfg;
        cfg.dt = dt;
        return simulate(s0, p, cfg, T, 0, nullptr);
    };
    const SimState fine = run_with(T / 80.0);
    const double e1 = stacked_l2_diff(run_with(T / 10.0), fine);
    const double e2 = stacked_l2_diff(run_with(T / 20.0), fine);
    const double ratio = e1 / e2;
    MESSAGE("Richardson ratio: ", ratio);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("CFL guard rejects advection faster than the stability span") {
    const Box box(2, 64);
    PhysicalParams p;
    InitialSpec spec;
    spec.amplitude = 50.0;
    spec.seed = 2;
    SimState s = make_initial(spec, box, SystemVariant::NSM_GO, p);
    StepperConfig cfg;
    cfg.dt = 1.0;
    Stepper st(box, SystemVariant::NSM_GO, p, cfg);
    CHECK_THROWS_AS(st.step(s), CflViolation);
}

TEST_CASE("random-band initial data: deterministic, normalized, consistent") {
    const Box box(2, 32);
    PhysicalParams p;
    p.kappa = 0.1;
    InitialSpec spec;
    spec.amplitude = 0.37;
    spec.seed = 77;
    const SimState a = make_initial(spec, box, SystemVariant::NSM_GO, p);
    const SimState b = make_initial(spec, box, SystemVariant::NSM_GO, p);
    CHECK(max_coeff_diff(a.v, b.v) == 0.0);
    CHECK(max_coeff_diff(a.E, b.E) == 0.0);
    CHECK(max_coeff_diff(a.B, b.B) == 0.0);

    CHECK(default_smoothness(box) == doctest::Approx(2.5));
    CHECK(xs_norm(a, default_smoothness(box)) == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(divergence_l2(a.v) < 1e-12);
    CHECK(divergence_l2(a.E) < 1e-12);
    CHECK(divergence_l2(a.B) < 1e-12);
    CHECK(mean_mode_magnitude(a.v) == 0.0);

    // j is initialized consistently with the implicit Ohm law
    const auto res = solve_ohm_implicit(a.v, a.E, a.B, p, box.dealias_radius());
    CHECK(l2_norm(a.j - res.j) / std::max(l2_norm(res.j), 1e-300) < 1e-10);

    // the plain-law variant leaves E unprojected
    const SimState c = make_initial(spec, box, SystemVariant::NSM, p);
    CHECK(divergence_l2(c.E) > 1e-6);
}

TEST_CASE("Beltrami initial data is a curl eigenfield") {
    const Box box3(3, 16);
    PhysicalParams p;
    InitialSpec spec;
    spec.family = "beltrami";
    spec.amplitude = 0.2;
    const SimState s3 = make_initial(spec, box3, SystemVariant::NSM_GO, p);
    CHECK(l2_norm(s3.v) == 0.0);
    CHECK(l2_norm(s3.E) == 0.0);
    CHECK(l2_norm(curl(s3.B) - s3.B) / l2_norm(s3.B) < 1e-13);  // curl B = +B
    CHECK(l2_norm(s3.B) == doctest::Approx(std::sqrt(3.0 * 0.2 * 0.2 * std::pow(kTwoPi, 3))));

    const Box box2(2, 16);
    const SimState s2 = make_initial(spec, box2, SystemVariant::NSM_GO, p);
    SpectralField minus = s2.B;
    minus *= -1.0;
    CHECK(l2_norm(curl(s2.B) - minus) / l2_norm(s2.B) < 1e-13);  // curl B = -B
}

TEST_CASE("simulate observer cadence and non-divisor step adjustment") {
    const Box box(2, 16);
    PhysicalParams p;
    InitialSpec spec;
    spec.amplitude = 0.1;
    SimState s = make_initial(spec, box, SystemVariant::NSM_GO, p);
    StepperConfig cfg;
    cfg.dt = 0.01;
    std::vector<double> times;
    simulate(s, p, cfg, 0.1, 3, [&](const SimState& st) { times.push_back(st.t); });
    REQUIRE(times.size() == 5);
    CHECK(times.front() == 0.0);
    CHECK(times[1] == doctest::Approx(0.03));
    CHECK(times.back() == doctest::Approx(0.1));

    // 0.095 is not a multiple of 0.01: the step is adjusted, the horizon is hit
    const SimState out = simulate(s, p, cfg, 0.095, 0, nullptr);
    CHECK(out.t == doctest::Approx(0.095).epsilon(1e-12));
}

TEST_CASE("state current stays consistent with the Ohm law during a run") {
    const Box box(2, 32);
    PhysicalParams p;
    p.kappa = 0.15;
    InitialSpec spec;
    spec.amplitude = 0.3;
    spec.seed = 8;
    SimState s = make_initial(spec, box, SystemVariant::NSM_GO, p);
    StepperConfig cfg;
    cfg.dt = 0.005;
    const SimState out = simulate(s, p, cfg, 0.05, 0, nullptr);
    const auto res = solve_ohm_implicit(out.v, out.E, out.B, p, box.dealias_radius());
    CHECK(l2_norm(out.j - res.j) / l2_norm(res.j) < 1e-9);

    // the background field enters the constant-field variant's Ohm law
    PhysicalParams ps = p;
    ps.alpha = 0.0;
    ps.b_star = {0.0, 0.0, 1.0};
    SimState g = make_initial(spec, box, SystemVariant::NSM_GO_STAR, ps);
    const SimState gout = simulate(g, ps, cfg, 0.05, 0, nullptr);
    SpectralField btot = gout.B;
    btot.at(2, 0) += ps.b_star[2];
    const auto res2 = solve_ohm_implicit(gout.v, gout.E, btot, ps, box.dealias_radius());
    CHECK(l2_norm(gout.j - res2.j) / l2_norm(res2.j) < 1e-9);
}
