#include "nsm/dynamics.hpp"

#include <cmath>
#include <complex>

namespace nsm {

namespace {

constexpr double kRk4Span = 2.8284271247461903;  // RK4 stability on the imaginary axis

SpectralField constant_field(const Box& box, const std::array<double, 3>& val) {
    SpectralField f(box);
    for (int c = 0; c < 3; ++c) f.at(c, 0) = cplx(val[c], 0.0);
    return f;
}

bool has_background(const PhysicalParams& p) {
    return p.b_star[0] != 0.0 || p.b_star[1] != 0.0 || p.b_star[2] != 0.0;
}

double effective_radius(const Box& box, const StepperConfig& cfg) {
    return (cfg.truncation_radius > 0.0)
               ? std::min(cfg.truncation_radius, box.dealias_radius())
               : box.dealias_radius();
}

struct Fields {
    SpectralField v, E, B;
    explicit Fields(const Box& box) : v(box), E(box), B(box) {}
    Fields(SpectralField v_, SpectralField E_, SpectralField B_)
        : v(std::move(v_)), E(std::move(E_)), B(std::move(B_)) {}
    void add_scaled(double s, const Fields& o) {
        v.axpy(s, o.v);
        E.axpy(s, o.E);
        B.axpy(s, o.B);
    }
};

struct Eval {
    Fields N;
    SpectralField j;
    double a_v = 0.0, a_j = 0.0;  // instantaneous dissipation rates
    int ohm_iterations = 0;
    explicit Eval(const Box& b) : N(b), j(b) {}
};

double diss_rate_v(const SpectralField& v, const PhysicalParams& p) {
    const double n = (p.alpha == 0.0) ? l2_norm(v) : sobolev_norm(v, p.alpha, true);
    return p.nu * n * n;
}

// Everything the exact linear propagator does not integrate: advection,
// Lorentz force, the current's contribution to dE, and the induction
// nonlinearities of the MHD variants. Pass j_known to skip the Ohm solve when
// the caller already holds the consistent current.
Eval eval_remainder(SystemVariant variant, const PhysicalParams& p, const StepperConfig& cfg,
                    double m, const SpectralField& v, const SpectralField& E,
                    const SpectralField& B, const SpectralField* j_known) {
    const Box& box = v.box();
    Eval ev(box);
    if (uses_maxwell(variant)) {
        SpectralField B_tot = B;
        if (variant == SystemVariant::NSM_GO_STAR && has_background(p))
            B_tot += constant_field(box, p.b_star);
        if (j_known) {
            ev.j = *j_known;
        } else if (variant == SystemVariant::NSM) {
            ev.j = solve_ohm_plain(v, E, B_tot, p, m);
        } else {
            auto r = solve_ohm_implicit(v, E, B_tot, p, m, cfg.ohm);
            ev.j = std::move(r.j);
            ev.ohm_iterations = r.iterations;
        }
        // v: Lorentz force minus advection
        ev.N.v = truncate(leray_project(cross(ev.j, B_tot)), m);
        ev.N.v -= truncate(leray_project(advect(v, v)), m);
        // E: remainder current -c (j - sigma c E); curl B and the relaxation
        // live in the propagator
        ev.N.E = ev.j;
        ev.N.E.axpy(-p.sigma * p.c, E);
        ev.N.E *= -p.c;
        // B: fully linear here
        ev.a_v = diss_rate_v(v, p);
        const double nj = l2_norm(ev.j);
        ev.a_j = nj * nj / p.sigma;
        return ev;
    }
    // MHD variants carry j = curl B
    ev.j = curl(B);
    if (variant == SystemVariant::HMHD) {
        ev.N.v = truncate(leray_project(cross(ev.j, B)), m);
        ev.N.v -= truncate(leray_project(advect(v, v)), m);
        ev.N.B = curl(truncate(cross(v, B), m));
        if (p.kappa > 0.0) {
            SpectralField hall = curl(truncate(cross(ev.j, B), m));
            ev.N.B.axpy(-p.kappa / p.sigma, hall);
        }
    } else {  // MHD
        ev.N.v = truncate(leray_project(advect(B, B)), m);
        ev.N.v -= truncate(leray_project(advect(v, v)), m);
        ev.N.B = truncate(advect(B, v), m);  // (B . grad) v
        ev.N.B -= truncate(advect(v, B), m);
        ev.N.B = leray_project(ev.N.B);
    }
    ev.a_v = diss_rate_v(v, p);
    const double nb = (p.beta == 0.0) ? l2_norm(B) : sobolev_norm(B, p.beta, true);
    ev.a_j = nb * nb / p.sigma;
    return ev;
}

void check_cfl(SystemVariant variant, const PhysicalParams& p, const StepperConfig& cfg,
               double m, const SpectralField& v, const SpectralField& B) {
    const double sup_v = sup_magnitude(v);
    double sup_b;
    if (variant == SystemVariant::NSM_GO_STAR && has_background(p)) {
        SpectralField B_tot = B;
        B_tot += constant_field(v.box(), p.b_star);
        sup_b = sup_magnitude(B_tot);
    } else {
        sup_b = sup_magnitude(B);
    }
    double rate = m * sup_v;
    if (uses_maxwell(variant)) {
        rate += p.sigma * p.c * (sup_b + sup_v);
        if (p.kappa > 0.0) {
            const double denom = std::max(0.05, 1.0 - p.kappa * sup_b);
            rate += p.sigma * p.c * p.c * p.kappa * sup_b / denom;
        }
    } else if (variant == SystemVariant::HMHD) {
        rate += m * sup_b + (p.kappa / p.sigma) * m * m * sup_b;
    } else {
        rate += m * sup_b;
    }
    if (cfg.dt * rate > kRk4Span * cfg.cfl_safety)
        throw CflViolation("step: dt " + std::to_string(cfg.dt) + " exceeds stability at rate " +
                           std::to_string(rate) + " (limit dt " +
                           std::to_string(kRk4Span * cfg.cfl_safety / rate) + ")");
}

// exp(t * [[-gamma, -i lambda], [-i lambda, 0]]) entries.
struct Block2 {
    cplx a, b, c, d;
};

Block2 maxwell_block_exp(double gamma, double lambda, double t) {
    const double om2 = 0.25 * gamma * gamma - lambda * lambda;
    const cplx omega = std::sqrt(cplx(om2, 0.0));
    const cplx wt = omega * t;
    cplx ch, sc;  // cosh(wt), sinh(wt)/omega
    if (std::abs(wt) < 1e-6) {
        const cplx wt2 = wt * wt;
        ch = 1.0 + wt2 * (0.5 + wt2 / 24.0);
        sc = t * (1.0 + wt2 * (1.0 / 6.0 + wt2 / 120.0));
    } else {
        ch = std::cosh(wt);
        sc = std::sinh(wt) / omega;
    }
    const double pre = std::exp(-0.5 * gamma * t);
    Block2 blk;
    blk.a = pre * (ch - 0.5 * gamma * sc);
    blk.b = pre * (cplx(0.0, -lambda) * sc);
    blk.c = blk.b;
    blk.d = pre * (ch + 0.5 * gamma * sc);
    return blk;
}

double heat_factor(double xi2, double nu, double alpha, double t) {
    double sym;
    if (xi2 == 0.0)
        sym = (alpha == 0.0) ? 1.0 : 0.0;
    else
        sym = std::pow(xi2, alpha);
    return std::exp(-t * nu * sym);
}

// Per-mode propagator tables for one step size.
struct PropTab {
    std::vector<double> heat_v;  // velocity dissipation factor
    std::vector<double> heat_b;  // magnetic dissipation factor (MHD variants)
    std::vector<Block2> mx;      // transverse Maxwell block (NSM family)
    std::vector<double> epar;    // longitudinal E relaxation (NSM family)
};

}  // namespace

struct LinearPropagator::Impl {
    Box box;
    SystemVariant variant;
    double t;
    PropTab tab;

    Impl(const Box& b, SystemVariant var, const PhysicalParams& p, double span)
        : box(b), variant(var), t(span) {
        PhysicalParams pp = p;
        pp.validate(variant);
        const std::size_t nm = static_cast<std::size_t>(box.modes());
        tab.heat_v.resize(nm);
        const double fs = box.freq_scale();
        const bool nsm = uses_maxwell(variant);
        if (nsm) {
            tab.mx.resize(nm);
            tab.epar.resize(nm);
        } else {
            tab.heat_b.resize(nm);
        }
        const double gamma = pp.sigma * pp.c * pp.c;
        for_each_mode(box, [&](std::int64_t flat, int k1, int k2, int k3) {
            const double xi2 = fs * fs * (k1 * k1 + k2 * k2 + k3 * k3);
            tab.heat_v[flat] = heat_factor(xi2, pp.nu, pp.alpha, t);
            if (nsm) {
                const double lambda = pp.c * std::sqrt(xi2);
                tab.mx[flat] = maxwell_block_exp(gamma, lambda, t);
                tab.epar[flat] = std::exp(-gamma * t);
            } else {
                tab.heat_b[flat] = heat_factor(xi2, 1.0 / pp.sigma, pp.beta, t);
            }
        });
    }
};

LinearPropagator::LinearPropagator(const Box& box, SystemVariant variant,
                                   const PhysicalParams& p, double span)
    : impl_(std::make_shared<const Impl>(box, variant, p, span)) {}

double LinearPropagator::span() const { return impl_->t; }

void LinearPropagator::apply(SpectralField& v, SpectralField& E, SpectralField& B) const {
    const Box& box = impl_->box;
    require_same_box(box, v.box(), "LinearPropagator::apply");
    require_same_box(box, B.box(), "LinearPropagator::apply");
    const PropTab& tab = impl_->tab;
    const std::size_t nm = static_cast<std::size_t>(box.modes());
    for (int c = 0; c < 3; ++c) {
        cplx* vd = v.comp(c);
        for (std::size_t i = 0; i < nm; ++i) vd[i] *= tab.heat_v[i];
    }
    if (!uses_maxwell(impl_->variant)) {
        for (int c = 0; c < 3; ++c) {
            cplx* bd = B.comp(c);
            for (std::size_t i = 0; i < nm; ++i) bd[i] *= tab.heat_b[i];
        }
        return;
    }
    require_same_box(box, E.box(), "LinearPropagator::apply");
    // Maxwell block: the mean mode only relaxes E; every other mode is
    // rotated in its transverse frame by the exact damped-wave solution,
    // while the longitudinal E part relaxes and B's is conserved.
    for (int c = 0; c < 3; ++c) E.at(c, 0) *= tab.epar[0];
    for_each_mode(box, [&](std::int64_t flat, int k1, int k2, int k3) {
        if (k1 == 0 && k2 == 0 && k3 == 0) return;
        const double kk = std::sqrt(static_cast<double>(k1 * k1 + k2 * k2 + k3 * k3));
        const double kh[3] = {k1 / kk, k2 / kk, k3 / kk};
        int t = 0;
        double best = std::abs(kh[0]);
        for (int i = 1; i < 3; ++i)
            if (std::abs(kh[i]) < best) {
                best = std::abs(kh[i]);
                t = i;
            }
        double e1[3] = {0.0, 0.0, 0.0};
        e1[t] = 1.0;
        const double proj = e1[0] * kh[0] + e1[1] * kh[1] + e1[2] * kh[2];
        for (int i = 0; i < 3; ++i) e1[i] -= proj * kh[i];
        const double n1 = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
        for (int i = 0; i < 3; ++i) e1[i] /= n1;
        const double e2[3] = {kh[1] * e1[2] - kh[2] * e1[1], kh[2] * e1[0] - kh[0] * e1[2],
                              kh[0] * e1[1] - kh[1] * e1[0]};

        const cplx Ev[3] = {E.at(0, flat), E.at(1, flat), E.at(2, flat)};
        const cplx Bv[3] = {B.at(0, flat), B.at(1, flat), B.at(2, flat)};
        auto dot = [](const cplx* f, const double* e) {
            return f[0] * e[0] + f[1] * e[1] + f[2] * e[2];
        };
        const cplx Epar = dot(Ev, kh), Bpar = dot(Bv, kh);
        const cplx E1 = dot(Ev, e1), E2 = dot(Ev, e2);
        const cplx B1 = dot(Bv, e1), B2 = dot(Bv, e2);

        // (E1, B2) evolves by the block; (E2, B1) by its sign-conjugate.
        const Block2& blk = tab.mx[flat];
        const cplx E1n = blk.a * E1 + blk.b * B2;
        const cplx B2n = blk.c * E1 + blk.d * B2;
        const cplx E2n = blk.a * E2 - blk.b * B1;
        const cplx B1n = -blk.c * E2 + blk.d * B1;
        const cplx Eparn = tab.epar[flat] * Epar;

        for (int i = 0; i < 3; ++i) {
            E.at(i, flat) = Eparn * kh[i] + E1n * e1[i] + E2n * e2[i];
            B.at(i, flat) = Bpar * kh[i] + B1n * e1[i] + B2n * e2[i];
        }
    });
}

double xs_norm(const SimState& s, double smoothness) {
    double acc = 0.0;
    const double nv = sobolev_norm(s.v, smoothness - 1.0, false);
    acc += nv * nv;
    const double nb = sobolev_norm(s.B, smoothness, false);
    acc += nb * nb;
    if (uses_maxwell(s.variant)) {
        const double ne = sobolev_norm(s.E, smoothness, false);
        acc += ne * ne;
    }
    return std::sqrt(acc);
}

std::string to_string(SystemVariant v) {
    switch (v) {
        case SystemVariant::NSM: return "NSM";
        case SystemVariant::NSM_SO: return "NSM_SO";
        case SystemVariant::NSM_GO: return "NSM_GO";
        case SystemVariant::HMHD: return "HMHD";
        case SystemVariant::MHD: return "MHD";
        case SystemVariant::NSM_GO_STAR: return "NSM_GO_STAR";
    }
    return "?";
}

SystemVariant variant_from_string(const std::string& s) {
    if (s == "NSM") return SystemVariant::NSM;
    if (s == "NSM_SO") return SystemVariant::NSM_SO;
    if (s == "NSM_GO") return SystemVariant::NSM_GO;
    if (s == "HMHD") return SystemVariant::HMHD;
    if (s == "MHD") return SystemVariant::MHD;
    if (s == "NSM_GO_STAR") return SystemVariant::NSM_GO_STAR;
    throw ConfigError("unknown system variant: " + s);
}

struct Stepper::Impl {
    Box box;
    SystemVariant variant;
    PhysicalParams p;
    StepperConfig cfg;
    double m;
    LinearPropagator full, half;

    Impl(const Box& b, SystemVariant var, const PhysicalParams& pp, const StepperConfig& c)
        : box(b),
          variant(var),
          p(pp),
          cfg(c),
          m(effective_radius(b, c)),
          full(b, var, pp, c.dt),
          half(b, var, pp, 0.5 * c.dt) {
        p.validate(variant);
    }

    static void propagate(const LinearPropagator& prop, Fields& u) {
        prop.apply(u.v, u.E, u.B);
    }

    void step(SimState& s) {
        const double h = cfg.dt;
        check_cfl(variant, p, cfg, m, s.v, s.B);

        // Stage 1 reuses the state's current (consistent by the state invariant).
        Eval e1 = eval_remainder(variant, p, cfg, m, s.v, s.E, s.B, &s.j);

        Fields u0(s.v, s.E, s.B);
        Fields u_half = u0;
        propagate(half, u_half);

        Fields p1 = e1.N;
        propagate(half, p1);
        Fields U2 = u_half;
        U2.add_scaled(0.5 * h, p1);
        Eval e2 = eval_remainder(variant, p, cfg, m, U2.v, U2.E, U2.B, nullptr);

        Fields U3 = u_half;
        U3.add_scaled(0.5 * h, e2.N);
        Eval e3 = eval_remainder(variant, p, cfg, m, U3.v, U3.E, U3.B, nullptr);

        Fields u_full = u0;
        propagate(full, u_full);
        Fields p3 = e3.N;
        propagate(half, p3);
        Fields U4 = u_full;
        U4.add_scaled(h, p3);
        Eval e4 = eval_remainder(variant, p, cfg, m, U4.v, U4.E, U4.B, nullptr);

        // u+ = Phi(h) u0 + h/6 (Phi(h) N1 + 2 Phi(h/2) (N2 + N3) + N4)
        Fields pN1 = e1.N;
        propagate(full, pN1);
        Fields mid = e2.N;
        mid.add_scaled(1.0, e3.N);
        propagate(half, mid);

        Fields out = u_full;
        out.add_scaled(h / 6.0, pN1);
        out.add_scaled(h / 3.0, mid);
        out.add_scaled(h / 6.0, e4.N);

        // dissipation integrals share the RK4 quadrature
        s.diss_v_integral += h / 6.0 * (e1.a_v + 2.0 * e2.a_v + 2.0 * e3.a_v + e4.a_v);
        s.diss_j_integral += h / 6.0 * (e1.a_j + 2.0 * e2.a_j + 2.0 * e3.a_j + e4.a_j);

        // Re-assert solenoidality (roundoff control; exact dynamics preserve it).
        out.v = leray_project(out.v);
        out.B = leray_project(out.B);
        if (variant != SystemVariant::NSM && uses_maxwell(variant))
            out.E = leray_project(out.E);

        s.v = std::move(out.v);
        s.E = std::move(out.E);
        s.B = std::move(out.B);
        s.t += h;

        // Refresh the current so the state invariant holds at the new time.
        Eval ej = eval_remainder(variant, p, cfg, m, s.v, s.E, s.B, nullptr);
        s.j = std::move(ej.j);
        s.last_ohm_iterations = ej.ohm_iterations;
    }
};

Stepper::Stepper(const Box& box, SystemVariant variant, const PhysicalParams& p,
                 const StepperConfig& cfg)
    : impl_(std::make_unique<Impl>(box, variant, p, cfg)) {}
Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

void Stepper::step(SimState& state) { impl_->step(state); }
double Stepper::radius() const { return impl_->m; }

void step(SimState& state, const PhysicalParams& p, const StepperConfig& cfg) {
    Stepper st(state.box(), state.variant, p, cfg);
    st.step(state);
}

RhsEval rhs(const SimState& state, const PhysicalParams& p, const StepperConfig& cfg) {
    p.validate(state.variant);
    const double m = effective_radius(state.box(), cfg);
    Eval ev = eval_remainder(state.variant, p, cfg, m, state.v, state.E, state.B, nullptr);
    RhsEval out{std::move(ev.N.v), std::move(ev.N.E), std::move(ev.N.B), std::move(ev.j),
                ev.a_v,            ev.a_j,            ev.ohm_iterations};
    // restore the linear parts the propagator integrates for the stepper
    if (uses_maxwell(state.variant)) {
        SpectralField cB = curl(state.B);
        cB *= p.c;
        out.dE += cB;
        SpectralField Edamp = state.E;  // remainder already carries +sigma c^2 E
        Edamp *= -p.sigma * p.c * p.c;
        out.dE += Edamp;
        SpectralField cE = curl(state.E);
        cE *= -p.c;
        out.dB += cE;
    } else {
        SpectralField diss = frac_laplacian(state.B, p.beta);
        diss *= -1.0 / p.sigma;
        out.dB += diss;
    }
    if (p.nu != 0.0) {
        SpectralField vd = frac_laplacian(state.v, p.alpha);
        vd *= -p.nu;
        out.dv += vd;
    }
    return out;
}

SimState simulate(SimState state, const PhysicalParams& p, const StepperConfig& cfg,
                  double t_final, int observe_every, const Observer& observer) {
    if (t_final <= 0.0) throw ConfigError("simulate: t_final must be positive");
    if (observe_every <= 0) observe_every = 1;
    long long n = std::llround(t_final / cfg.dt);
    if (n < 1) n = 1;
    StepperConfig eff = cfg;
    if (std::abs(n * cfg.dt - t_final) > 1e-9 * std::max(1.0, t_final)) eff.dt = t_final / n;
    Stepper st(state.box(), state.variant, p, eff);
    if (observer) observer(state);
    for (long long i = 1; i <= n; ++i) {
        st.step(state);
        if (observer && (i % observe_every == 0 || i == n)) observer(state);
    }
    return state;
}

double default_smoothness(const Box& box) { return box.dim / 2.0 + 1.5; }

namespace {

// Exact single-trig coefficients at wavenumber 1 along one axis.
void add_sin(SpectralField& f, int comp, int axis, double amp) {
    int k[3] = {0, 0, 0};
    k[axis] = 1;
    const std::int64_t ip = flat_index(f.box(), k[0], k[1], k[2]);
    const std::int64_t im = flat_index(f.box(), -k[0], -k[1], -k[2]);
    f.at(comp, ip) += cplx(0.0, -0.5 * amp);
    f.at(comp, im) += cplx(0.0, 0.5 * amp);
}

void add_cos(SpectralField& f, int comp, int axis, double amp) {
    int k[3] = {0, 0, 0};
    k[axis] = 1;
    const std::int64_t ip = flat_index(f.box(), k[0], k[1], k[2]);
    const std::int64_t im = flat_index(f.box(), -k[0], -k[1], -k[2]);
    f.at(comp, ip) += cplx(0.5 * amp, 0.0);
    f.at(comp, im) += cplx(0.5 * amp, 0.0);
}

}  // namespace

SimState make_initial(const InitialSpec& spec, const Box& box, SystemVariant variant,
                      const PhysicalParams& p) {
    p.validate(variant);
    SimState s(variant, box);
    const double smoothness =
        (spec.smoothness > 0.0) ? spec.smoothness : default_smoothness(box);

    if (spec.family == "random_band") {
        const int k_hi = (spec.k_band > 0) ? std::min(spec.k_band, box.dealias_axis_limit())
                                           : box.dealias_axis_limit();
        // decay chosen so the X^s content per shell falls off geometrically
        const double decay_b = smoothness + box.dim / 2.0 + 0.75;
        s.v = leray_project(random_band_field(box, spec.seed * 4 + 0, 1, k_hi, decay_b - 1.0));
        s.B = leray_project(random_band_field(box, spec.seed * 4 + 2, 1, k_hi, decay_b));
        zero_mean_modes(s.v);
        zero_mean_modes(s.B);
        if (uses_maxwell(variant)) {
            s.E = random_band_field(box, spec.seed * 4 + 1, 1, k_hi, decay_b);
            if (variant != SystemVariant::NSM) s.E = leray_project(s.E);
            zero_mean_modes(s.E);
        }
        const double cur = xs_norm(s, smoothness);
        if (cur > 0.0) {
            const double f = spec.amplitude / cur;
            s.v *= f;
            s.E *= f;
            s.B *= f;
        }
    } else if (spec.family == "beltrami") {
        // curl B = -B (d=2) or +B (d=3); helicity -amp^2 vol resp. +3 amp^2 vol
        if (box.dim == 2) {
            add_sin(s.B, 0, 1, spec.amplitude);
            add_cos(s.B, 2, 1, spec.amplitude);
        } else {
            add_sin(s.B, 0, 2, spec.amplitude);
            add_cos(s.B, 0, 1, spec.amplitude);
            add_sin(s.B, 1, 0, spec.amplitude);
            add_cos(s.B, 1, 2, spec.amplitude);
            add_sin(s.B, 2, 1, spec.amplitude);
            add_cos(s.B, 2, 0, spec.amplitude);
        }
    } else if (spec.family == "single_mode") {
        add_cos(s.B, 1, 0, spec.amplitude);  // B = amp cos(x1) e2, solenoidal
    } else {
        throw UnknownFamily("make_initial: unknown family '" + spec.family + "'");
    }

    // consistent initial current
    if (uses_maxwell(variant)) {
        SpectralField B_tot = s.B;
        if (variant == SystemVariant::NSM_GO_STAR && has_background(p))
            B_tot += constant_field(box, p.b_star);
        const double m = box.dealias_radius();
        if (variant == SystemVariant::NSM)
            s.j = solve_ohm_plain(s.v, s.E, B_tot, p, m);
        else
            s.j = solve_ohm_implicit(s.v, s.E, B_tot, p, m).j;
    } else {
        s.j = curl(s.B);
    }
    return s;
}

}  // namespace nsm
