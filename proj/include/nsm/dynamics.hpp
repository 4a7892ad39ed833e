#pragma once

#include <functional>
#include <memory>

#include "nsm/ohm.hpp"
#include "nsm/state.hpp"

namespace nsm {

struct StepperConfig {
    double dt = 1e-3;
    double truncation_radius = -1.0;  // < 0: the box's dealias radius
    double cfl_safety = 0.9;          // fraction of the RK4 stability span
    OhmSolveOptions ohm;
};

// Instantaneous right-hand side (time derivatives) plus the current and
// dissipation rates that belong to the same instant.
struct RhsEval {
    SpectralField dv, dE, dB;
    SpectralField j;
    double diss_v = 0.0;
    double diss_j = 0.0;
    int ohm_iterations = 0;
};

// Full right-hand side of the variant's system at the given state.
RhsEval rhs(const SimState& state, const PhysicalParams& p, const StepperConfig& cfg);

// Exact solution operator of the linear block over a fixed span: fractional
// velocity dissipation, the damped Maxwell rotation with the sigma c^2
// relaxation of E (Maxwell-coupled variants), or the magnetic dissipation
// (MHD variants). One application advances (v, E, B) by span() exactly when
// the nonlinear remainder is absent, so exp(A)^k = exp(kA) is testable.
class LinearPropagator {
public:
    LinearPropagator(const Box& box, SystemVariant variant, const PhysicalParams& p,
                     double span);
    void apply(SpectralField& v, SpectralField& E, SpectralField& B) const;
    double span() const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

// Time stepper: integrating-factor RK4. The linear block (fractional
// dissipation, Maxwell rotation, sigma c^2 E relaxation) is applied through an
// exact per-mode propagator, so only the advective/coupling remainder limits
// the step size. Tables are cached per (box, params, dt).
class Stepper {
public:
    Stepper(const Box& box, SystemVariant variant, const PhysicalParams& p,
            const StepperConfig& cfg);
    ~Stepper();
    Stepper(Stepper&&) noexcept;
    Stepper& operator=(Stepper&&) noexcept;

    // Advance by cfg.dt. Throws CflViolation when the explicit remainder's
    // rate estimate exceeds the RK4 stability span.
    void step(SimState& state);

    double radius() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Convenience single step (builds a stepper; prefer Stepper for runs).
void step(SimState& state, const PhysicalParams& p, const StepperConfig& cfg);

using Observer = std::function<void(const SimState&)>;

// Fixed-step run to t_final. The observer fires at t = 0, every
// observe_every steps, and at the final step. If t_final is not an integer
// multiple of dt the step is adjusted to the nearest divisor.
SimState simulate(SimState state, const PhysicalParams& p, const StepperConfig& cfg,
                  double t_final, int observe_every, const Observer& observer);

// --- initial data -----------------------------------------------------------

struct InitialSpec {
    std::string family = "random_band";  // random_band | beltrami | single_mode
    double amplitude = 0.1;   // X^s norm (random_band) or pointwise amplitude
    std::uint64_t seed = 1;
    double smoothness = 0.0;  // s index for the X^s normalization; 0 -> d/2 + 1.5
    int k_band = 0;           // largest |k| of the random band; 0 -> dealias limit
};

// Deterministic in (spec, box, variant). Fields are solenoidal (E too for the
// solenoidal variants), mean-free, dealias-band-limited; j is initialized
// consistently with the variant.
SimState make_initial(const InitialSpec& spec, const Box& box, SystemVariant variant,
                      const PhysicalParams& p);

double default_smoothness(const Box& box);

}  // namespace nsm
