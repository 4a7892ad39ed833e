#pragma once

#include "nsm/field.hpp"
#include "nsm/params.hpp"

namespace nsm {

// Full simulation state. j is kept consistent with (v, E, B) under the
// variant's Ohm law (or j = curl B for the MHD variants) after every step.
// The dissipation integrals are advanced by the stepper with the same RK4
// quadrature as the fields, so energy-balance residuals inherit the
// integrator's order instead of the observer cadence.
struct SimState {
    SystemVariant variant = SystemVariant::NSM_GO;
    double t = 0.0;
    SpectralField v, E, B, j;
    double diss_v_integral = 0.0;  // int_0^t nu ||Lambda^alpha v||^2 dt
    double diss_j_integral = 0.0;  // int_0^t of the ohmic/magnetic dissipation
    int last_ohm_iterations = 0;

    SimState() = default;
    SimState(SystemVariant var, const Box& box)
        : variant(var), v(box), E(box), B(box), j(box) {}

    const Box& box() const { return v.box(); }
};

// X^s norm of the state triple: ||v||_{H^{s-1}} + ||(E, B)||_{H^s} in the
// sum-of-squares sense. E is excluded for the MHD variants.
double xs_norm(const SimState& s, double smoothness);

}  // namespace nsm
