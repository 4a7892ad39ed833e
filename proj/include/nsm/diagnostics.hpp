#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nsm/state.hpp"

namespace nsm {

// Periodic vector potential A with curl A = B for a mean-free solenoidal B.
// Throws NonzeroMeanMode / NonSolenoidal when B fails those premises (checked
// relative to its L2 size).
SpectralField vector_potential(const SpectralField& B);

// <A, B> with A the vector potential.
double magnetic_helicity(const SpectralField& B);

double cross_helicity(const SpectralField& v, const SpectralField& B);

// 0.5 (||v||^2 + ||E||^2 + ||B||^2); E is dropped for the MHD variants.
double total_energy(const SimState& s);

// Exact instantaneous d/dt of the magnetic helicity under the variant:
// -(2/sigma) <j, B> for the Maxwell systems, -(2/sigma) <(-Lap)^beta A, B>
// for the MHD variants.
double helicity_rate(const SimState& s, const PhysicalParams& p);

// One extra norm column. field: v | E | B | j | vEB | vEj (root sum of
// squares). kind: l2 | sobolev (index = s, homogeneous flag applies) |
// lp (index = p, infinity when index <= 0; single fields only).
struct NormSpec {
    std::string field = "B";
    std::string kind = "l2";
    double index = 0.0;
    bool homogeneous = false;
    std::string label;  // column name; derived from the spec when empty

    std::string key() const;
};

double evaluate_norm(const SimState& s, const NormSpec& spec);

struct DiagnosticsRecord {
    double t = 0.0;
    double energy = 0.0;
    double dissipation_v = 0.0;  // instantaneous nu ||Lambda^alpha v||^2
    double dissipation_j = 0.0;  // instantaneous ohmic/magnetic rate
    double diss_v_integral = 0.0;
    double diss_j_integral = 0.0;
    double helicity = 0.0;
    double cross_helicity = 0.0;
    double helicity_rate = 0.0;
    double div_v = 0.0, div_E = 0.0, div_B = 0.0, div_j = 0.0;
    int ohm_iterations = 0;
    std::map<std::string, double> norms;
};

DiagnosticsRecord record(const SimState& s, const PhysicalParams& p,
                         const std::vector<NormSpec>& extra = {});

// Discrete energy balance E(t1) + int_t0^t1 (diss_v + diss_j) - E(t0),
// normalized by max(E(t0), eps). Uses the stepper-accumulated integrals, so
// the residual inherits the integrator's order.
double energy_balance_residual(const SimState& before, const SimState& after);

// Fallback when only sampled records exist: trapezoid quadrature of the
// instantaneous rates between the first and last record.
double energy_balance_residual_trapezoid(const std::vector<DiagnosticsRecord>& series);

// Deterministic writers ("%.17g" doubles). The CSV carries a versioned
// "# schema" header; extra norm columns follow the fixed ones in key order.
void write_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& series);
void write_jsonl(std::ostream& os, const std::vector<DiagnosticsRecord>& series);

std::string format_g17(double x);

}  // namespace nsm
