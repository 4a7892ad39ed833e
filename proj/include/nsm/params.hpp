#pragma once

#include <array>
#include <string>

#include "nsm/errors.hpp"

namespace nsm {

// Which system the dynamics integrates.
//  NSM:         electron fluid with plain Ohm law (E unconstrained).
//  NSM_SO:      solenoidal Ohm law, div j = div E = 0.
//  NSM_GO:      generalized Ohm law with Hall term.
//  HMHD:        Hall magnetohydrodynamics (j = curl B, no E equation).
//  MHD:         standard magnetohydrodynamics.
//  NSM_GO_STAR: perturbation of NSM_GO around a constant magnetic background,
//               alpha = 0 with plain velocity damping -nu v.
enum class SystemVariant { NSM, NSM_SO, NSM_GO, HMHD, MHD, NSM_GO_STAR };

std::string to_string(SystemVariant v);
SystemVariant variant_from_string(const std::string& s);

// The Maxwell-coupled variants evolve (v, E, B); the MHD ones only (v, B).
inline bool uses_maxwell(SystemVariant v) {
    return v == SystemVariant::NSM || v == SystemVariant::NSM_SO ||
           v == SystemVariant::NSM_GO || v == SystemVariant::NSM_GO_STAR;
}

struct PhysicalParams {
    double nu = 1.0;     // viscosity
    double sigma = 1.0;  // conductivity
    double c = 1.0;      // light speed
    double kappa = 0.0;  // Hall coefficient
    double alpha = 1.0;  // velocity dissipation power (-Laplace)^alpha
    double beta = 1.0;   // magnetic dissipation power, H-MHD/MHD only
    std::array<double, 3> b_star{0.0, 0.0, 0.0};  // constant background field

    void validate(SystemVariant v) const {
        if (sigma <= 0.0) throw ConfigError("params: sigma must be positive");
        if (c <= 0.0) throw ConfigError("params: c must be positive");
        if (nu < 0.0) throw ConfigError("params: nu must be nonnegative");
        if (kappa < 0.0) throw ConfigError("params: kappa must be nonnegative");
        if (alpha < 0.0 || beta < 0.0) throw ConfigError("params: powers must be nonnegative");
        if (v == SystemVariant::NSM_GO_STAR && alpha != 0.0)
            throw ConfigError("params: the perturbation system requires alpha = 0");
    }
};

enum class OhmMode { Implicit, Lagged };

struct OhmSolveOptions {
    double tol = 1e-12;    // relative L2 residual target
    int max_iterations = 200;
    OhmMode mode = OhmMode::Implicit;
};

}  // namespace nsm
