#pragma once

#include <vector>

#include "nsm/params.hpp"
#include "nsm/spectral_ops.hpp"

namespace nsm {

// Pointwise Hall matrix M(kappa, B) with M j = j + kappa (j x B).
// det M = kappa^2 |B|^2 + 1 >= 1, so the pointwise solve never degenerates.
struct HallMatrixPoint {
    double kappa = 0.0;
    std::array<double, 3> B{0.0, 0.0, 0.0};

    std::array<double, 3> apply(const std::array<double, 3>& j) const;
    std::array<double, 3> solve(const std::array<double, 3>& r) const;  // M^-1 r, adjugate form
    double det() const;
};

// Pointwise application of M(kappa, B(x)) across the grid (fields dealiased).
SpectralField hall_matrix_apply(const SpectralField& j, const SpectralField& B, double kappa);
// Pointwise M^-1 across the grid.
SpectralField hall_matrix_solve(const SpectralField& r, const SpectralField& B, double kappa);

struct OhmSolveResult {
    SpectralField j;
    int iterations = 0;
    double residual = 0.0;              // final relative L2 residual
    double contraction = 0.0;           // heuristic kappa * sup|B|
    std::vector<double> residual_history;
};

// Solenoidal generalized Ohm law: find div-free j with
//   j + kappa P T_m (j x B) = sigma (c E + P T_m (v x B)),
// by fixed-point iteration seeded with the pointwise Hall solve. Throws
// NoConvergence if the relative residual does not reach opts.tol.
OhmSolveResult solve_ohm_implicit(const SpectralField& v, const SpectralField& E,
                                  const SpectralField& B, const PhysicalParams& p, double m,
                                  const OhmSolveOptions& opts = {});

// Lagged form used by the approximation hierarchy: explicit
//   j = sigma (c E + P T_m (v x B_lagged)) - kappa P T_m (j_lag x B).
// B enters the Hall term at the current level, B_lagged the cross term.
SpectralField solve_ohm_lagged(const SpectralField& v, const SpectralField& E,
                               const SpectralField& B_lagged, const SpectralField& j_lag,
                               const SpectralField& B, const PhysicalParams& p, double m);

// Plain (unprojected) Ohm law j = sigma (c E + T_m (v x B)).
SpectralField solve_ohm_plain(const SpectralField& v, const SpectralField& E,
                              const SpectralField& B, const PhysicalParams& p, double m);

}  // namespace nsm
