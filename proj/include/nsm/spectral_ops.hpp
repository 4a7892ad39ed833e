#pragma once

#include <cstdint>

#include "nsm/fft.hpp"
#include "nsm/field.hpp"

namespace nsm {

// --- linear spectral operators ------------------------------------------

// Sharp Fourier ball cutoff: keeps modes with |xi| <= m (physical frequency),
// zeroes the rest. m < 0 keeps everything.
SpectralField truncate(const SpectralField& f, double m);

// Spectral zero-padding embedding into a finer grid: coefficients are copied
// at matching integer wavevectors, so every spectral norm is preserved
// exactly. Requires the same dim and length and target.n >= f.box.n; the
// source must carry no Nyquist-plane content (any dealiased field qualifies),
// since a lone k = n/2 plane has no Hermitian-consistent image on a finer
// grid. Throws BoxMismatch otherwise.
SpectralField embed(const SpectralField& f, const Box& target);

// Fractional Laplacian (-Laplace)^s: multiplier |xi|^(2s). The mean mode is
// preserved when s = 0 (identity convention) and mapped to zero when s > 0.
// s < 0 requires a vanishing mean mode.
SpectralField frac_laplacian(const SpectralField& f, double s);

// Leray projection onto divergence-free fields. For dim = 2 only the in-plane
// components (1,2) are projected; component 3 is divergence-irrelevant since
// nothing depends on x3. The mean mode is untouched.
SpectralField leray_project(const SpectralField& f);

// curl f via i xi x f(k); for dim = 2 the wavevector is embedded as (k1,k2,0).
SpectralField curl(const SpectralField& f);

// --- dealiased quadratic products ----------------------------------------

// Pointwise cross product f x g computed on the grid with 2/3-rule dealiasing
// (inputs and output masked to per-axis wavenumbers <= n/3).
SpectralField cross(const SpectralField& f, const SpectralField& g);

// Componentwise (Hadamard) product with the same dealiasing.
SpectralField hadamard(const SpectralField& f, const SpectralField& g);

// Advection (v . grad) u with the same dealiasing.
SpectralField advect(const SpectralField& v, const SpectralField& u);

// Zero every mode with a per-axis wavenumber above n/3 (2/3 rule).
void apply_dealias_mask(SpectralField& f);

// --- norms and reductions --------------------------------------------------

// Sobolev norm; homogeneous = true skips the mean mode and uses |xi|^(2s)
// weights, otherwise (1+|xi|^2)^s. Components enter as a sum of squares.
double sobolev_norm(const SpectralField& f, double s, bool homogeneous);

double l2_norm(const SpectralField& f);

// L2 inner product of the physical fields, via Parseval.
double inner_l2(const SpectralField& f, const SpectralField& g);

// L^p norm of the pointwise vector magnitude |f(x)|; p = 1, 2, or inf > 0.
double lp_norm_physical(const SpectralField& f, double p);

// max_x |f(x)| (vector magnitude).
double sup_magnitude(const SpectralField& f);

// ||div f||_L2.
double divergence_l2(const SpectralField& f);

// Largest mean-mode magnitude across components.
double mean_mode_magnitude(const SpectralField& f);

void zero_mean_modes(SpectralField& f);

// --- random band-limited fields --------------------------------------------

// Hermitian Gaussian field supported on integer wavenumbers k_lo <= |k| <= k_hi
// with amplitude envelope |k|^(-decay). Deterministic in (box, seed).
SpectralField random_band_field(const Box& box, std::uint64_t seed, int k_lo, int k_hi,
                                double decay);

}  // namespace nsm
