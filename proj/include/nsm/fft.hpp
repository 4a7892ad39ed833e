#pragma once

#include "nsm/field.hpp"

namespace nsm {

// Thin FFTW wrapper. Plans are cached per (dim, n, direction) and created
// under a mutex; execution on distinct buffers is safe from multiple threads.
//
// forward: physical -> spectral, includes the 1/n^d normalization, so a mode
// with coefficient a contributes a*exp(i k.x 2pi/L) to the physical field.
// inverse: spectral -> physical, no scaling.
namespace fft {

void forward_c2c(const Box& box, cplx* data);
void inverse_c2c(const Box& box, cplx* data);

}  // namespace fft

// Transform all three components. to_physical discards the imaginary parts
// (they are roundoff for Hermitian input); to_spectral of real data is
// Hermitian to roundoff by construction.
PhysicalField to_physical(const SpectralField& f);
SpectralField to_spectral(const PhysicalField& pf);

}  // namespace nsm
