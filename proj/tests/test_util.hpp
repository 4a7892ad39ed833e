#pragma once

#include <array>
#include <cmath>
#include <functional>

#include "nsm/spectral_ops.hpp"

namespace nsm::testutil {

using Formula = std::function<std::array<double, 3>(double, double, double)>;

// Build a spectral field by sampling an analytic formula on the grid. This is
// the physical-side construction path, independent of any spectral operator.
inline SpectralField field_from_formula(const Box& box, const Formula& f) {
    PhysicalField pf(box);
    const double h = box.length / box.n;
    std::int64_t idx = 0;
    if (box.dim == 2) {
        for (int i2 = 0; i2 < box.n; ++i2)
            for (int i1 = 0; i1 < box.n; ++i1, ++idx) {
                const auto v = f(h * i1, h * i2, 0.0);
                for (int c = 0; c < 3; ++c) pf.comp[c][idx] = v[c];
            }
    } else {
        for (int i3 = 0; i3 < box.n; ++i3)
            for (int i2 = 0; i2 < box.n; ++i2)
                for (int i1 = 0; i1 < box.n; ++i1, ++idx) {
                    const auto v = f(h * i1, h * i2, h * i3);
                    for (int c = 0; c < 3; ++c) pf.comp[c][idx] = v[c];
                }
    }
    return to_spectral(pf);
}

// Direct quadrature of integral(f . g dx) from the formulas alone; exact for
// band-limited trigonometric data. Never touches the spectral code paths.
inline double quadrature_inner(const Box& box, const Formula& f, const Formula& g) {
    const double h = box.length / box.n;
    const double dv = box.vol() / static_cast<double>(box.modes());
    double acc = 0.0;
    if (box.dim == 2) {
        for (int i2 = 0; i2 < box.n; ++i2)
            for (int i1 = 0; i1 < box.n; ++i1) {
                const auto a = f(h * i1, h * i2, 0.0);
                const auto b = g(h * i1, h * i2, 0.0);
                acc += (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) * dv;
            }
    } else {
        for (int i3 = 0; i3 < box.n; ++i3)
            for (int i2 = 0; i2 < box.n; ++i2)
                for (int i1 = 0; i1 < box.n; ++i1) {
                    const auto a = f(h * i1, h * i2, h * i3);
                    const auto b = g(h * i1, h * i2, h * i3);
                    acc += (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) * dv;
                }
    }
    return acc;
}

// Divergence-free, mean-free random field limited to the dealiased band.
inline SpectralField random_solenoidal(const Box& box, std::uint64_t seed, int k_hi = 0,
                                       double decay = 2.0) {
    if (k_hi <= 0) k_hi = box.dealias_axis_limit();
    SpectralField f = random_band_field(box, seed, 1, k_hi, decay);
    f = leray_project(f);
    zero_mean_modes(f);
    return f;
}

inline double rel_diff(double a, double b) {
    const double den = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / den;
}

// max_k |f(k) - g(k)| over all modes/components.
inline double max_coeff_diff(const SpectralField& f, const SpectralField& g) {
    double mx = 0.0;
    for (std::size_t i = 0; i < f.raw_size(); ++i)
        mx = std::max(mx, std::abs(f.raw()[i] - g.raw()[i]));
    return mx;
}

}  // namespace nsm::testutil
