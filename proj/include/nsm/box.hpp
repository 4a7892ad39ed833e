#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "nsm/errors.hpp"

namespace nsm {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Periodic box [0, L)^d sampled on n points per axis. Fields on this grid
// always carry three components regardless of d (d = 2 is the two-and-a-half
// dimensional setting: fields depend on (x1, x2) only).
struct Box {
    int dim = 2;          // 2 or 3
    int n = 0;            // points per axis, power of two
    double length = kTwoPi;

    Box() = default;
    Box(int dim_, int n_, double length_ = kTwoPi) : dim(dim_), n(n_), length(length_) {
        if (dim != 2 && dim != 3) throw ConfigError("box dim must be 2 or 3");
        if (n < 4 || (n & (n - 1)) != 0) throw ConfigError("box n must be a power of two >= 4");
        if (!(length > 0.0)) throw ConfigError("box length must be positive");
    }

    // Number of spectral/physical points per component.
    std::int64_t modes() const {
        std::int64_t m = 1;
        for (int a = 0; a < dim; ++a) m *= n;
        return m;
    }

    double vol() const { return std::pow(length, dim); }

    // Fundamental frequency 2*pi/L; mode k carries physical frequency k*freq_scale().
    double freq_scale() const { return kTwoPi / length; }

    // Largest per-axis integer wavenumber kept by the 2/3 dealiasing rule.
    int dealias_axis_limit() const { return n / 3; }

    // Largest truncation radius (in physical frequency) compatible with dealiasing.
    double dealias_radius() const { return dealias_axis_limit() * freq_scale(); }

    // Signed integer wavenumber for array index i along one axis.
    int wavenumber(int i) const { return (i <= n / 2) ? i : i - n; }

    bool operator==(const Box& o) const {
        return dim == o.dim && n == o.n && length == o.length;
    }
    bool operator!=(const Box& o) const { return !(*this == o); }
};

inline void require_same_box(const Box& a, const Box& b, const char* where) {
    if (a != b) throw BoxMismatch(std::string(where) + ": fields live on different boxes");
}

}  // namespace nsm
