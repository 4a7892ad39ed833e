#include "nsm/spectral_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace nsm {

namespace {

// Inclusive radius compare on squared physical frequency, tolerant to the
// roundoff of fs^2*|k|^2 at the boundary.
inline bool inside_radius(double xi2, double m2) { return xi2 <= m2 * (1.0 + 1e-12); }

inline double xi2_of(const Box& b, int k1, int k2, int k3) {
    const double fs = b.freq_scale();
    return fs * fs * static_cast<double>(k1 * k1 + k2 * k2 + k3 * k3);
}

}  // namespace

double hermitian_asymmetry(const SpectralField& f) {
    const Box& b = f.box();
    double worst = 0.0;
    for_each_mode(b, [&](std::int64_t flat, int k1, int k2, int k3) {
        const std::int64_t neg = flat_index(b, -k1, -k2, -k3);
        for (int c = 0; c < 3; ++c) {
            const cplx d = f.at(c, flat) - std::conj(f.at(c, neg));
            worst = std::max(worst, std::abs(d));
        }
    });
    return worst;
}

SpectralField truncate(const SpectralField& f, double m) {
    if (m < 0) return f;
    SpectralField out(f.box());
    const double m2 = m * m;
    for_each_mode(f.box(), [&](std::int64_t flat, int k1, int k2, int k3) {
        if (inside_radius(xi2_of(f.box(), k1, k2, k3), m2)) {
            for (int c = 0; c < 3; ++c) out.at(c, flat) = f.at(c, flat);
        }
    });
    return out;
}

SpectralField embed(const SpectralField& f, const Box& target) {
    const Box& b = f.box();
    if (target.dim != b.dim || target.n < b.n || target.length != b.length)
        throw BoxMismatch("embed: target must be a finer grid of the same box");
    SpectralField out(target);
    // Even grids carry an unpaired k = +n/2 plane (wavenumber convention
    // maps index n/2 to +n/2); odd grids have none.
    const int nyq = (b.n % 2 == 0) ? b.n / 2 : b.n;
    for_each_mode(b, [&](std::int64_t flat, int k1, int k2, int k3) {
        if (b.n == target.n) {
            for (int c = 0; c < 3; ++c) out.at(c, flat) = f.at(c, flat);
            return;
        }
        if (k1 == nyq || k2 == nyq || k3 == nyq) {
            for (int c = 0; c < 3; ++c)
                if (f.at(c, flat) != cplx(0.0, 0.0))
                    throw BoxMismatch("embed: source carries Nyquist-plane content");
            return;
        }
        const std::int64_t tflat = flat_index(target, k1, k2, k3);
        for (int c = 0; c < 3; ++c) out.at(c, tflat) = f.at(c, flat);
    });
    return out;
}

SpectralField frac_laplacian(const SpectralField& f, double s) {
    if (s < 0.0) {
        const double scale = std::max(1.0, l2_norm(f));
        if (mean_mode_magnitude(f) > 1e-12 * scale)
            throw NegativePowerOnMeanMode("frac_laplacian: s < 0 on a field with nonzero mean");
    }
    SpectralField out(f.box());
    for_each_mode(f.box(), [&](std::int64_t flat, int k1, int k2, int k3) {
        const double xi2 = xi2_of(f.box(), k1, k2, k3);
        double w;
        if (k1 == 0 && k2 == 0 && k3 == 0) {
            w = (s == 0.0) ? 1.0 : 0.0;
        } else {
            w = (s == 0.0) ? 1.0 : std::pow(xi2, s);
        }
        for (int c = 0; c < 3; ++c) out.at(c, flat) = w * f.at(c, flat);
    });
    return out;
}

SpectralField leray_project(const SpectralField& f) {
    const Box& b = f.box();
    SpectralField out = f;
    for_each_mode(b, [&](std::int64_t flat, int k1, int k2, int k3) {
        if (b.dim == 2) k3 = 0;
        const double kk = static_cast<double>(k1 * k1 + k2 * k2 + k3 * k3);
        if (kk == 0.0) return;
        if (b.dim == 2) {
            const cplx kdot = static_cast<double>(k1) * out.at(0, flat) +
                              static_cast<double>(k2) * out.at(1, flat);
            out.at(0, flat) -= (k1 / kk) * kdot;
            out.at(1, flat) -= (k2 / kk) * kdot;
        } else {
            const cplx kdot = static_cast<double>(k1) * out.at(0, flat) +
                              static_cast<double>(k2) * out.at(1, flat) +
                              static_cast<double>(k3) * out.at(2, flat);
            out.at(0, flat) -= (k1 / kk) * kdot;
            out.at(1, flat) -= (k2 / kk) * kdot;
            out.at(2, flat) -= (k3 / kk) * kdot;
        }
    });
    return out;
}

SpectralField curl(const SpectralField& f) {
    const Box& b = f.box();
    const double fs = b.freq_scale();
    SpectralField out(b);
    const cplx iu(0.0, 1.0);
    for_each_mode(b, [&](std::int64_t flat, int k1, int k2, int k3) {
        const double x1 = fs * k1, x2 = fs * k2, x3 = fs * k3;
        const cplx f1 = f.at(0, flat), f2 = f.at(1, flat), f3 = f.at(2, flat);
        out.at(0, flat) = iu * (x2 * f3 - x3 * f2);
        out.at(1, flat) = iu * (x3 * f1 - x1 * f3);
        out.at(2, flat) = iu * (x1 * f2 - x2 * f1);
    });
    return out;
}

void apply_dealias_mask(SpectralField& f) {
    const Box& b = f.box();
    const int lim = b.dealias_axis_limit();
    for_each_mode(b, [&](std::int64_t flat, int k1, int k2, int k3) {
        if (std::abs(k1) > lim || std::abs(k2) > lim || std::abs(k3) > lim) {
            for (int c = 0; c < 3; ++c) f.at(c, flat) = 0.0;
        }
    });
}

namespace {

PhysicalField masked_physical(const SpectralField& f) {
    SpectralField g = f;
    apply_dealias_mask(g);
    return to_physical(g);
}

}  // namespace

SpectralField cross(const SpectralField& f, const SpectralField& g) {
    require_same_box(f.box(), g.box(), "cross");
    PhysicalField a = masked_physical(f);
    PhysicalField b = masked_physical(g);
    PhysicalField w(f.box());
    const std::int64_t m = f.size();
    for (std::int64_t i = 0; i < m; ++i) {
        const double a1 = a.comp[0][i], a2 = a.comp[1][i], a3 = a.comp[2][i];
        const double b1 = b.comp[0][i], b2 = b.comp[1][i], b3 = b.comp[2][i];
        w.comp[0][i] = a2 * b3 - a3 * b2;
        w.comp[1][i] = a3 * b1 - a1 * b3;
        w.comp[2][i] = a1 * b2 - a2 * b1;
    }
    SpectralField out = to_spectral(w);
    apply_dealias_mask(out);
    return out;
}

SpectralField hadamard(const SpectralField& f, const SpectralField& g) {
    require_same_box(f.box(), g.box(), "hadamard");
    PhysicalField a = masked_physical(f);
    PhysicalField b = masked_physical(g);
    PhysicalField w(f.box());
    const std::int64_t m = f.size();
    for (int c = 0; c < 3; ++c)
        for (std::int64_t i = 0; i < m; ++i) w.comp[c][i] = a.comp[c][i] * b.comp[c][i];
    SpectralField out = to_spectral(w);
    apply_dealias_mask(out);
    return out;
}

SpectralField advect(const SpectralField& v, const SpectralField& u) {
    require_same_box(v.box(), u.box(), "advect");
    const Box& box = v.box();
    const double fs = box.freq_scale();
    const std::int64_t m = box.modes();
    PhysicalField vp = masked_physical(v);

    SpectralField um = u;
    apply_dealias_mask(um);

    PhysicalField w(box);
    std::vector<cplx> buf(static_cast<std::size_t>(m));
    const cplx iu(0.0, 1.0);
    for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < box.dim; ++i) {
            // d_i u_j in physical space
            for_each_mode(box, [&](std::int64_t flat, int k1, int k2, int k3) {
                const int ki = (i == 0) ? k1 : (i == 1) ? k2 : k3;
                buf[flat] = iu * (fs * ki) * um.at(j, flat);
            });
            fft::inverse_c2c(box, buf.data());
            for (std::int64_t p = 0; p < m; ++p)
                w.comp[j][p] += vp.comp[i][p] * buf[p].real();
        }
    }
    SpectralField out = to_spectral(w);
    apply_dealias_mask(out);
    return out;
}

double sobolev_norm(const SpectralField& f, double s, bool homogeneous) {
    const Box& b = f.box();
    double acc = 0.0;
    for_each_mode(b, [&](std::int64_t flat, int k1, int k2, int k3) {
        const double xi2 = xi2_of(b, k1, k2, k3);
        double w;
        if (homogeneous) {
            if (xi2 == 0.0) return;
            w = std::pow(xi2, s);
        } else {
            w = std::pow(1.0 + xi2, s);
        }
        double mag2 = 0.0;
        for (int c = 0; c < 3; ++c) mag2 += std::norm(f.at(c, flat));
        acc += w * mag2;
    });
    return std::sqrt(acc * b.vol());
}

double l2_norm(const SpectralField& f) {
    double acc = 0.0;
    const std::size_t n = f.raw_size();
    const cplx* d = f.raw();
    for (std::size_t i = 0; i < n; ++i) acc += std::norm(d[i]);
    return std::sqrt(acc * f.box().vol());
}

double inner_l2(const SpectralField& f, const SpectralField& g) {
    require_same_box(f.box(), g.box(), "inner_l2");
    double acc = 0.0;
    const std::size_t n = f.raw_size();
    const cplx* a = f.raw();
    const cplx* b = g.raw();
    for (std::size_t i = 0; i < n; ++i) acc += (a[i] * std::conj(b[i])).real();
    return acc * f.box().vol();
}

double lp_norm_physical(const SpectralField& f, double p) {
    PhysicalField pf = to_physical(f);
    const std::int64_t m = f.size();
    if (std::isinf(p)) {
        double mx = 0.0;
        for (std::int64_t i = 0; i < m; ++i) {
            const double s = pf.comp[0][i] * pf.comp[0][i] + pf.comp[1][i] * pf.comp[1][i] +
                             pf.comp[2][i] * pf.comp[2][i];
            mx = std::max(mx, s);
        }
        return std::sqrt(mx);
    }
    const double dv = f.box().vol() / static_cast<double>(m);
    double acc = 0.0;
    for (std::int64_t i = 0; i < m; ++i) {
        const double s = std::sqrt(pf.comp[0][i] * pf.comp[0][i] + pf.comp[1][i] * pf.comp[1][i] +
                                   pf.comp[2][i] * pf.comp[2][i]);
        acc += std::pow(s, p) * dv;
    }
    return std::pow(acc, 1.0 / p);
}

double sup_magnitude(const SpectralField& f) {
    return lp_norm_physical(f, std::numeric_limits<double>::infinity());
}

double divergence_l2(const SpectralField& f) {
    const Box& b = f.box();
    const double fs = b.freq_scale();
    double acc = 0.0;
    for_each_mode(b, [&](std::int64_t flat, int k1, int k2, int k3) {
        const cplx d = fs * (static_cast<double>(k1) * f.at(0, flat) +
                             static_cast<double>(k2) * f.at(1, flat) +
                             static_cast<double>(k3) * f.at(2, flat));
        acc += std::norm(d);
    });
    return std::sqrt(acc * b.vol());
}

double mean_mode_magnitude(const SpectralField& f) {
    double mx = 0.0;
    for (int c = 0; c < 3; ++c) mx = std::max(mx, std::abs(f.at(c, 0)));
    return mx;
}

void zero_mean_modes(SpectralField& f) {
    for (int c = 0; c < 3; ++c) f.at(c, 0) = 0.0;
}

SpectralField random_band_field(const Box& box, std::uint64_t seed, int k_lo, int k_hi,
                                double decay) {
    SpectralField f(box);
    std::mt19937_64 rng(seed);
    // Explicit Box-Muller on 53-bit uniforms; std::normal_distribution's draw
    // pattern is implementation-defined and we want reproducible streams.
    auto uniform = [&]() { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    auto gauss = [&]() {
        const double u = uniform(), v = uniform();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(kTwoPi * v);
    };
    for_each_mode(box, [&](std::int64_t flat, int k1, int k2, int k3) {
        // Canonical half-lattice representative; the mirror gets the conjugate.
        const bool canonical = (k3 > 0) || (k3 == 0 && k2 > 0) || (k3 == 0 && k2 == 0 && k1 > 0);
        if (!canonical) return;
        const double kk = std::sqrt(static_cast<double>(k1 * k1 + k2 * k2 + k3 * k3));
        if (kk < k_lo || kk > k_hi) return;
        const double amp = std::pow(kk, -decay);
        const std::int64_t neg = flat_index(box, -k1, -k2, -k3);
        for (int c = 0; c < 3; ++c) {
            const cplx a(amp * gauss(), amp * gauss());
            f.at(c, flat) = a;
            f.at(c, neg) = std::conj(a);
        }
    });
    return f;
}

}  // namespace nsm
