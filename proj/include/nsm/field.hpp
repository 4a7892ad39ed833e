#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "nsm/box.hpp"

namespace nsm {

using cplx = std::complex<double>;

// Fourier coefficients of a real three-component field on a Box.
// Storage is component-major; within a component the layout is the FFT layout
// (axis x1 fastest, frequencies 0..n/2,-n/2+1..-1 per axis). Coefficients obey
// the Hermitian symmetry a(-k) = conj(a(k)) whenever the physical field is real.
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(const Box& box)
        : box_(box), data_(3 * static_cast<std::size_t>(box.modes())) {}

    static SpectralField zero(const Box& box) { return SpectralField(box); }

    const Box& box() const { return box_; }
    std::int64_t size() const { return box_.modes(); }

    cplx* comp(int c) { return data_.data() + c * size(); }
    const cplx* comp(int c) const { return data_.data() + c * size(); }
    cplx& at(int c, std::int64_t idx) { return data_[c * size() + idx]; }
    const cplx& at(int c, std::int64_t idx) const { return data_[c * size() + idx]; }

    cplx* raw() { return data_.data(); }
    const cplx* raw() const { return data_.data(); }
    std::size_t raw_size() const { return data_.size(); }

    SpectralField& operator+=(const SpectralField& o) {
        require_same_box(box_, o.box_, "operator+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        require_same_box(box_, o.box_, "operator-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    SpectralField& operator*=(double s) {
        for (auto& v : data_) v *= s;
        return *this;
    }
    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

    // this += s * o
    void axpy(double s, const SpectralField& o) {
        require_same_box(box_, o.box_, "axpy");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
    }

private:
    Box box_;
    std::vector<cplx> data_;
};

// Real grid values of a three-component field.
struct PhysicalField {
    Box box;
    std::array<std::vector<double>, 3> comp;

    explicit PhysicalField(const Box& b) : box(b) {
        for (auto& c : comp) c.assign(static_cast<std::size_t>(b.modes()), 0.0);
    }
};

// Visit every mode: f(flat_index, k1, k2, k3) with integer wavenumbers
// (k3 = 0 when dim = 2). Iteration order is fixed, which keeps every
// accumulation in the library bit-reproducible.
template <class F>
inline void for_each_mode(const Box& b, F&& f) {
    const int n = b.n;
    if (b.dim == 2) {
        std::int64_t flat = 0;
        for (int i2 = 0; i2 < n; ++i2) {
            const int k2 = b.wavenumber(i2);
            for (int i1 = 0; i1 < n; ++i1, ++flat) f(flat, b.wavenumber(i1), k2, 0);
        }
    } else {
        std::int64_t flat = 0;
        for (int i3 = 0; i3 < n; ++i3) {
            const int k3 = b.wavenumber(i3);
            for (int i2 = 0; i2 < n; ++i2) {
                const int k2 = b.wavenumber(i2);
                for (int i1 = 0; i1 < n; ++i1, ++flat) f(flat, b.wavenumber(i1), k2, k3);
            }
        }
    }
}

// Flat index of integer wavenumbers (k1,k2,k3), wrapping negatives.
inline std::int64_t flat_index(const Box& b, int k1, int k2, int k3 = 0) {
    auto wrap = [&](int k) { return k >= 0 ? k : k + b.n; };
    std::int64_t idx = wrap(k1);
    idx += static_cast<std::int64_t>(wrap(k2)) * b.n;
    if (b.dim == 3) idx += static_cast<std::int64_t>(wrap(k3)) * b.n * b.n;
    return idx;
}

// Largest deviation from a(-k) = conj(a(k)) over all modes and components.
double hermitian_asymmetry(const SpectralField& f);

}  // namespace nsm
