#include "nsm/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace nsm {
namespace {

std::mutex g_plan_mutex;

// Key: (dim, n, fftw sign). Plans are created in-place with FFTW_UNALIGNED so
// they can be re-executed on any caller buffer via the new-array interface.
using PlanKey = std::tuple<int, int, int>;

fftw_plan get_plan(const Box& box, int sign) {
    static std::map<PlanKey, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    const PlanKey key{box.dim, box.n, sign};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::vector<cplx> scratch(static_cast<std::size_t>(box.modes()));
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = nullptr;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (box.dim == 2) {
        plan = fftw_plan_dft_2d(box.n, box.n, buf, buf, sign, flags);
    } else {
        plan = fftw_plan_dft_3d(box.n, box.n, box.n, buf, buf, sign, flags);
    }
    cache.emplace(key, plan);
    return plan;
}

}  // namespace

namespace fft {

void forward_c2c(const Box& box, cplx* data) {
    fftw_plan plan = get_plan(box, FFTW_FORWARD);
    auto* buf = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, buf, buf);
    const double scale = 1.0 / static_cast<double>(box.modes());
    const std::int64_t m = box.modes();
    for (std::int64_t i = 0; i < m; ++i) data[i] *= scale;
}

void inverse_c2c(const Box& box, cplx* data) {
    fftw_plan plan = get_plan(box, FFTW_BACKWARD);
    auto* buf = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, buf, buf);
}

}  // namespace fft

PhysicalField to_physical(const SpectralField& f) {
    PhysicalField pf(f.box());
    const std::int64_t m = f.size();
    std::vector<cplx> buf(static_cast<std::size_t>(m));
    for (int c = 0; c < 3; ++c) {
        std::copy(f.comp(c), f.comp(c) + m, buf.begin());
        fft::inverse_c2c(f.box(), buf.data());
        for (std::int64_t i = 0; i < m; ++i) pf.comp[c][i] = buf[i].real();
    }
    return pf;
}

SpectralField to_spectral(const PhysicalField& pf) {
    SpectralField f(pf.box);
    const std::int64_t m = f.size();
    std::vector<cplx> buf(static_cast<std::size_t>(m));
    for (int c = 0; c < 3; ++c) {
        for (std::int64_t i = 0; i < m; ++i) buf[i] = cplx(pf.comp[c][i], 0.0);
        fft::forward_c2c(pf.box, buf.data());
        std::copy(buf.begin(), buf.end(), f.comp(c));
    }
    return f;
}

}  // namespace nsm
