#include "nsm/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "nsm/errors.hpp"

namespace nsm {

namespace {

constexpr char kMagic[8] = {'N', 'S', 'M', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_str(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
double get_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::string get_str(std::istream& is) {
    const std::uint32_t len = get_u32(is);
    if (len > (1u << 20)) throw CheckpointError("checkpoint: unreasonable string length");
    std::string s(len, '\0');
    is.read(s.data(), len);
    return s;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("checkpoint: cannot open for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    put_u32(os, static_cast<std::uint32_t>(box.dim));
    put_u32(os, static_cast<std::uint32_t>(box.n));
    put_f64(os, box.length);
    put_u32(os, static_cast<std::uint32_t>(scalars.size()));
    for (const auto& [name, value] : scalars) {
        put_str(os, name);
        put_f64(os, value);
    }
    put_u32(os, static_cast<std::uint32_t>(fields.size()));
    for (const auto& [name, field] : fields) {
        put_str(os, name);
        os.write(reinterpret_cast<const char*>(field.raw()),
                 static_cast<std::streamsize>(field.raw_size() * sizeof(cplx)));
    }
    if (!os) throw CheckpointError("checkpoint: write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("checkpoint: cannot open for reading: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CheckpointError("checkpoint: bad magic: " + path);
    Checkpoint ck;
    const int dim = static_cast<int>(get_u32(is));
    const int n = static_cast<int>(get_u32(is));
    const double length = get_f64(is);
    ck.box = Box(dim, n, length);
    const std::uint32_t ns = get_u32(is);
    for (std::uint32_t i = 0; i < ns; ++i) {
        std::string name = get_str(is);
        ck.scalars[name] = get_f64(is);
    }
    const std::uint32_t nf = get_u32(is);
    for (std::uint32_t i = 0; i < nf; ++i) {
        std::string name = get_str(is);
        SpectralField f(ck.box);
        is.read(reinterpret_cast<char*>(f.raw()),
                static_cast<std::streamsize>(f.raw_size() * sizeof(cplx)));
        ck.fields.emplace(std::move(name), std::move(f));
    }
    if (!is) throw CheckpointError("checkpoint: truncated payload: " + path);
    return ck;
}

}  // namespace nsm
