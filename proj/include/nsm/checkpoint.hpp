#pragma once

#include <map>
#include <string>

#include "nsm/field.hpp"

namespace nsm {

// Named spectral fields plus scalar metadata on one box. The binary layout
// stores raw IEEE doubles, so save/load round-trips are bit-exact.
struct Checkpoint {
    Box box;
    std::map<std::string, SpectralField> fields;
    std::map<std::string, double> scalars;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

}  // namespace nsm
