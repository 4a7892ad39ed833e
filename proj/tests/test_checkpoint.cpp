#include <cstdio>
#include <cstring>

#include "doctest.h"
#include "nsm/checkpoint.hpp"
#include "nsm/spectral_ops.hpp"
#include "test_util.hpp"

using namespace nsm;
using namespace nsm::testutil;

TEST_CASE("checkpoint round-trip is bit-exact") {
    Box box(3, 8);
    Checkpoint ck;
    ck.box = box;
    ck.fields.emplace("v", random_band_field(box, 3, 1, 2, 1.0));
    ck.fields.emplace("B", random_band_field(box, 4, 1, 2, 0.5));
    ck.scalars["t"] = 0.12345678901234567;
    ck.scalars["kappa"] = 1e-3;

    const std::string path = "ckpt_test.bin";
    ck.save(path);
    Checkpoint back = Checkpoint::load(path);

    CHECK(back.box == box);
    CHECK(back.scalars.size() == 2);
    // Bit-exact: compare raw bytes of every payload.
    CHECK(std::memcmp(&back.scalars["t"], &ck.scalars["t"], sizeof(double)) == 0);
    for (const auto& [name, field] : ck.fields) {
        auto it = back.fields.find(name);
        REQUIRE(it != back.fields.end());
        CHECK(std::memcmp(it->second.raw(), field.raw(), field.raw_size() * sizeof(cplx)) == 0);
    }

    // Saving the loaded copy reproduces the file byte for byte.
    const std::string path2 = "ckpt_test2.bin";
    back.save(path2);
    auto slurp = [](const std::string& p) {
        std::FILE* fp = std::fopen(p.c_str(), "rb");
        REQUIRE(fp != nullptr);
        std::string s;
        char buf[4096];
        std::size_t n;
        while ((n = std::fread(buf, 1, sizeof(buf), fp)) > 0) s.append(buf, n);
        std::fclose(fp);
        return s;
    };
    CHECK(slurp(path) == slurp(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("checkpoint rejects garbage") {
    const std::string path = "ckpt_garbage.bin";
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    REQUIRE(fp != nullptr);
    std::fputs("not a checkpoint", fp);
    std::fclose(fp);
    CHECK_THROWS_AS(Checkpoint::load(path), CheckpointError);
    CHECK_THROWS_AS(Checkpoint::load("does_not_exist.bin"), CheckpointError);
    std::remove(path.c_str());
}
