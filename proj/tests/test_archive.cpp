#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "dynrec/archive.hpp"

using namespace dynrec;
namespace fs = std::filesystem;

namespace {
std::string tmp_path(const char* name) {
    return (fs::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("archive round-trips blocks and metadata bit-exactly") {
    Archive a("test_kind");
    a.meta()["alpha"] = 1.5;
    a.meta()["label"] = "hello";
    const std::vector<double> xs{1.0, -2.5, 3.25, 0.1};
    const std::vector<std::int64_t> is{7, -9, 11};
    a.add_f64("xs", xs, {2, 2});
    a.add_i64("is", is, {3});

    const std::string path = tmp_path("dynrec_archive_test.bin");
    a.save(path);
    const Archive b = Archive::load(path);
    CHECK(b.kind() == "test_kind");
    CHECK(b.meta().at("alpha").get<double>() == 1.5);
    CHECK(b.meta().at("label").get<std::string>() == "hello");
    CHECK(b.f64("xs") == xs);
    CHECK(b.i64("is") == is);
    CHECK(b.shape("xs") == std::vector<std::int64_t>{2, 2});

    // serialized bytes reproduce exactly
    CHECK(a.to_bytes() == b.to_bytes());
    std::remove(path.c_str());
}

TEST_CASE("archive rejects malformed inputs") {
    CHECK_THROWS(Archive::load(tmp_path("dynrec_missing_file.bin")));

    const std::string path = tmp_path("dynrec_bad_magic.bin");
    {
        std::vector<std::uint8_t> junk{'X', 'X', 'X', 'X', 0, 0, 0, 0};
        FILE* f = std::fopen(path.c_str(), "wb");
        REQUIRE(f);
        std::fwrite(junk.data(), 1, junk.size(), f);
        std::fclose(f);
    }
    CHECK_THROWS_WITH_AS(Archive::load(path), doctest::Contains("bad magic"),
                         std::runtime_error);
    std::remove(path.c_str());

    Archive a("k");
    CHECK_THROWS(a.add_f64("bad", {1.0, 2.0}, {3}));
}

TEST_CASE("sha256 matches known vectors") {
    CHECK(sha256_bytes(nullptr, 0) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const char* abc = "abc";
    CHECK(sha256_bytes(reinterpret_cast<const std::uint8_t*>(abc), 3) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
