#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>

#include "gliomkit/nifti.hpp"
#include "gliomkit/rng.hpp"

using namespace gliomkit;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) {
    return (fs::path(GK_FIXTURE_DIR) / name).string();
}

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("read: independently generated 4x4x2 float32 file") {
    const Volume3D v = nifti::read_volume(fixture("minimal_4x4x2.nii"));
    CHECK(v.dims == Dims3{4, 4, 2});
    REQUIRE(v.data.size() == 32);
    for (int i = 0; i < 32; ++i) CHECK(v.data[static_cast<std::size_t>(i)] == static_cast<float>(i));
    CHECK(v.spacing == Spacing3{1.0, 1.0, 1.0});
}

TEST_CASE("read: gzip-compressed copy is identical") {
    const Volume3D a = nifti::read_volume(fixture("minimal_4x4x2.nii"));
    const Volume3D b = nifti::read_volume(fixture("minimal_4x4x2.nii.gz"));
    CHECK(a.dims == b.dims);
    CHECK(a.data == b.data);
}

TEST_CASE("read: byte-swapped (big-endian) file") {
    const Volume3D v = nifti::read_volume(fixture("minimal_4x4x2_be.nii"));
    REQUIRE(v.data.size() == 32);
    for (int i = 0; i < 32; ++i) CHECK(v.data[static_cast<std::size_t>(i)] == static_cast<float>(i));
}

TEST_CASE("read: label file with a 3 fails naming the voxel") {
    CHECK_THROWS_WITH(nifti::read_labels(fixture("labels_bad3.nii")),
                      Catch::Matchers::ContainsSubstring("3") &&
                          Catch::Matchers::ContainsSubstring("(0,1,0)"));
    const LabelVolume good = nifti::read_labels(fixture("labels_good.nii"));
    CHECK(good.data == std::vector<std::uint8_t>{0, 1, 2, 4});
}

TEST_CASE("read: scl_slope and scl_inter applied") {
    const Volume3D v = nifti::read_volume(fixture("scaled_int16.nii"));
    CHECK(v.data == std::vector<float>{10.0f, 11.0f, 12.0f, 7.0f});
}

TEST_CASE("read: pixdim spacing recovered") {
    const Volume3D v = nifti::read_volume(fixture("spacing_05_1_2.nii"));
    CHECK(v.spacing.sx == Catch::Approx(0.5));
    CHECK(v.spacing.sy == Catch::Approx(1.0));
    CHECK(v.spacing.sz == Catch::Approx(2.0));
}

TEST_CASE("read: vox_offset beyond 352 is respected") {
    const Volume3D v = nifti::read_volume(fixture("vox_offset_400.nii"));
    CHECK(v.data == std::vector<float>{0.0f, 1.0f, 2.0f, 3.0f});
}

TEST_CASE("read: malformed inputs produce named format errors") {
    CHECK_THROWS_WITH(nifti::read_volume(fixture("bad_magic.nii")),
                      Catch::Matchers::ContainsSubstring("magic"));
    CHECK_THROWS_WITH(nifti::read_volume(fixture("unsupported_dtype.nii")),
                      Catch::Matchers::ContainsSubstring("datatype"));
    CHECK_THROWS_AS(nifti::read_volume("/nonexistent/file.nii"), io_error);
}

TEST_CASE("write/read round trip: float volume bitwise, both .nii and .nii.gz") {
    Rng rng(11);
    Volume3D v({4, 4, 2}, Spacing3{}, 0.0f);
    for (auto& x : v.data) x = static_cast<float>(rng.normal());
    for (const char* name : {"rt.nii", "rt.nii.gz"}) {
        const std::string path = temp_path(name);
        nifti::write_volume(v, path);
        const Volume3D back = nifti::read_volume(path);
        CHECK(back.dims == v.dims);
        CHECK(back.data == v.data);
        std::remove(path.c_str());
    }
}

TEST_CASE("write/read round trip: all-zero label volume") {
    LabelVolume labels({3, 3, 3}, Spacing3{}, 0);
    const std::string path = temp_path("rt_labels.nii.gz");
    nifti::write_labels(labels, path);
    const LabelVolume back = nifti::read_labels(path);
    CHECK(back.data == labels.data);
    std::remove(path.c_str());
}

TEST_CASE("write/read round trip: spacing (0.5, 1.0, 2.0) within 1e-6") {
    Volume3D v({2, 2, 2}, Spacing3{0.5, 1.0, 2.0}, 1.0f);
    const std::string path = temp_path("rt_spacing.nii");
    nifti::write_volume(v, path);
    const Volume3D back = nifti::read_volume(path);
    CHECK(std::abs(back.spacing.sx - 0.5) < 1e-6);
    CHECK(std::abs(back.spacing.sy - 1.0) < 1e-6);
    CHECK(std::abs(back.spacing.sz - 2.0) < 1e-6);
    std::remove(path.c_str());
}

TEST_CASE("write/read round trip: labels {0,1,2,4} exact") {
    Rng rng(13);
    LabelVolume labels({5, 4, 3}, Spacing3{}, 0);
    const std::uint8_t vals[4] = {0, 1, 2, 4};
    for (auto& x : labels.data) x = vals[rng.uniform_index(4)];
    const std::string path = temp_path("rt_labels2.nii.gz");
    nifti::write_labels(labels, path);
    CHECK(nifti::read_labels(path).data == labels.data);
    std::remove(path.c_str());
}
