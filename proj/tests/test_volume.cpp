#include <catch2/catch_amalgamated.hpp>

#include "gliomkit/rng.hpp"
#include "gliomkit/volume.hpp"

using namespace gliomkit;

namespace {

Volume3D make_vol(Dims3 d, std::initializer_list<float> vals) {
    Volume3D v(d, Spacing3{});
    REQUIRE(v.data.size() == vals.size());
    std::copy(vals.begin(), vals.end(), v.data.begin());
    return v;
}

MaskVolume full_mask(Dims3 d) { return MaskVolume(d, Spacing3{}, 1); }

} // namespace

TEST_CASE("normalize: two masked values standardize to -1/+1") {
    auto v = make_vol({2, 1, 1}, {2.0f, 4.0f});
    auto out = normalize_zero_mean_unit_std(v, full_mask({2, 1, 1}));
    CHECK(out.data[0] == Catch::Approx(-1.0));
    CHECK(out.data[1] == Catch::Approx(1.0));
}

TEST_CASE("normalize: constant masked intensities are a degenerate-mask error") {
    auto v = make_vol({2, 1, 1}, {3.0f, 3.0f});
    CHECK_THROWS_AS(normalize_zero_mean_unit_std(v, full_mask({2, 1, 1})), value_error);
}

TEST_CASE("normalize: population statistics over {1..5}") {
    auto v = make_vol({5, 1, 1}, {1, 2, 3, 4, 5});
    auto out = normalize_zero_mean_unit_std(v, full_mask({5, 1, 1}));
    double mean = 0, ss = 0;
    for (float x : out.data) mean += x;
    mean /= 5.0;
    for (float x : out.data) ss += (x - mean) * (x - mean);
    const double pop_std = std::sqrt(ss / 5.0);
    CHECK(std::abs(mean) < 1e-6);
    CHECK(pop_std == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("normalize: out-of-mask voxels become zero and result is idempotent") {
    Volume3D v({4, 1, 1}, Spacing3{});
    v.data = {5.0f, 1.0f, 9.0f, 7.0f};
    MaskVolume mask({4, 1, 1}, Spacing3{}, 1);
    mask.data[0] = 0;
    auto out = normalize_zero_mean_unit_std(v, mask);
    CHECK(out.data[0] == 0.0f);
    auto twice = normalize_zero_mean_unit_std(out, mask);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        CHECK(std::abs(twice.data[i] - out.data[i]) < 1e-5);
}

TEST_CASE("brain_mask: all-zero single modality gives empty mask") {
    ModalityStack stack;
    stack.subject_id = "s";
    stack.add("flair", Volume3D({2, 2, 1}, Spacing3{}, 0.0f));
    CHECK(mask_count(brain_mask(stack)) == 0);
}

TEST_CASE("brain_mask: union over modalities") {
    ModalityStack stack;
    Volume3D a({2, 2, 1}, Spacing3{}, 0.0f);
    Volume3D b({2, 2, 1}, Spacing3{}, 0.0f);
    b.data[2] = 1.5f;
    stack.add("t1", a);
    stack.add("t2", b);
    auto mask = brain_mask(stack);
    CHECK(mask.data[2] == 1);
    CHECK(mask_count(mask) == 1);

    // adding a modality can only grow the mask
    Volume3D c({2, 2, 1}, Spacing3{}, 0.0f);
    c.data[0] = 2.0f;
    stack.add("flair", c);
    auto mask2 = brain_mask(stack);
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        if (mask.data[i]) CHECK(mask2.data[i]);
}

TEST_CASE("brain_mask: 2x2x1 volume data [0,1,0,2] keeps voxels 1 and 3") {
    ModalityStack stack;
    stack.add("flair", make_vol({2, 2, 1}, {0, 1, 0, 2}));
    auto mask = brain_mask(stack);
    CHECK(mask.data[0] == 0);
    CHECK(mask.data[1] == 1);
    CHECK(mask.data[2] == 0);
    CHECK(mask.data[3] == 1);
}

TEST_CASE("flip_lr: reverses x and is an involution") {
    auto v = make_vol({3, 1, 1}, {1, 2, 3});
    auto f = flip_lr(v);
    CHECK(f.data == std::vector<float>{3, 2, 1});
    auto ff = flip_lr(f);
    CHECK(ff.data == v.data);
}

TEST_CASE("flip_lr: involution on a random volume, multiset preserved") {
    Rng rng(5);
    Volume3D v({5, 4, 3}, Spacing3{});
    for (auto& x : v.data) x = static_cast<float>(rng.normal());
    auto ff = flip_lr(flip_lr(v));
    CHECK(ff.data == v.data);

    auto f = flip_lr(v);
    auto a = v.data, b = f.data;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
}

TEST_CASE("flip_lr on labels preserves per-label voxel counts") {
    Rng rng(6);
    LabelVolume labels({6, 5, 2}, Spacing3{}, 0);
    const std::uint8_t vals[4] = {0, 1, 2, 4};
    for (auto& x : labels.data) x = vals[rng.uniform_index(4)];
    auto f = flip_lr(labels);
    for (std::uint8_t lbl : {0, 1, 2, 4}) {
        auto count = [&](const LabelVolume& lv) {
            return std::count(lv.data.begin(), lv.data.end(), lbl);
        };
        CHECK(count(labels) == count(f));
    }
}

TEST_CASE("label validation rejects any value outside {0,1,2,4}") {
    LabelVolume labels({2, 2, 1}, Spacing3{}, 0);
    labels.data[2] = 3;
    CHECK_THROWS_WITH(validate_labels(labels), Catch::Matchers::ContainsSubstring("(0,1,0)"));
}

TEST_CASE("modality stack rejects mismatched dims and unknown names") {
    ModalityStack stack;
    stack.add("t1", Volume3D({2, 2, 2}, Spacing3{}, 1.0f));
    CHECK_THROWS_AS(stack.add("t2", Volume3D({2, 2, 1}, Spacing3{}, 1.0f)), shape_error);
    CHECK_THROWS_AS(stack.add("t1rho", Volume3D({2, 2, 2}, Spacing3{}, 1.0f)), value_error);
    CHECK_THROWS_AS(stack.modality("flair"), value_error);
}

TEST_CASE("volume invariants: dims and spacing validated") {
    CHECK_THROWS_AS(Volume3D({0, 2, 2}, Spacing3{}), shape_error);
    CHECK_THROWS_AS(Volume3D({2, 2, 2}, Spacing3{1.0, 0.0, 1.0}), value_error);
}
