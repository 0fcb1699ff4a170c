#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "fseg/image.hpp"
#include "fseg/params.hpp"
#include "fseg/rng.hpp"

using namespace fseg;

TEST_CASE("image_max_pixel") {
    Image2D img(2, 2);
    img.data = {0, 10, 20, 5};
    CHECK(image_max_pixel(img) == doctest::Approx(20.0));

    Image2D constant(3, 3, 7.0f);
    CHECK(image_max_pixel(constant) == doctest::Approx(7.0));

    Image2D single(1, 1, 255.0f);
    CHECK(image_max_pixel(single) == doctest::Approx(255.0));

    Image2D empty;
    CHECK_THROWS_AS(image_max_pixel(empty), std::invalid_argument);
}

TEST_CASE("concat_state scales by max and appends the mask") {
    Image2D img(2, 1);
    img.data = {100.0f, 200.0f};
    BinaryMask mask(2, 1);
    mask.data = {1, 0};
    Tensor st = concat_state(img, mask);
    REQUIRE(st.shape == std::vector<int>{2, 1, 2});
    CHECK(st.data[0] == doctest::Approx(0.5));
    CHECK(st.data[1] == doctest::Approx(1.0));
    CHECK(st.data[2] == doctest::Approx(1.0)); // mask channel
    CHECK(st.data[3] == doctest::Approx(0.0));

    SUBCASE("blank mask gives an all-zero channel 1") {
        BinaryMask blank(2, 1);
        Tensor s2 = concat_state(img, blank);
        CHECK(s2.data[2] == 0.0f);
        CHECK(s2.data[3] == 0.0f);
    }
    SUBCASE("all-zero image: channel 0 all zeros, no division by zero") {
        Image2D zeros(2, 1, 0.0f);
        Tensor s3 = concat_state(zeros, mask);
        CHECK(s3.data[0] == 0.0f);
        CHECK(s3.data[1] == 0.0f);
        for (float v : s3.data) CHECK(std::isfinite(v));
    }
    SUBCASE("shape mismatch is an error") {
        BinaryMask wrong(3, 1);
        CHECK_THROWS_AS(concat_state(img, wrong), std::invalid_argument);
    }
}

TEST_CASE("concat_state never produces NaN for finite inputs") {
    RngStream rng(99, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const int w = 1 + static_cast<int>(rng.uniform_int(16));
        const int h = 1 + static_cast<int>(rng.uniform_int(16));
        Image2D img(w, h);
        BinaryMask mask(w, h);
        for (auto& v : img.data) v = static_cast<float>(rng.uniform() * 255.0);
        for (auto& v : mask.data) v = static_cast<uint8_t>(rng.uniform_int(2));
        Tensor st = concat_state(img, mask);
        for (float v : st.data) REQUIRE(std::isfinite(v));
    }
}

TEST_CASE("param slice and assemble") {
    SUBCASE("single segment is the identity") {
        ParameterVector pv = param_assemble({{"only", {1.0f, 2.0f, 3.0f}}});
        CHECK(param_slice(pv, "only") == std::vector<float>{1.0f, 2.0f, 3.0f});
    }
    SUBCASE("two segments concatenate then slice back") {
        ParameterVector pv = param_assemble({{"a", {1, 2}}, {"b", {3, 4, 5}}});
        CHECK(pv.values.size() == 5);
        CHECK(param_slice(pv, "a") == std::vector<float>{1, 2});
        CHECK(param_slice(pv, "b") == std::vector<float>{3, 4, 5});
    }
    SUBCASE("overlapping layout violates the invariant") {
        ParameterVector pv;
        pv.values = {1, 2, 3};
        pv.layout = {{"a", 0, 2}, {"b", 1, 2}};
        CHECK_THROWS_AS(validate_layout(pv), std::invalid_argument);
    }
    SUBCASE("unknown segment name") {
        ParameterVector pv = param_assemble({{"a", {1}}});
        CHECK_THROWS_AS(param_slice(pv, "nope"), std::invalid_argument);
    }
}

TEST_CASE("param round-trip is bit-exact for arbitrary layouts") {
    RngStream rng(7, 3);
    for (int trial = 0; trial < 40; ++trial) {
        const int nseg = 1 + static_cast<int>(rng.uniform_int(6));
        std::vector<std::pair<std::string, std::vector<float>>> segs;
        for (int s = 0; s < nseg; ++s) {
            std::vector<float> vals(1 + rng.uniform_int(17));
            for (auto& v : vals)
                v = static_cast<float>(rng.gaussian() * std::pow(10.0, rng.uniform() * 6 - 3));
            segs.emplace_back("seg" + std::to_string(s), std::move(vals));
        }
        ParameterVector pv = param_assemble(segs);
        validate_layout(pv);
        for (int s = 0; s < nseg; ++s) {
            const auto back = param_slice(pv, "seg" + std::to_string(s));
            REQUIRE(back.size() == segs[static_cast<size_t>(s)].second.size());
            for (size_t i = 0; i < back.size(); ++i) {
                // bit-for-bit, not approximately
                REQUIRE(std::memcmp(&back[i], &segs[static_cast<size_t>(s)].second[i], 4) == 0);
            }
        }
        // blob round-trip
        ParameterVector pv2 = pv;
        for (auto& v : pv2.values) v = 0.0f;
        params_from_blob(pv2, params_to_blob(pv));
        REQUIRE(pv2.values == pv.values);
    }
}

TEST_CASE("rng streams reproduce and separate") {
    RngStream a(42, 1), b(42, 1);
    for (int i = 0; i < 10000; ++i) REQUIRE(a.next_u32() == b.next_u32());

    // different stream ids diverge
    RngStream c(42, 1), d(42, 2);
    int same = 0;
    for (int i = 0; i < 1000; ++i) same += c.next_u32() == d.next_u32();
    CHECK(same < 5);

    // uniform() stays in [0,1); gaussian is finite
    RngStream e(1, 0);
    for (int i = 0; i < 1000; ++i) {
        const double u = e.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        REQUIRE(std::isfinite(e.gaussian()));
    }
}

TEST_CASE("uniform_int is unbiased enough and in range") {
    RngStream rng(5, 5);
    std::vector<int> counts(10, 0);
    for (int i = 0; i < 100000; ++i) counts[rng.uniform_int(10)]++;
    for (int c : counts) {
        CHECK(c > 9000);
        CHECK(c < 11000);
    }
}
