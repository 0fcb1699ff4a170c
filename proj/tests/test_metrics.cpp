#include <doctest.h>

#include "fseg/metrics.hpp"
#include "fseg/rng.hpp"

using namespace fseg;

namespace {

BinaryMask mask_of(int w, int h, std::vector<uint8_t> data) {
    BinaryMask m(w, h);
    m.data = std::move(data);
    return m;
}

} // namespace

TEST_CASE("confusion counting") {
    // 4x2, pred == gt with 3 foreground pixels
    const BinaryMask gt = mask_of(4, 2, {1, 1, 1, 0, 0, 0, 0, 0});
    ConfusionCounts c = confusion(gt, gt);
    CHECK(c.tp == 3);
    CHECK(c.tn == 5);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
    CHECK(c.total() == 8);

    const BinaryMask zeros = mask_of(2, 2, {0, 0, 0, 0});
    const BinaryMask ones = mask_of(2, 2, {1, 1, 1, 1});
    c = confusion(zeros, ones);
    CHECK(c.fn == 4);
    CHECK(c.tp + c.fp + c.tn == 0);
    c = confusion(ones, zeros);
    CHECK(c.fp == 4);

    CHECK_THROWS_AS(confusion(zeros, mask_of(4, 1, {0, 0, 0, 0})), std::invalid_argument);
}

TEST_CASE("dsc including empty conventions") {
    CHECK(dsc(ConfusionCounts{2, 1, 1, 4}) == doctest::Approx(4.0 / 6.0));
    const BinaryMask m = mask_of(2, 1, {1, 0});
    CHECK(dsc(m, m) == doctest::Approx(1.0));
    const BinaryMask empty = mask_of(2, 1, {0, 0});
    CHECK(dsc(empty, empty) == doctest::Approx(1.0)); // both empty: 1.0 by convention
}

TEST_CASE("sensitivity and specificity") {
    CHECK(sensitivity(ConfusionCounts{3, 0, 1, 0}) == doctest::Approx(0.75));
    CHECK(specificity(ConfusionCounts{0, 1, 0, 9}) == doctest::Approx(0.9));
    // gt entirely foreground: tn = fp = 0 -> specificity 1.0 by convention
    CHECK(specificity(ConfusionCounts{4, 0, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("mae") {
    const BinaryMask gt = mask_of(2, 2, {1, 0, 1, 0});
    CHECK(mae(gt, gt) == doctest::Approx(0.0));
    const BinaryMask flipped = mask_of(2, 2, {0, 1, 0, 1});
    CHECK(mae(flipped, gt) == doctest::Approx(1.0));
    const BinaryMask one_off = mask_of(2, 2, {1, 0, 0, 0});
    CHECK(mae(one_off, gt) == doctest::Approx(0.25));
    CHECK_THROWS_AS(mae(mask_of(1, 2, {0, 0}), gt), std::invalid_argument);
}

TEST_CASE("dilate") {
    const BinaryMask m = mask_of(3, 3, {0, 0, 0, 0, 1, 0, 0, 0, 0});
    CHECK(dilate(m, 0) == m);
    const BinaryMask d = dilate(m, 1);
    for (uint8_t v : d.data) CHECK(v == 1); // full 3x3 element fills the grid

    const BinaryMask ones = mask_of(2, 2, {1, 1, 1, 1});
    CHECK(dilate(ones, 1) == ones); // fixed point
}

TEST_CASE("dilate is monotone") {
    RngStream rng(21, 0);
    for (int trial = 0; trial < 20; ++trial) {
        BinaryMask m(8, 8);
        for (auto& v : m.data) v = static_cast<uint8_t>(rng.uniform_int(2));
        const BinaryMask d = dilate(m, 1);
        for (size_t i = 0; i < m.data.size(); ++i)
            if (m.data[i]) REQUIRE(d.data[i] == 1);
    }
}

TEST_CASE("dilate is idempotent only at fixed points") {
    // a lone center pixel keeps growing until it fills the grid
    BinaryMask center(5, 5);
    center.at(2, 2) = 1;
    const BinaryMask once = dilate(center, 1);
    const BinaryMask twice = dilate(once, 1);
    CHECK_FALSE(once == twice);
    const BinaryMask full(5, 5, 1);
    CHECK(dilate(full, 1) == full);
    CHECK(dilate(BinaryMask(5, 5), 1) == BinaryMask(5, 5)); // empty is fixed too
}

// The naive per-pixel loop oracle, kept independent of the implementation.
namespace {
struct OracleResult {
    double dsc, sens, spec, mae;
};
OracleResult oracle_masks(const BinaryMask& pred, const BinaryMask& gt) {
    double tp = 0, fp = 0, fn = 0, tn = 0, absdiff = 0;
    for (int y = 0; y < gt.height; ++y) {
        for (int x = 0; x < gt.width; ++x) {
            const int p = pred.at(x, y), g = gt.at(x, y);
            tp += (p == 1 && g == 1);
            fp += (p == 1 && g == 0);
            fn += (p == 0 && g == 1);
            tn += (p == 0 && g == 0);
            absdiff += std::abs(p - g);
        }
    }
    OracleResult r{};
    r.dsc = (2 * tp + fp + fn) == 0 ? 1.0 : 2 * tp / (2 * tp + fp + fn);
    r.sens = (tp + fn) == 0 ? 1.0 : tp / (tp + fn);
    r.spec = (tn + fp) == 0 ? 1.0 : tn / (tn + fp);
    r.mae = absdiff / (gt.width * gt.height);
    return r;
}
} // namespace

TEST_CASE("metrics equal the naive loop oracle on 100 random 32x32 pairs") {
    RngStream rng(1234, 9);
    for (int trial = 0; trial < 100; ++trial) {
        BinaryMask pred(32, 32), gt(32, 32);
        // include empty and full masks now and then
        const int mode = static_cast<int>(rng.uniform_int(8));
        for (auto& v : pred.data)
            v = mode == 0 ? 0 : mode == 1 ? 1 : static_cast<uint8_t>(rng.uniform_int(2));
        for (auto& v : gt.data)
            v = mode == 2 ? 0 : mode == 3 ? 1 : static_cast<uint8_t>(rng.uniform_int(2));

        const OracleResult expect = oracle_masks(pred, gt);
        const ConfusionCounts c = confusion(pred, gt);
        REQUIRE(dsc(c) == expect.dsc);
        REQUIRE(sensitivity(c) == expect.sens);
        REQUIRE(specificity(c) == expect.spec);
        REQUIRE(mae(pred, gt) == expect.mae);
    }
}

TEST_CASE("dsc is symmetric; sensitivity and specificity are not") {
    RngStream rng(55, 1);
    for (int trial = 0; trial < 20; ++trial) {
        BinaryMask a(16, 16), b(16, 16);
        for (auto& v : a.data) v = static_cast<uint8_t>(rng.uniform_int(2));
        for (auto& v : b.data) v = static_cast<uint8_t>(rng.uniform_int(2));
        REQUIRE(dsc(a, b) == dsc(b, a));
        const ConfusionCounts ab = confusion(a, b), ba = confusion(b, a);
        REQUIRE(ab.fp == ba.fn);
    }
    // over-predicting mask: perfect sensitivity one way, not the other
    const BinaryMask over = mask_of(4, 1, {1, 1, 0, 0});
    const BinaryMask target = mask_of(4, 1, {1, 0, 0, 0});
    CHECK(sensitivity(confusion(over, target)) == doctest::Approx(1.0));
    CHECK(sensitivity(confusion(target, over)) == doctest::Approx(0.5));
    CHECK(specificity(confusion(over, target)) == doctest::Approx(2.0 / 3.0));
    CHECK(specificity(confusion(target, over)) == doctest::Approx(1.0));
}
