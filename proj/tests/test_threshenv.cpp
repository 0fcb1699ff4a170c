#include <doctest.h>

#include <cmath>

#include "fseg/rng.hpp"
#include "fseg/threshenv.hpp"

using namespace fseg;

namespace {

Image2D image_of(int w, int h, std::vector<float> data) {
    Image2D img(w, h);
    img.data = std::move(data);
    return img;
}

BinaryMask mask_of(int w, int h, std::vector<uint8_t> data) {
    BinaryMask m(w, h);
    m.data = std::move(data);
    return m;
}

} // namespace

TEST_CASE("compute_thresholds follows the level formula") {
    SUBCASE("max_p=200, levels (25,10) -> (150, 120)") {
        const ThresholdPair p = compute_thresholds(200.0f, {25, 10});
        CHECK(p.th_upper == doctest::Approx(150.0).epsilon(1e-12));
        CHECK(p.th_lower == doctest::Approx(120.0).epsilon(1e-12));
    }
    SUBCASE("level 0 is exactly max_p/2") {
        const ThresholdPair p = compute_thresholds(123.0f, {0, 0});
        CHECK(p.th_upper == doctest::Approx(61.5).epsilon(1e-12));
        CHECK(p.th_lower == doctest::Approx(61.5).epsilon(1e-12));
    }
    SUBCASE("max_p=255, upper level 49 -> 252.45") {
        const ThresholdPair p = compute_thresholds(255.0f, {49, 0});
        CHECK(p.th_upper == doctest::Approx(252.45).epsilon(1e-9));
    }
    SUBCASE("pair normalizes by swap when upper < lower") {
        const ThresholdPair p = compute_thresholds(200.0f, {10, 25});
        CHECK(p.th_upper == doctest::Approx(150.0));
        CHECK(p.th_lower == doctest::Approx(120.0));
    }
    SUBCASE("non-positive max_p is an error") {
        CHECK_THROWS_AS(compute_thresholds(0.0f, {1, 1}), std::invalid_argument);
        CHECK_THROWS_AS(compute_thresholds(-1.0f, {1, 1}), std::invalid_argument);
    }
}

TEST_CASE("threshold_segment applies an inclusive band") {
    const Image2D img = image_of(2, 2, {100, 120, 150, 160});
    const BinaryMask m = threshold_segment(img, {150.0, 120.0});
    CHECK(m.data == std::vector<uint8_t>{0, 1, 1, 0});

    SUBCASE("everything below the band -> empty mask") {
        const BinaryMask all0 = threshold_segment(img, {500.0, 400.0});
        for (uint8_t v : all0.data) CHECK(v == 0);
    }
    SUBCASE("degenerate band selects exact matches") {
        const BinaryMask eq = threshold_segment(img, {120.0, 120.0});
        CHECK(eq.data == std::vector<uint8_t>{0, 1, 0, 0});
    }
}

TEST_CASE("reward_exp matches high-precision evaluation") {
    CHECK(reward_exp(1.0, 5.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(reward_exp(0.0, 5.0) == doctest::Approx(0.0).epsilon(1e-12));
    // frozen from independent high-precision evaluation of (e^{k d}-1)/(e^k-1)
    CHECK(reward_exp(0.5, 5.0) == doctest::Approx(0.07585818002124355).epsilon(1e-12));
    CHECK(reward_exp(0.8, 5.0) == doctest::Approx(0.3635913534411692).epsilon(1e-12));
}

TEST_CASE("reward gates on plain-gt DSC and scores on dilated gt") {
    const RewardConfig cfg; // k=5, gate=0.7, dilation 1
    SUBCASE("perfect match passes the gate and lands in (0,1]") {
        const BinaryMask gt = mask_of(3, 3, {0, 0, 0, 0, 1, 0, 0, 0, 0});
        const double r = reward(gt, gt, cfg);
        CHECK(r > 0.0);
        CHECK(r <= 1.0);
    }
    SUBCASE("mask disjoint from the dilated gt -> -1") {
        BinaryMask gt(8, 8);
        gt.at(0, 0) = 1;
        BinaryMask far(8, 8);
        far.at(7, 7) = 1; // beyond one dilation step
        CHECK(reward(far, gt, cfg) == doctest::Approx(-1.0));
    }
    SUBCASE("gate failure subtracts one") {
        // gate dsc below 0.7 but dilated dsc positive: reward = rexp - 1 < 0
        BinaryMask gt(8, 1);
        gt.at(0, 0) = 1;
        BinaryMask pred(8, 1);
        pred.at(1, 0) = 1; // misses gt, hits its dilation
        const double d_gate = dsc(pred, gt);
        CHECK(d_gate == doctest::Approx(0.0));
        const double d_rexp = dsc(pred, dilate(gt, 1));
        const double r = reward(pred, gt, cfg);
        CHECK(r == doctest::Approx(reward_exp(d_rexp, cfg.k) - 1.0));
    }
}

TEST_CASE("env reset and step mechanics") {
    const Image2D img = image_of(2, 2, {10, 120, 180, 200});
    const BinaryMask gt = mask_of(2, 2, {0, 0, 1, 1});
    const RewardConfig cfg;

    EnvState s0 = env_reset(img, gt);
    CHECK(s0.step_index == 0);
    for (uint8_t v : s0.mask.data) CHECK(v == 0); // blank mask

    StepResult r1 = env_step(s0, gt, {49, 20}, cfg);
    CHECK(r1.state.step_index == 1);
    CHECK_FALSE(r1.done);
    // the new mask replaces the observation
    CHECK(r1.state.mask == threshold_segment(img, compute_thresholds(200.0f, {49, 20})));

    StepResult r2 = env_step(r1.state, gt, {49, 20}, cfg);
    StepResult r3 = env_step(r2.state, gt, {49, 20}, cfg);
    CHECK(r3.done);
    CHECK(r3.state.step_index == 3);
    CHECK_THROWS_AS(env_step(r3.state, gt, {0, 0}, cfg), std::logic_error);

    SUBCASE("env_step is pure: identical inputs give identical outputs") {
        const StepResult a = env_step(s0, gt, {30, 10}, cfg);
        const StepResult b = env_step(s0, gt, {30, 10}, cfg);
        CHECK(a.state.mask == b.state.mask);
        CHECK(a.reward == b.reward);
    }
    SUBCASE("all-zero images are rejected") {
        const Image2D zeros(2, 2, 0.0f);
        CHECK_THROWS_AS(env_reset(zeros, gt), std::invalid_argument);
    }
}

TEST_CASE("combine_masks is a pixel-wise union") {
    const BinaryMask a = mask_of(3, 1, {1, 0, 0});
    const BinaryMask b = mask_of(3, 1, {0, 1, 0});
    const BinaryMask c = mask_of(3, 1, {0, 0, 1});
    CHECK(combine_masks({a, a, a}) == a); // idempotent
    CHECK(combine_masks({a, b, c}).data == std::vector<uint8_t>{1, 1, 1});
    const BinaryMask blank(3, 1);
    CHECK(combine_masks({a, blank, blank}) == a); // union identity element
}

TEST_CASE("brute_force_best equals an independent double-loop oracle") {
    // a 16x16 'phantom' with three intensity bands
    RngStream rng(321, 7);
    Image2D img(16, 16);
    BinaryMask gt(16, 16);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            const double noise = rng.gaussian() * 15.0;
            double base = 30.0;
            if (x > 10) {
                base = 200.0;
                gt.at(x, y) = 1;
            } else if (x > 6) {
                base = 120.0;
            }
            img.at(x, y) = static_cast<float>(std::clamp(base + noise, 0.0, 255.0));
        }
    }

    // independent reimplementation: recompute thresholds and dice inline
    const float max_p = *std::max_element(img.data.begin(), img.data.end());
    int best_u = 0, best_l = 0;
    double best = -1.0;
    for (int u = 0; u < 50; ++u) {
        for (int l = 0; l < 50; ++l) {
            const double mn = max_p / 2.0, v = (max_p - mn) / 50.0;
            double hi = mn + v * u, lo = mn + v * l;
            if (lo > hi) std::swap(lo, hi);
            double tp = 0, fp = 0, fn = 0;
            for (size_t i = 0; i < img.data.size(); ++i) {
                const bool inband = img.data[i] >= lo && img.data[i] <= hi;
                tp += inband && gt.data[i];
                fp += inband && !gt.data[i];
                fn += !inband && gt.data[i];
            }
            const double d = (2 * tp + fp + fn) == 0 ? 1.0 : 2 * tp / (2 * tp + fp + fn);
            if (d > best) {
                best = d;
                best_u = u;
                best_l = l;
            }
        }
    }

    const auto [levels, d] = brute_force_best(img, gt);
    CHECK(levels.level_upper == best_u);
    CHECK(levels.level_lower == best_l);
    CHECK(d == doctest::Approx(best).epsilon(1e-12));

    SUBCASE("oracle beats 20 random level pairs") {
        for (int t = 0; t < 20; ++t) {
            const ThresholdLevels lv{static_cast<int>(rng.uniform_int(50)),
                                     static_cast<int>(rng.uniform_int(50))};
            const double spot =
                dsc(threshold_segment(img, compute_thresholds(max_p, lv)), gt);
            REQUIRE(d >= spot);
        }
    }
}

TEST_CASE("brute_force_best on an empty gt picks the smallest empty-producing pair") {
    // intensities sit at 180 and 200, so band [100,100] from levels (0,0)
    // is empty; DSC(empty,empty)=1 ties across empty pairs and the
    // lexicographic tie-break keeps (0,0)
    Image2D img(4, 4, 180.0f);
    img.at(0, 0) = 200.0f;
    BinaryMask empty_gt(4, 4);
    const auto [levels, d] = brute_force_best(img, empty_gt);
    CHECK(d == doctest::Approx(1.0));
    CHECK(levels.level_upper == 0);
    CHECK(levels.level_lower == 0);
}

TEST_CASE("reward_exp is strictly increasing in dsc for k>0") {
    for (double k : {0.5, 1.0, 5.0, 10.0}) {
        double prev = reward_exp(0.0, k);
        for (int i = 1; i <= 100; ++i) {
            const double cur = reward_exp(i / 100.0, k);
            REQUIRE(cur > prev);
            prev = cur;
        }
    }
}

TEST_CASE("reward always lies in [-1, 1]") {
    RngStream rng(999, 0);
    const RewardConfig cfg;
    for (int trial = 0; trial < 50; ++trial) {
        BinaryMask m(8, 8), gt(8, 8);
        for (auto& v : m.data) v = static_cast<uint8_t>(rng.uniform_int(2));
        for (auto& v : gt.data) v = static_cast<uint8_t>(rng.uniform_int(2));
        const double r = reward(m, gt, cfg);
        REQUIRE(r >= -1.0);
        REQUIRE(r <= 1.0);
    }
}

TEST_CASE("band widening never removes pixels") {
    RngStream rng(404, 0);
    Image2D img(12, 12);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform() * 255.0);
    const auto count = [](const BinaryMask& m) {
        int c = 0;
        for (uint8_t v : m.data) c += v;
        return c;
    };
    // monotone in th_upper
    int prev = -1;
    for (float hi = 50.0f; hi <= 250.0f; hi += 25.0f) {
        const int c = count(threshold_segment(img, {hi, 50.0}));
        REQUIRE(c >= prev);
        prev = c;
    }
    // anti-monotone in th_lower
    prev = 1 << 30;
    for (float lo = 0.0f; lo <= 200.0f; lo += 25.0f) {
        const int c = count(threshold_segment(img, {200.0, lo}));
        REQUIRE(c <= prev);
        prev = c;
    }
}

TEST_CASE("the union mask contains each per-step mask") {
    RngStream rng(77, 2);
    std::array<BinaryMask, 3> masks;
    for (auto& m : masks) {
        m = BinaryMask(6, 6);
        for (auto& v : m.data) v = static_cast<uint8_t>(rng.uniform_int(2));
    }
    const BinaryMask u = combine_masks(masks);
    for (const auto& m : masks)
        for (size_t i = 0; i < u.data.size(); ++i)
            if (m.data[i]) REQUIRE(u.data[i] == 1);
}
