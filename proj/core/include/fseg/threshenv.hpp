#pragma once

#include <array>
#include <utility>

#include "fseg/image.hpp"
#include "fseg/metrics.hpp"

namespace fseg {

constexpr int kThresholdLevels = 50; // the sparse 50x2 action grid
constexpr int kEpisodeSteps = 3;     // episodes conclude after three threshold sets

// Discrete action indices, one per head.
struct ThresholdLevels {
    int level_upper = 0; // in [0, 49]
    int level_lower = 0; // in [0, 49]
};

// Real-valued intensity band derived from the levels; always normalized so
// th_lower <= th_upper. Both lie in [max_p/2, max_p). Doubles so the level
// formula reproduces hand arithmetic exactly.
struct ThresholdPair {
    double th_upper = 0.0;
    double th_lower = 0.0;
};

struct RewardConfig {
    double k = 5.0;        // exponential reward sharpness
    double gate = 0.7;     // DSC gate: above it the full exponential reward applies
    int dilation_iters = 1; // dilation of the ground truth inside R_exp
};

struct EnvState {
    Image2D image;
    BinaryMask mask;
    int step_index = 0; // 0..3, mask blank at step 0
};

struct StepResult {
    EnvState state;
    double reward = 0.0;
    bool done = false;
};

struct EpisodeResult {
    std::array<BinaryMask, kEpisodeSteps> step_masks;
    std::array<ThresholdLevels, kEpisodeSteps> step_levels;
    std::array<double, kEpisodeSteps> step_rewards{};
    BinaryMask final_mask; // union of the per-step masks
};

// min = max_p/2, v = (max_p - min)/50, th = min + v*level; the pair is
// normalized by swapping when the agent emits upper < lower.
ThresholdPair compute_thresholds(float max_p, const ThresholdLevels& levels);

// pixel -> 1 iff th_lower <= intensity <= th_upper (inclusive both ends)
BinaryMask threshold_segment(const Image2D& img, const ThresholdPair& pair);

// (e^(k*dsc) - 1)/(e^k - 1)
double reward_exp(double dsc_value, double k);

// Gated reward: R_exp on the dilated ground truth when DSC against the
// plain ground truth clears the gate, R_exp - 1 otherwise.
double reward(const BinaryMask& mask, const BinaryMask& gt, const RewardConfig& cfg);

EnvState env_reset(const Image2D& image, const BinaryMask& gt);
StepResult env_step(const EnvState& state, const BinaryMask& gt, const ThresholdLevels& levels,
                    const RewardConfig& cfg);

// Pixel-wise union of the three per-step masks.
BinaryMask combine_masks(const std::array<BinaryMask, kEpisodeSteps>& masks);

// Exhaustive search over all 50x50 level pairs; ties broken by the
// lexicographically smallest (level_upper, level_lower).
std::pair<ThresholdLevels, double> brute_force_best(const Image2D& image, const BinaryMask& gt);

} // namespace fseg
