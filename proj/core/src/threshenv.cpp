#include "fseg/threshenv.hpp"

#include <cmath>
#include <stdexcept>

namespace fseg {

ThresholdPair compute_thresholds(float max_p, const ThresholdLevels& levels) {
    if (!(max_p > 0.0f)) throw std::invalid_argument("compute_thresholds: max_p must be > 0");
    if (levels.level_upper < 0 || levels.level_upper >= kThresholdLevels ||
        levels.level_lower < 0 || levels.level_lower >= kThresholdLevels)
        throw std::invalid_argument("compute_thresholds: level out of [0,49]");
    const double mn = max_p / 2.0;
    const double v = (max_p - mn) / static_cast<double>(kThresholdLevels);
    double upper = mn + v * levels.level_upper;
    double lower = mn + v * levels.level_lower;
    if (lower > upper) std::swap(lower, upper);
    return {upper, lower};
}

BinaryMask threshold_segment(const Image2D& img, const ThresholdPair& pair) {
    BinaryMask out(img.width, img.height);
    for (size_t i = 0; i < img.data.size(); ++i) {
        const double v = img.data[i];
        out.data[i] = (v >= pair.th_lower && v <= pair.th_upper) ? 1 : 0;
    }
    return out;
}

double reward_exp(double dsc_value, double k) {
    return (std::exp(k * dsc_value) - 1.0) / (std::exp(k) - 1.0);
}

double reward(const BinaryMask& mask, const BinaryMask& gt, const RewardConfig& cfg) {
    if (mask.width != gt.width || mask.height != gt.height)
        throw std::invalid_argument("reward: shape mismatch");
    const double d_gate = dsc(mask, gt);
    const double d_rexp = dsc(mask, dilate(gt, cfg.dilation_iters));
    const double rexp = reward_exp(d_rexp, cfg.k);
    return d_gate > cfg.gate ? rexp : rexp - 1.0;
}

EnvState env_reset(const Image2D& image, const BinaryMask& gt) {
    validate(image);
    if (image.width != gt.width || image.height != gt.height)
        throw std::invalid_argument("env_reset: image/gt shape mismatch");
    if (!(image_max_pixel(image) > 0.0f))
        throw std::invalid_argument("env_reset: all-zero image rejected");
    EnvState s;
    s.image = image;
    s.mask = BinaryMask(image.width, image.height); // blank mask
    s.step_index = 0;
    return s;
}

StepResult env_step(const EnvState& state, const BinaryMask& gt, const ThresholdLevels& levels,
                    const RewardConfig& cfg) {
    if (state.step_index >= kEpisodeSteps)
        throw std::logic_error("env_step: episode already done");
    const float max_p = image_max_pixel(state.image);
    const ThresholdPair pair = compute_thresholds(max_p, levels);
    BinaryMask new_mask = threshold_segment(state.image, pair);
    StepResult r;
    r.reward = reward(new_mask, gt, cfg);
    r.state.image = state.image;
    r.state.mask = std::move(new_mask); // the new mask becomes the next observation
    r.state.step_index = state.step_index + 1;
    r.done = r.state.step_index == kEpisodeSteps;
    return r;
}

BinaryMask combine_masks(const std::array<BinaryMask, kEpisodeSteps>& masks) {
    for (int i = 1; i < kEpisodeSteps; ++i)
        if (!(masks[i].width == masks[0].width && masks[i].height == masks[0].height))
            throw std::invalid_argument("combine_masks: shape mismatch");
    BinaryMask out = masks[0];
    for (int i = 1; i < kEpisodeSteps; ++i)
        for (size_t k = 0; k < out.data.size(); ++k)
            out.data[k] = out.data[k] | masks[static_cast<size_t>(i)].data[k];
    return out;
}

std::pair<ThresholdLevels, double> brute_force_best(const Image2D& image, const BinaryMask& gt) {
    const float max_p = image_max_pixel(image);
    ThresholdLevels best{0, 0};
    double best_dsc = -1.0;
    for (int u = 0; u < kThresholdLevels; ++u) {
        for (int l = 0; l < kThresholdLevels; ++l) {
            const ThresholdLevels lv{u, l};
            const double d = dsc(threshold_segment(image, compute_thresholds(max_p, lv)), gt);
            if (d > best_dsc) {
                best_dsc = d;
                best = lv;
            }
        }
    }
    return {best, best_dsc};
}

} // namespace fseg
