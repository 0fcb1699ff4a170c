#include "fseg/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fseg {

Network build_qnet(const QNetworkSpec& spec) {
    if (spec.conv_widths.empty()) throw std::invalid_argument("qnet: need conv widths");
    if (spec.input_size % (1 << spec.conv_widths.size()) != 0)
        throw std::invalid_argument("qnet: input size must be divisible by 2^depth");
    std::vector<LayerSpec> layers;
    int ch = 2;
    int res = spec.input_size;
    for (int w : spec.conv_widths) {
        layers.push_back(LayerSpec::conv2d(ch, w, 3, 2, 1));
        layers.push_back(LayerSpec::relu());
        ch = w;
        res /= 2;
    }
    layers.push_back(LayerSpec::dense(ch * res * res, spec.dense_width));
    layers.push_back(LayerSpec::relu());
    layers.push_back(LayerSpec::dense(spec.dense_width, 2 * kThresholdLevels));
    return Network(std::move(layers));
}

namespace {

Tensor make_state(const Image2D& img, const std::vector<uint8_t>& mask) {
    BinaryMask m;
    m.width = img.width;
    m.height = img.height;
    m.data = mask;
    return concat_state(img, m);
}

Tensor stack_batch(const std::vector<Tensor>& states) {
    const int C = states[0].dim(0), H = states[0].dim(1), W = states[0].dim(2);
    Tensor batch({static_cast<int>(states.size()), C, H, W});
    const size_t stride = states[0].size();
    for (size_t i = 0; i < states.size(); ++i)
        std::copy(states[i].data.begin(), states[i].data.end(),
                  batch.data.begin() + static_cast<long>(i * stride));
    return batch;
}

int argmax50(const float* q) {
    int best = 0;
    for (int i = 1; i < kThresholdLevels; ++i)
        if (q[i] > q[best]) best = i; // ties keep the lowest index
    return best;
}

} // namespace

Tensor Transition::state() const { return make_state(*image, mask_before); }
Tensor Transition::next_state() const { return make_state(*image, mask_after); }

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay: capacity must be > 0");
    slots_.reserve(std::min<size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
    if (size_ < capacity_) {
        slots_.push_back(std::move(t));
        ++size_;
    } else {
        slots_[head_] = std::move(t); // overwrite the oldest
        head_ = (head_ + 1) % capacity_;
    }
}

const Transition& ReplayBuffer::at(size_t i) const {
    if (i >= size_) throw std::out_of_range("replay: index out of range");
    if (size_ < capacity_) return slots_[i]; // no eviction yet: insertion order
    return slots_[(head_ + i) % capacity_];
}

std::vector<size_t> ReplayBuffer::sample_indices(size_t batch, RngStream& rng) const {
    std::vector<size_t> idx(batch);
    for (size_t i = 0; i < batch; ++i)
        idx[i] = rng.uniform_int(static_cast<uint32_t>(size_));
    return idx;
}

ThresholdLevels select_actions(Network& qnet, const Tensor& state, double epsilon,
                               RngStream& rng) {
    if (epsilon < 0.0 || epsilon > 1.0)
        throw std::invalid_argument("select_actions: epsilon out of [0,1]");
    ThresholdLevels lv;
    const bool explore_upper = epsilon > 0.0 && rng.uniform() < epsilon;
    const bool explore_lower = epsilon > 0.0 && rng.uniform() < epsilon;
    if (explore_upper) lv.level_upper = static_cast<int>(rng.uniform_int(kThresholdLevels));
    if (explore_lower) lv.level_lower = static_cast<int>(rng.uniform_int(kThresholdLevels));
    if (!explore_upper || !explore_lower) {
        Tensor in({1, state.dim(0), state.dim(1), state.dim(2)}, state.data);
        const Tensor q = qnet.forward(in);
        if (!explore_upper) lv.level_upper = argmax50(q.data.data());
        if (!explore_lower) lv.level_lower = argmax50(q.data.data() + kThresholdLevels);
    }
    return lv;
}

std::vector<std::array<float, 2>> td_targets(Network& target_net,
                                             const std::vector<const Transition*>& batch,
                                             double gamma) {
    if (batch.empty()) throw std::invalid_argument("td_targets: empty batch");
    std::vector<std::array<float, 2>> targets(batch.size());

    // only non-terminal transitions need a target-net pass
    std::vector<size_t> open;
    std::vector<Tensor> next_states;
    for (size_t i = 0; i < batch.size(); ++i) {
        if (!batch[i]->done) {
            open.push_back(i);
            next_states.push_back(batch[i]->next_state());
        }
        targets[i] = {batch[i]->reward, batch[i]->reward};
    }
    if (!open.empty()) {
        const Tensor q = target_net.forward(stack_batch(next_states));
        for (size_t k = 0; k < open.size(); ++k) {
            const float* row = q.data.data() + k * 2 * kThresholdLevels;
            const float max_u = row[argmax50(row)];
            const float max_l = row[kThresholdLevels + argmax50(row + kThresholdLevels)];
            const size_t i = open[k];
            targets[i][0] += static_cast<float>(gamma) * max_u;
            targets[i][1] += static_cast<float>(gamma) * max_l;
        }
    }
    return targets;
}

TrainStepResult train_step(Network& qnet, Network& target_net, ReplayBuffer& buffer,
                           OptimizerState& opt, const AgentConfig& cfg, RngStream& rng,
                           int64_t& step_counter) {
    if (buffer.size() < static_cast<size_t>(cfg.batch)) return {false, 0.0};

    const std::vector<size_t> idx = buffer.sample_indices(static_cast<size_t>(cfg.batch), rng);
    std::vector<const Transition*> batch(idx.size());
    std::vector<Tensor> states(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        batch[i] = &buffer.at(idx[i]);
        states[i] = batch[i]->state();
    }
    const auto targets = td_targets(target_net, batch, cfg.gamma);

    const Tensor q = qnet.forward(stack_batch(states));
    Tensor upstream(q.shape);
    const size_t B = batch.size();
    double loss = 0.0;
    for (size_t i = 0; i < B; ++i) {
        float* row = upstream.data.data() + i * 2 * kThresholdLevels;
        const float* qrow = q.data.data() + i * 2 * kThresholdLevels;
        const float eu = qrow[batch[i]->actions.level_upper] - targets[i][0];
        const float el = qrow[kThresholdLevels + batch[i]->actions.level_lower] - targets[i][1];
        loss += (static_cast<double>(eu) * eu + static_cast<double>(el) * el) / (2.0 * B);
        // d(mean squared error)/dq for the chosen actions only
        row[batch[i]->actions.level_upper] = eu / static_cast<float>(B);
        row[kThresholdLevels + batch[i]->actions.level_lower] = el / static_cast<float>(B);
    }
    qnet.backward(upstream);
    optimizer_step(opt, qnet);

    ++step_counter;
    if (cfg.target_sync_every > 0 && step_counter % cfg.target_sync_every == 0)
        target_net.params().values = qnet.params().values; // bit-exact copy

    return {true, loss};
}

EpisodeResult run_episode_greedy(Network& qnet, const Image2D& image, const QNetworkSpec& spec) {
    const float max_p = image_max_pixel(image);
    if (!(max_p > 0.0f)) throw std::invalid_argument("episode: all-zero image rejected");

    const Image2D small = resize_nearest(image, spec.input_size, spec.input_size);
    BinaryMask mask(image.width, image.height); // native-resolution mask
    EpisodeResult ep;
    // a throwaway stream: epsilon 0 never draws from it
    RngStream rng(0, 0);
    for (int step = 0; step < kEpisodeSteps; ++step) {
        const BinaryMask small_mask = resize_nearest(mask, spec.input_size, spec.input_size);
        const Tensor state = concat_state(small, small_mask);
        const ThresholdLevels lv = select_actions(qnet, state, 0.0, rng);
        mask = threshold_segment(image, compute_thresholds(max_p, lv));
        ep.step_levels[static_cast<size_t>(step)] = lv;
        ep.step_masks[static_cast<size_t>(step)] = mask;
    }
    ep.final_mask = combine_masks(ep.step_masks);
    return ep;
}

DrlTrainStats train_local_drl(Network& qnet, const std::vector<Sample>& dataset,
                              const AgentConfig& cfg, const RewardConfig& reward_cfg,
                              RngStream& rng, bool early_stop) {
    if (dataset.empty()) throw std::invalid_argument("train_local_drl: empty dataset");

    Network target_net = qnet; // starts synced
    OptimizerState opt = OptimizerState::adam(cfg.lr);
    ReplayBuffer buffer(cfg.buffer_capacity);
    int64_t step_counter = 0;

    const double planned_steps =
        static_cast<double>(cfg.epochs) * static_cast<double>(dataset.size()) * kEpisodeSteps;
    const double decay_steps = std::max(1.0, planned_steps * cfg.epsilon_fraction);
    int64_t env_steps = 0;

    DrlTrainStats stats;
    double best_reward = -1e300;   // early-stop tracker (min-delta applies)
    double best_snapshot = -1e300; // best-weights tracker (plain max)
    std::vector<float> best_params;
    float best_loss = 0.0f;
    int wait = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double reward_sum = 0.0;
        double loss_sum = 0.0;
        int64_t loss_count = 0;
        for (const Sample& sample : dataset) {
            auto small = std::make_shared<Image2D>(
                resize_nearest(sample.image, cfg.net.input_size, cfg.net.input_size));
            EnvState env = env_reset(sample.image, sample.gt);
            std::vector<uint8_t> small_mask_before(
                static_cast<size_t>(cfg.net.input_size) * cfg.net.input_size, 0);
            for (int step = 0; step < kEpisodeSteps; ++step) {
                const double frac = std::min(1.0, static_cast<double>(env_steps) / decay_steps);
                const double epsilon =
                    cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;

                const Tensor state = make_state(*small, small_mask_before);
                const ThresholdLevels lv = select_actions(qnet, state, epsilon, rng);
                StepResult sr = env_step(env, sample.gt, lv, reward_cfg);
                reward_sum += sr.reward;

                Transition t;
                t.image = small;
                t.mask_before = small_mask_before;
                t.mask_after =
                    resize_nearest(sr.state.mask, cfg.net.input_size, cfg.net.input_size).data;
                // credit the swap-normalized band ends: the upper head always
                // learns the high threshold, the lower head the low one
                t.actions = {std::max(lv.level_upper, lv.level_lower),
                             std::min(lv.level_upper, lv.level_lower)};
                t.reward = static_cast<float>(sr.reward);
                t.done = sr.done;
                small_mask_before = t.mask_after;
                buffer.push(std::move(t));

                env = std::move(sr.state);
                ++env_steps;
                for (int k = 0; k < cfg.train_steps_per_env_step; ++k) {
                    const TrainStepResult r =
                        train_step(qnet, target_net, buffer, opt, cfg, rng, step_counter);
                    if (r.applied) {
                        loss_sum += r.loss;
                        ++loss_count;
                    }
                }
            }
        }
        const double mean_reward = reward_sum / static_cast<double>(dataset.size());
        const double mean_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
        stats.epoch_mean_reward.push_back(mean_reward);
        stats.epoch_mean_loss.push_back(mean_loss);
        stats.epochs_run = epoch + 1;
        stats.final_loss = static_cast<float>(mean_loss);

        if (early_stop) {
            if (mean_reward > best_snapshot) {
                best_snapshot = mean_reward;
                best_params = qnet.params().values;
                best_loss = static_cast<float>(mean_loss);
            }
            if (mean_reward > best_reward + cfg.early_stop_min_delta) {
                best_reward = mean_reward;
                wait = 0;
            } else if (++wait >= cfg.early_stop_patience) {
                break;
            }
        }
    }
    // restore the best-epoch weights under the monitored reward
    if (early_stop && !best_params.empty()) {
        qnet.params().values = std::move(best_params);
        stats.final_loss = best_loss;
    }
    return stats;
}

} // namespace fseg
