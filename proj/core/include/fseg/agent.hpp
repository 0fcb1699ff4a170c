#pragma once

#include <array>
#include <memory>
#include <vector>

#include "fseg/image.hpp"
#include "fseg/network.hpp"
#include "fseg/phantom.hpp"
#include "fseg/rng.hpp"
#include "fseg/threshenv.hpp"

namespace fseg {

// Dual-head Q-network over the 50x2 action grid: a shared conv trunk and
// one 100-wide output, read as two 50-value heads (upper levels first).
struct QNetworkSpec {
    std::vector<int> conv_widths = {8, 16, 32}; // stride-2 convs
    int dense_width = 128;
    int input_size = 64; // environment images are resized here for the net only
};

Network build_qnet(const QNetworkSpec& spec);

struct AgentConfig {
    QNetworkSpec net;
    double gamma = 0.9;
    int batch = 32;
    double lr = 1e-3; // Adam
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_fraction = 0.5; // linear decay over this fraction of planned steps
    int target_sync_every = 250;
    size_t buffer_capacity = 10000;
    int epochs = 30;
    int train_steps_per_env_step = 1;
    int early_stop_patience = 5;
    double early_stop_min_delta = 1e-3;
};

// One experience tuple. States are stored compactly (shared image plane +
// mask planes) and materialized to 2-channel tensors on demand.
struct Transition {
    std::shared_ptr<const Image2D> image; // resized to the net input size
    std::vector<uint8_t> mask_before;
    std::vector<uint8_t> mask_after;
    ThresholdLevels actions;
    float reward = 0.0f;
    bool done = false;

    Tensor state() const;
    Tensor next_state() const;
};

// FIFO ring buffer; eviction strictly oldest-first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity);
    void push(Transition t);
    size_t size() const { return size_; }
    size_t capacity() const { return capacity_; }
    // i = 0 is the oldest stored transition
    const Transition& at(size_t i) const;
    // uniform with replacement
    std::vector<size_t> sample_indices(size_t batch, RngStream& rng) const;

private:
    size_t capacity_;
    size_t head_ = 0; // next write slot
    size_t size_ = 0;
    std::vector<Transition> slots_;
};

// Per head independently: explore uniformly with probability epsilon, else
// argmax of that head's 50 Q-values (ties to the lowest index).
ThresholdLevels select_actions(Network& qnet, const Tensor& state, double epsilon,
                               RngStream& rng);

// Bellman targets per head: r if done, else r + gamma * max_a Q_target(s',a).
std::vector<std::array<float, 2>> td_targets(Network& target_net,
                                             const std::vector<const Transition*>& batch,
                                             double gamma);

struct TrainStepResult {
    bool applied = false; // false when the buffer is too small (no-op)
    double loss = 0.0;
};

TrainStepResult train_step(Network& qnet, Network& target_net, ReplayBuffer& buffer,
                           OptimizerState& opt, const AgentConfig& cfg, RngStream& rng,
                           int64_t& step_counter);

// 3 greedy steps (epsilon = 0); no reward computation.
EpisodeResult run_episode_greedy(Network& qnet, const Image2D& image, const QNetworkSpec& spec);

struct DrlTrainStats {
    std::vector<double> epoch_mean_reward;
    std::vector<double> epoch_mean_loss;
    int epochs_run = 0;
    float final_loss = 0.0f; // mean TD loss of the final epoch
};

// Local DQN training: one exploratory episode per image per epoch, pushing
// 3 transitions each and interleaving train steps. Early stopping watches
// the epoch mean episode reward (patience/min-delta from cfg) and can be
// disabled for fixed-epoch federated rounds.
DrlTrainStats train_local_drl(Network& qnet, const std::vector<Sample>& dataset,
                              const AgentConfig& cfg, const RewardConfig& reward_cfg,
                              RngStream& rng, bool early_stop = true);

} // namespace fseg
