#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fseg/agent.hpp"
#include "fseg/fed.hpp"
#include "fseg/phantom.hpp"
#include "fseg/refine.hpp"
#include "fseg/threshenv.hpp"

namespace fseg {

// Every tunable the experiments expose, resolvable entirely from defaults.
// Parsed from JSON with unknown keys rejected at every level.
struct DataConfig {
    std::vector<int> distribution = {10, 4, 4}; // subjects per site
    int slices_per_subject = 20;
    double train_frac = 0.8;
    PhantomSpec phantom;
};

struct FedConfig {
    RoundPolicy policy;
    int expected_sites = 3;
};

struct SeedConfig {
    uint64_t master = 1234;
};

struct ExperimentConfig {
    DataConfig data;
    RewardConfig env;
    AgentConfig agent;
    RefineTrainConfig refine;
    FedConfig fed;
    SeedConfig seeds;
};

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

// Deterministic stream ids derived from roles so every consumer of
// randomness has its own named stream.
namespace stream_id {
constexpr uint64_t kSplit = 1'000'000;        // + site index
constexpr uint64_t kDrlInit = 2'000'000;      // + site index
constexpr uint64_t kRmInit = 3'000'000;       // + site index
constexpr uint64_t kDrlTrain = 4'000'000;     // + site index
constexpr uint64_t kRmTrain = 5'000'000;      // + site index
constexpr uint64_t kGlobalInit = 6'000'000;   // federated initial model
} // namespace stream_id

} // namespace fseg
