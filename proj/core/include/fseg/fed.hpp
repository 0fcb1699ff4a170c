#pragma once

#include <functional>
#include <vector>

#include "fseg/params.hpp"

namespace fseg {

struct SiteWeight {
    int site_id = 0;
    uint32_t n_drl = 0; // DRL training-sample count at this site
    uint32_t n_rm = 0;  // RM training-sample count at this site
};

struct GlobalModel {
    ParameterVector theta_cdrl;
    ParameterVector theta_crm;
    int round = 0;
};

struct RoundPolicy {
    int local_epochs = 10; // per-round local training epochs
    int patience = 3;      // consecutive sub-tolerance improvements to stop
    double rel_tol = 1e-3;
    int max_rounds = 10;
};

// alpha_k = n_drl_k / sum(n_drl), beta_k analogous; each sums to 1.
std::pair<std::vector<double>, std::vector<double>> weights_normalize(
    const std::vector<SiteWeight>& sites);

// Coordinate-wise weighted sum, accumulated in 64-bit then rounded to f32.
// Callers pass vectors in ascending site_id order; weights must sum to 1
// within 1e-6 and layouts must match exactly.
ParameterVector aggregate(const std::vector<const ParameterVector*>& params,
                          const std::vector<double>& weights);

// True iff the last `patience` consecutive relative improvements
// (L[t-1]-L[t]) / max(L[t-1], 1e-12) are all below rel_tol.
bool saturation_check(const std::vector<double>& loss_history, const RoundPolicy& policy);

// What a site hands back after one round of local training.
struct SiteLocalResult {
    std::vector<float> drl;
    std::vector<float> rm;
    float train_loss = 0.0f;
};

// Local training seam: real deployments train DRL+RM; tests may script it.
using SiteTrainer =
    std::function<SiteLocalResult(int site_id, int round, const GlobalModel& current)>;

struct FedRunResult {
    GlobalModel model;
    std::vector<double> round_losses; // aggregated training error per round
    int rounds = 0;
};

// In-process federated simulation: per round every site trains from the
// current global params, then DRL and RM are aggregated independently with
// alpha/beta weights in ascending site_id order. Stops on saturation or
// max_rounds. Deterministic given the trainer.
FedRunResult run_federated(const std::vector<SiteWeight>& sites, const RoundPolicy& policy,
                           GlobalModel initial, const SiteTrainer& trainer);

} // namespace fseg
