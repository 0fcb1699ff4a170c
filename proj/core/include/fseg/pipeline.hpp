#pragma once

#include <string>
#include <vector>

#include "fseg/agent.hpp"
#include "fseg/config.hpp"
#include "fseg/fed.hpp"
#include "fseg/phantom.hpp"
#include "fseg/refine.hpp"

namespace fseg {

// Generates per-site phantom datasets under out_dir: site_<k>/ PGM pairs, a
// per-site manifest.json, and a top-level manifest.json. Idempotent for a
// fixed config.
Manifest generate_dataset(const ExperimentConfig& cfg, const std::string& out_dir);

// Loads one site's samples from its manifest (paths relative to site_dir).
SiteData load_site_data(const std::string& site_dir);

struct SiteTrainOutcome {
    Network qnet;
    Network rm;
    DrlTrainStats drl_stats;
    RefineTrainStats rm_stats;
    float combined_loss = 0.0f; // final DRL TD loss + final RM loss
};

// Full local pipeline for one site: train the DQN, regenerate coarse masks
// greedily, train the refinement net on (image, coarse, gt).
SiteTrainOutcome train_site(const ExperimentConfig& cfg, const SiteData& site,
                            bool early_stop = true);

// Same but starting from given parameter values (federated rounds).
SiteTrainOutcome train_site_from(const ExperimentConfig& cfg, const SiteData& site,
                                 const std::vector<float>& drl_init,
                                 const std::vector<float>& rm_init, int epochs_drl,
                                 int epochs_rm, uint64_t round_salt);

struct SampleEval {
    double dsc_drl = 0.0;
    double dsc_refined = 0.0;
    MetricReport drl;
    MetricReport refined;
};

struct SiteEvaluation {
    std::vector<SampleEval> per_sample;
    MeanStd dsc_drl, sens_drl, spec_drl, mae_drl;
    MeanStd dsc_rm, sens_rm, spec_rm, mae_rm;
};

SiteEvaluation evaluate_site(const ExperimentConfig& cfg, Network& qnet, Network& rm,
                             const std::vector<Sample>& test);

// CSV rows: site,variant,metric,mean,std
std::string evaluation_csv(const std::vector<std::pair<int, SiteEvaluation>>& per_site);
// Tables-style text: one "mean ± std" cell per site per metric.
std::string evaluation_table(const std::vector<std::pair<int, SiteEvaluation>>& per_site);

// 6-tile horizontal montage per sample: input | gt | round 1..3 | refined.
void render_panels(const ExperimentConfig& cfg, Network& qnet, Network& rm,
                   const std::vector<Sample>& samples, const std::string& out_dir);

// Deterministic initial global model for federation.
GlobalModel make_initial_global(const ExperimentConfig& cfg);

// In-process federated run over preloaded site datasets (--simulate mode).
FedRunResult federated_simulate(const ExperimentConfig& cfg, const std::vector<SiteData>& sites);

// The per-round local trainer used by both the simulation and the site
// client; identical inputs give bit-identical results in both modes.
SiteLocalResult federated_local_round(const ExperimentConfig& cfg, const SiteData& site,
                                      int site_id, int round, const std::vector<float>& drl,
                                      const std::vector<float>& rm);

} // namespace fseg
