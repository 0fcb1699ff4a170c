#include "fseg/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fseg {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::vector<std::string>& known,
                    const std::string& section) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const std::string& k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + section);
    }
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_data(const json& j, DataConfig& d) {
    reject_unknown(j,
                   {"distribution", "slices_per_subject", "train_frac", "width", "height",
                    "blob_count_min", "blob_count_max", "mu_wm", "mu_gm", "mu_bg", "sigma",
                    "max_value", "gm_ring_iters"},
                   "data");
    get_if_present(j, "distribution", d.distribution);
    get_if_present(j, "slices_per_subject", d.slices_per_subject);
    get_if_present(j, "train_frac", d.train_frac);
    get_if_present(j, "width", d.phantom.width);
    get_if_present(j, "height", d.phantom.height);
    get_if_present(j, "blob_count_min", d.phantom.blob_count_min);
    get_if_present(j, "blob_count_max", d.phantom.blob_count_max);
    get_if_present(j, "mu_wm", d.phantom.mu_wm);
    get_if_present(j, "mu_gm", d.phantom.mu_gm);
    get_if_present(j, "mu_bg", d.phantom.mu_bg);
    get_if_present(j, "sigma", d.phantom.sigma);
    get_if_present(j, "max_value", d.phantom.max_value);
    get_if_present(j, "gm_ring_iters", d.phantom.gm_ring_iters);
}

void parse_env(const json& j, RewardConfig& e) {
    reject_unknown(j, {"k", "gate", "dilation_iters"}, "env");
    get_if_present(j, "k", e.k);
    get_if_present(j, "gate", e.gate);
    get_if_present(j, "dilation_iters", e.dilation_iters);
    if (!(e.k > 0.0)) throw std::invalid_argument("config: env.k must be > 0");
    if (!(e.gate > 0.0 && e.gate < 1.0))
        throw std::invalid_argument("config: env.gate must be in (0,1)");
}

void parse_agent(const json& j, AgentConfig& a) {
    reject_unknown(j,
                   {"conv_widths", "dense_width", "input_size", "gamma", "batch", "lr",
                    "epsilon_start", "epsilon_end", "epsilon_fraction", "target_sync_every",
                    "buffer_capacity", "epochs", "train_steps_per_env_step",
                    "early_stop_patience", "early_stop_min_delta"},
                   "agent");
    get_if_present(j, "conv_widths", a.net.conv_widths);
    get_if_present(j, "dense_width", a.net.dense_width);
    get_if_present(j, "input_size", a.net.input_size);
    get_if_present(j, "gamma", a.gamma);
    get_if_present(j, "batch", a.batch);
    get_if_present(j, "lr", a.lr);
    get_if_present(j, "epsilon_start", a.epsilon_start);
    get_if_present(j, "epsilon_end", a.epsilon_end);
    get_if_present(j, "epsilon_fraction", a.epsilon_fraction);
    get_if_present(j, "target_sync_every", a.target_sync_every);
    get_if_present(j, "buffer_capacity", a.buffer_capacity);
    get_if_present(j, "epochs", a.epochs);
    get_if_present(j, "train_steps_per_env_step", a.train_steps_per_env_step);
    get_if_present(j, "early_stop_patience", a.early_stop_patience);
    get_if_present(j, "early_stop_min_delta", a.early_stop_min_delta);
    if (a.gamma < 0.0 || a.gamma > 1.0)
        throw std::invalid_argument("config: agent.gamma must be in [0,1]");
    if (a.epsilon_start < 0.0 || a.epsilon_start > 1.0 || a.epsilon_end < 0.0 ||
        a.epsilon_end > 1.0)
        throw std::invalid_argument("config: agent epsilons must be in [0,1]");
}

void parse_refine(const json& j, RefineTrainConfig& r) {
    reject_unknown(j,
                   {"widths", "psp_grids", "lambda_l1", "lr", "batch", "epochs",
                    "early_stop_patience", "early_stop_min_delta", "binarize_tau"},
                   "refine");
    get_if_present(j, "widths", r.net.widths);
    get_if_present(j, "psp_grids", r.net.psp_grids);
    get_if_present(j, "lambda_l1", r.loss.lambda_l1);
    get_if_present(j, "lr", r.lr);
    get_if_present(j, "batch", r.batch);
    get_if_present(j, "epochs", r.epochs);
    get_if_present(j, "early_stop_patience", r.early_stop_patience);
    get_if_present(j, "early_stop_min_delta", r.early_stop_min_delta);
    get_if_present(j, "binarize_tau", r.binarize_tau);
    if (r.loss.lambda_l1 < 0.0)
        throw std::invalid_argument("config: refine.lambda_l1 must be >= 0");
}

void parse_fed(const json& j, FedConfig& f) {
    reject_unknown(j, {"local_epochs", "patience", "rel_tol", "max_rounds", "expected_sites"},
                   "fed");
    get_if_present(j, "local_epochs", f.policy.local_epochs);
    get_if_present(j, "patience", f.policy.patience);
    get_if_present(j, "rel_tol", f.policy.rel_tol);
    get_if_present(j, "max_rounds", f.policy.max_rounds);
    get_if_present(j, "expected_sites", f.expected_sites);
    if (f.policy.local_epochs <= 0 || f.policy.patience <= 0 || f.policy.rel_tol <= 0.0 ||
        f.policy.max_rounds < 0)
        throw std::invalid_argument("config: fed policy fields must be positive");
}

} // namespace

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: parse error: ") + e.what());
    }
    reject_unknown(j, {"data", "env", "agent", "refine", "fed", "seeds"}, "top level");
    ExperimentConfig cfg;
    if (j.contains("data")) parse_data(j.at("data"), cfg.data);
    if (j.contains("env")) parse_env(j.at("env"), cfg.env);
    if (j.contains("agent")) parse_agent(j.at("agent"), cfg.agent);
    if (j.contains("refine")) parse_refine(j.at("refine"), cfg.refine);
    if (j.contains("fed")) parse_fed(j.at("fed"), cfg.fed);
    if (j.contains("seeds")) {
        reject_unknown(j.at("seeds"), {"master"}, "seeds");
        get_if_present(j.at("seeds"), "master", cfg.seeds.master);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["data"] = {{"distribution", cfg.data.distribution},
                 {"slices_per_subject", cfg.data.slices_per_subject},
                 {"train_frac", cfg.data.train_frac},
                 {"width", cfg.data.phantom.width},
                 {"height", cfg.data.phantom.height},
                 {"blob_count_min", cfg.data.phantom.blob_count_min},
                 {"blob_count_max", cfg.data.phantom.blob_count_max},
                 {"mu_wm", cfg.data.phantom.mu_wm},
                 {"mu_gm", cfg.data.phantom.mu_gm},
                 {"mu_bg", cfg.data.phantom.mu_bg},
                 {"sigma", cfg.data.phantom.sigma},
                 {"max_value", cfg.data.phantom.max_value},
                 {"gm_ring_iters", cfg.data.phantom.gm_ring_iters}};
    j["env"] = {{"k", cfg.env.k}, {"gate", cfg.env.gate}, {"dilation_iters", cfg.env.dilation_iters}};
    j["agent"] = {{"conv_widths", cfg.agent.net.conv_widths},
                  {"dense_width", cfg.agent.net.dense_width},
                  {"input_size", cfg.agent.net.input_size},
                  {"gamma", cfg.agent.gamma},
                  {"batch", cfg.agent.batch},
                  {"lr", cfg.agent.lr},
                  {"epsilon_start", cfg.agent.epsilon_start},
                  {"epsilon_end", cfg.agent.epsilon_end},
                  {"epsilon_fraction", cfg.agent.epsilon_fraction},
                  {"target_sync_every", cfg.agent.target_sync_every},
                  {"buffer_capacity", cfg.agent.buffer_capacity},
                  {"epochs", cfg.agent.epochs},
                  {"train_steps_per_env_step", cfg.agent.train_steps_per_env_step},
                  {"early_stop_patience", cfg.agent.early_stop_patience},
                  {"early_stop_min_delta", cfg.agent.early_stop_min_delta}};
    j["refine"] = {{"widths", cfg.refine.net.widths},
                   {"psp_grids", cfg.refine.net.psp_grids},
                   {"lambda_l1", cfg.refine.loss.lambda_l1},
                   {"lr", cfg.refine.lr},
                   {"batch", cfg.refine.batch},
                   {"epochs", cfg.refine.epochs},
                   {"early_stop_patience", cfg.refine.early_stop_patience},
                   {"early_stop_min_delta", cfg.refine.early_stop_min_delta},
                   {"binarize_tau", cfg.refine.binarize_tau}};
    j["fed"] = {{"local_epochs", cfg.fed.policy.local_epochs},
                {"patience", cfg.fed.policy.patience},
                {"rel_tol", cfg.fed.policy.rel_tol},
                {"max_rounds", cfg.fed.policy.max_rounds},
                {"expected_sites", cfg.fed.expected_sites}};
    j["seeds"] = {{"master", cfg.seeds.master}};
    return j.dump(2) + "\n";
}

} // namespace fseg
