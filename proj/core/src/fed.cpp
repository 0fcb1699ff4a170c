#include "fseg/fed.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fseg {

std::pair<std::vector<double>, std::vector<double>> weights_normalize(
    const std::vector<SiteWeight>& sites) {
    if (sites.empty()) throw std::invalid_argument("weights_normalize: empty site list");
    double total_drl = 0.0, total_rm = 0.0;
    for (const SiteWeight& s : sites) {
        if (s.n_drl < 1 || s.n_rm < 1)
            throw std::invalid_argument("weights_normalize: counts must be >= 1");
        total_drl += s.n_drl;
        total_rm += s.n_rm;
    }
    std::vector<double> alpha(sites.size()), beta(sites.size());
    for (size_t i = 0; i < sites.size(); ++i) {
        alpha[i] = sites[i].n_drl / total_drl;
        beta[i] = sites[i].n_rm / total_rm;
    }
    return {std::move(alpha), std::move(beta)};
}

ParameterVector aggregate(const std::vector<const ParameterVector*>& params,
                          const std::vector<double>& weights) {
    if (params.empty()) throw std::invalid_argument("aggregate: no parameter vectors");
    if (params.size() != weights.size())
        throw std::invalid_argument("aggregate: params/weights size mismatch");
    for (const ParameterVector* pv : params)
        if (!pv->same_layout(*params[0]))
            throw std::invalid_argument("aggregate: layout mismatch");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (std::fabs(wsum - 1.0) > 1e-6)
        throw std::invalid_argument("aggregate: weights must sum to 1");

    ParameterVector out = *params[0];
    for (size_t j = 0; j < out.values.size(); ++j) {
        double acc = 0.0;
        for (size_t k = 0; k < params.size(); ++k)
            acc += weights[k] * static_cast<double>(params[k]->values[j]);
        out.values[j] = static_cast<float>(acc);
    }
    return out;
}

bool saturation_check(const std::vector<double>& loss_history, const RoundPolicy& policy) {
    if (loss_history.size() < static_cast<size_t>(policy.patience) + 1) return false;
    for (int k = 0; k < policy.patience; ++k) {
        const size_t t = loss_history.size() - 1 - static_cast<size_t>(k);
        const double prev = loss_history[t - 1];
        const double improvement = (prev - loss_history[t]) / std::max(prev, 1e-12);
        if (improvement >= policy.rel_tol) return false;
    }
    return true;
}

FedRunResult run_federated(const std::vector<SiteWeight>& sites, const RoundPolicy& policy,
                           GlobalModel initial, const SiteTrainer& trainer) {
    if (sites.empty()) throw std::invalid_argument("run_federated: no sites");

    // ascending site_id fixes the aggregation order regardless of caller order
    std::vector<SiteWeight> ordered = sites;
    std::sort(ordered.begin(), ordered.end(),
              [](const SiteWeight& a, const SiteWeight& b) { return a.site_id < b.site_id; });
    for (size_t i = 1; i < ordered.size(); ++i)
        if (ordered[i].site_id == ordered[i - 1].site_id)
            throw std::invalid_argument("run_federated: duplicate site_id");

    const auto [alpha, beta] = weights_normalize(ordered);

    FedRunResult result;
    result.model = std::move(initial);
    for (int round = 1; round <= policy.max_rounds; ++round) {
        std::vector<SiteLocalResult> locals;
        locals.reserve(ordered.size());
        for (const SiteWeight& site : ordered)
            locals.push_back(trainer(site.site_id, round, result.model));

        std::vector<ParameterVector> drl_pvs(ordered.size()), rm_pvs(ordered.size());
        std::vector<const ParameterVector*> drl_ptrs(ordered.size()), rm_ptrs(ordered.size());
        for (size_t i = 0; i < ordered.size(); ++i) {
            if (locals[i].drl.size() != result.model.theta_cdrl.values.size() ||
                locals[i].rm.size() != result.model.theta_crm.values.size())
                throw std::runtime_error("run_federated: site returned mismatched params");
            drl_pvs[i] = result.model.theta_cdrl;
            drl_pvs[i].values = locals[i].drl;
            rm_pvs[i] = result.model.theta_crm;
            rm_pvs[i].values = locals[i].rm;
            drl_ptrs[i] = &drl_pvs[i];
            rm_ptrs[i] = &rm_pvs[i];
        }
        result.model.theta_cdrl = aggregate(drl_ptrs, alpha);
        result.model.theta_crm = aggregate(rm_ptrs, beta);
        result.model.round = round;
        result.rounds = round;

        // aggregated training error: alpha-weighted mean of site-reported loss
        double loss = 0.0;
        for (size_t i = 0; i < ordered.size(); ++i)
            loss += alpha[i] * static_cast<double>(locals[i].train_loss);
        result.round_losses.push_back(loss);

        if (saturation_check(result.round_losses, policy)) break;
    }
    return result;
}

} // namespace fseg
