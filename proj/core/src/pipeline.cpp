#include "fseg/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fseg/checkpoint.hpp"
#include "fseg/metrics.hpp"
#include "fseg/pgm.hpp"

namespace fseg {

namespace fs = std::filesystem;

namespace {

std::string sample_name(int subject, int slice, const char* what) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "s%02d_i%02d_%s.pgm", subject, slice, what);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

std::string read_text(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

Manifest generate_dataset(const ExperimentConfig& cfg, const std::string& out_dir) {
    const auto site_samples =
        generate_site_datasets(cfg.data.distribution, cfg.data.slices_per_subject,
                               cfg.data.phantom, cfg.seeds.master);
    fs::create_directories(out_dir);

    Manifest manifest;
    manifest.seed = cfg.seeds.master;
    manifest.slices_per_subject = cfg.data.slices_per_subject;

    for (size_t si = 0; si < site_samples.size(); ++si) {
        const int site_id = static_cast<int>(si) + 1;
        const std::string site_name = "site_" + std::to_string(site_id);
        fs::create_directories(fs::path(out_dir) / site_name);

        const std::vector<Sample>& samples = site_samples[si];
        RngStream split_rng(cfg.seeds.master, stream_id::kSplit + static_cast<uint64_t>(site_id));
        const auto [train_idx, test_idx] =
            split_train_test(samples.size(), cfg.data.train_frac, split_rng);
        std::vector<std::string> split_of(samples.size(), "test");
        for (size_t t : train_idx) split_of[t] = "train";

        SiteManifest sm;
        sm.id = site_id;
        sm.n_drl = static_cast<uint32_t>(train_idx.size());
        sm.n_rm = static_cast<uint32_t>(train_idx.size());
        for (size_t k = 0; k < samples.size(); ++k) {
            const int subject = static_cast<int>(k) / cfg.data.slices_per_subject;
            const int slice = static_cast<int>(k) % cfg.data.slices_per_subject;
            const std::string img_name = sample_name(subject, slice, "img");
            const std::string gt_name = sample_name(subject, slice, "gt");
            pgm_write(samples[k].image, (fs::path(out_dir) / site_name / img_name).string());
            pgm_write(samples[k].gt, (fs::path(out_dir) / site_name / gt_name).string());
            sm.entries.push_back({site_name + "/" + img_name, site_name + "/" + gt_name,
                                  split_of[k]});
        }
        manifest.sites.push_back(std::move(sm));
    }
    write_text((fs::path(out_dir) / "manifest.json").string(), manifest_to_json(manifest));

    // per-site manifests carry site-relative paths so a site dir is self-contained
    for (const SiteManifest& sm : manifest.sites) {
        Manifest local;
        local.seed = manifest.seed;
        local.slices_per_subject = manifest.slices_per_subject;
        SiteManifest rel = sm;
        const std::string prefix = "site_" + std::to_string(sm.id) + "/";
        for (ManifestEntry& e : rel.entries) {
            e.image_path = e.image_path.substr(prefix.size());
            e.gt_path = e.gt_path.substr(prefix.size());
        }
        local.sites.push_back(std::move(rel));
        write_text((fs::path(out_dir) / ("site_" + std::to_string(sm.id)) / "manifest.json").string(),
                   manifest_to_json(local));
    }
    return manifest;
}

SiteData load_site_data(const std::string& site_dir) {
    const Manifest m = manifest_from_json(read_text((fs::path(site_dir) / "manifest.json").string()));
    if (m.sites.size() != 1)
        throw std::runtime_error("site manifest must describe exactly one site: " + site_dir);
    const SiteManifest& sm = m.sites[0];
    SiteData site;
    site.id = sm.id;
    for (const ManifestEntry& e : sm.entries) {
        Sample s;
        s.image = pgm_read((fs::path(site_dir) / e.image_path).string());
        s.gt = pgm_read_mask((fs::path(site_dir) / e.gt_path).string());
        (e.split == "train" ? site.train : site.test).push_back(std::move(s));
    }
    if (site.train.empty()) throw std::runtime_error("site has no training samples: " + site_dir);
    return site;
}

namespace {

std::vector<RefineExample> coarse_dataset(const ExperimentConfig& cfg, Network& qnet,
                                          const std::vector<Sample>& samples) {
    std::vector<RefineExample> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) {
        EpisodeResult ep = run_episode_greedy(qnet, s.image, cfg.agent.net);
        out.push_back({s.image, std::move(ep.final_mask), s.gt});
    }
    return out;
}

} // namespace

SiteTrainOutcome train_site(const ExperimentConfig& cfg, const SiteData& site, bool early_stop) {
    SiteTrainOutcome out;
    const uint64_t sid = static_cast<uint64_t>(site.id);

    out.qnet = build_qnet(cfg.agent.net);
    RngStream init_rng(cfg.seeds.master, stream_id::kDrlInit + sid);
    out.qnet.init_he_uniform(init_rng);
    RngStream train_rng(cfg.seeds.master, stream_id::kDrlTrain + sid);
    out.drl_stats = train_local_drl(out.qnet, site.train, cfg.agent, cfg.env, train_rng,
                                    early_stop);

    out.rm = build_refine_net(cfg.refine.net);
    RngStream rm_init(cfg.seeds.master, stream_id::kRmInit + sid);
    out.rm.init_he_uniform(rm_init);
    RngStream rm_train(cfg.seeds.master, stream_id::kRmTrain + sid);
    out.rm_stats = train_refine(out.rm, coarse_dataset(cfg, out.qnet, site.train), cfg.refine,
                                rm_train, early_stop);

    out.combined_loss = out.drl_stats.final_loss + out.rm_stats.final_loss;
    return out;
}

SiteTrainOutcome train_site_from(const ExperimentConfig& cfg, const SiteData& site,
                                 const std::vector<float>& drl_init,
                                 const std::vector<float>& rm_init, int epochs_drl,
                                 int epochs_rm, uint64_t round_salt) {
    SiteTrainOutcome out;
    const uint64_t sid = static_cast<uint64_t>(site.id);
    const uint64_t salt = 1000 * round_salt + sid;

    out.qnet = build_qnet(cfg.agent.net);
    if (out.qnet.params().values.size() != drl_init.size())
        throw std::runtime_error("train_site_from: DRL parameter size mismatch");
    out.qnet.params().values = drl_init;

    AgentConfig acfg = cfg.agent;
    acfg.epochs = epochs_drl;
    RngStream train_rng(cfg.seeds.master, stream_id::kDrlTrain + salt);
    out.drl_stats = train_local_drl(out.qnet, site.train, acfg, cfg.env, train_rng,
                                    /*early_stop=*/false);

    out.rm = build_refine_net(cfg.refine.net);
    if (out.rm.params().values.size() != rm_init.size())
        throw std::runtime_error("train_site_from: RM parameter size mismatch");
    out.rm.params().values = rm_init;

    RefineTrainConfig rcfg = cfg.refine;
    rcfg.epochs = epochs_rm;
    RngStream rm_train(cfg.seeds.master, stream_id::kRmTrain + salt);
    out.rm_stats = train_refine(out.rm, coarse_dataset(cfg, out.qnet, site.train), rcfg, rm_train,
                                /*early_stop=*/false);

    out.combined_loss = out.drl_stats.final_loss + out.rm_stats.final_loss;
    return out;
}

SiteEvaluation evaluate_site(const ExperimentConfig& cfg, Network& qnet, Network& rm,
                             const std::vector<Sample>& test) {
    if (test.empty()) throw std::invalid_argument("evaluate_site: empty test set");
    SiteEvaluation ev;
    std::vector<double> d1, s1, p1, m1, d2, s2, p2, m2;
    for (const Sample& s : test) {
        const EpisodeResult ep = run_episode_greedy(qnet, s.image, cfg.agent.net);
        const Tensor prob = refine_forward(rm, s.image, ep.final_mask);
        const BinaryMask refined = binarize(prob, cfg.refine.binarize_tau);

        SampleEval se;
        se.drl = evaluate_masks(ep.final_mask, s.gt);
        se.refined = evaluate_masks(refined, s.gt);
        se.refined.mae = mae(prob.data, s.gt); // probabilities when available
        se.dsc_drl = se.drl.dsc;
        se.dsc_refined = se.refined.dsc;
        ev.per_sample.push_back(se);

        d1.push_back(se.drl.dsc);
        s1.push_back(se.drl.sensitivity);
        p1.push_back(se.drl.specificity);
        m1.push_back(se.drl.mae);
        d2.push_back(se.refined.dsc);
        s2.push_back(se.refined.sensitivity);
        p2.push_back(se.refined.specificity);
        m2.push_back(se.refined.mae);
    }
    ev.dsc_drl = mean_std(d1);
    ev.sens_drl = mean_std(s1);
    ev.spec_drl = mean_std(p1);
    ev.mae_drl = mean_std(m1);
    ev.dsc_rm = mean_std(d2);
    ev.sens_rm = mean_std(s2);
    ev.spec_rm = mean_std(p2);
    ev.mae_rm = mean_std(m2);
    return ev;
}

namespace {

void csv_row(std::ostringstream& os, int site, const char* variant, const char* metric,
             const MeanStd& ms) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%s,%s,%.6f,%.6f\n", site, variant, metric, ms.mean,
                  ms.std);
    os << buf;
}

std::string pm(const MeanStd& ms) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f ± %.4f", ms.mean, ms.std);
    return buf;
}

} // namespace

std::string evaluation_csv(const std::vector<std::pair<int, SiteEvaluation>>& per_site) {
    std::ostringstream os;
    os << "site,variant,metric,mean,std\n";
    for (const auto& [site, ev] : per_site) {
        csv_row(os, site, "drl", "dsc", ev.dsc_drl);
        csv_row(os, site, "drl", "sensitivity", ev.sens_drl);
        csv_row(os, site, "drl", "specificity", ev.spec_drl);
        csv_row(os, site, "drl", "mae", ev.mae_drl);
        csv_row(os, site, "drl+rm", "dsc", ev.dsc_rm);
        csv_row(os, site, "drl+rm", "sensitivity", ev.sens_rm);
        csv_row(os, site, "drl+rm", "specificity", ev.spec_rm);
        csv_row(os, site, "drl+rm", "mae", ev.mae_rm);
    }
    return os.str();
}

std::string evaluation_table(const std::vector<std::pair<int, SiteEvaluation>>& per_site) {
    std::ostringstream os;
    os << "Scores           ";
    for (const auto& [site, ev] : per_site) os << "| Site " << site << " (DRL)        ";
    for (const auto& [site, ev] : per_site) os << "| Site " << site << " (DRL+RM)     ";
    os << "\n";
    auto row = [&](const char* name, auto pick_drl, auto pick_rm) {
        os << name;
        for (size_t i = std::strlen(name); i < 17; ++i) os << ' ';
        for (const auto& [site, ev] : per_site) os << "| " << pm(pick_drl(ev)) << "  ";
        for (const auto& [site, ev] : per_site) os << "| " << pm(pick_rm(ev)) << "  ";
        os << "\n";
    };
    row("DSC", [](const SiteEvaluation& e) { return e.dsc_drl; },
        [](const SiteEvaluation& e) { return e.dsc_rm; });
    row("Sensitivity", [](const SiteEvaluation& e) { return e.sens_drl; },
        [](const SiteEvaluation& e) { return e.sens_rm; });
    row("Specificity", [](const SiteEvaluation& e) { return e.spec_drl; },
        [](const SiteEvaluation& e) { return e.spec_rm; });
    row("MAE", [](const SiteEvaluation& e) { return e.mae_drl; },
        [](const SiteEvaluation& e) { return e.mae_rm; });
    return os.str();
}

void render_panels(const ExperimentConfig& cfg, Network& qnet, Network& rm,
                   const std::vector<Sample>& samples, const std::string& out_dir) {
    fs::create_directories(out_dir);
    for (size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        const EpisodeResult ep = run_episode_greedy(qnet, s.image, cfg.agent.net);
        const Tensor prob = refine_forward(rm, s.image, ep.final_mask);
        const BinaryMask refined = binarize(prob, cfg.refine.binarize_tau);

        const int W = s.image.width, H = s.image.height;
        Image2D montage(6 * W, H);
        auto blit_image = [&](int tile, const Image2D& img) {
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) montage.at(tile * W + x, y) = img.at(x, y);
        };
        auto blit_mask = [&](int tile, const BinaryMask& m) {
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    montage.at(tile * W + x, y) = m.at(x, y) ? 255.0f : 0.0f;
        };
        blit_image(0, s.image);
        blit_mask(1, s.gt);
        blit_mask(2, ep.step_masks[0]);
        blit_mask(3, ep.step_masks[1]);
        blit_mask(4, ep.step_masks[2]);
        blit_mask(5, refined);

        char name[64];
        std::snprintf(name, sizeof(name), "panel_%04zu.pgm", i);
        pgm_write(montage, (fs::path(out_dir) / name).string());
    }
}

GlobalModel make_initial_global(const ExperimentConfig& cfg) {
    GlobalModel g;
    Network qnet = build_qnet(cfg.agent.net);
    RngStream drl_rng(cfg.seeds.master, stream_id::kGlobalInit);
    qnet.init_he_uniform(drl_rng);
    g.theta_cdrl = qnet.params();

    Network rm = build_refine_net(cfg.refine.net);
    RngStream rm_rng(cfg.seeds.master, stream_id::kGlobalInit + 1);
    rm.init_he_uniform(rm_rng);
    g.theta_crm = rm.params();
    g.round = 0;
    return g;
}

SiteLocalResult federated_local_round(const ExperimentConfig& cfg, const SiteData& site,
                                      int site_id, int round, const std::vector<float>& drl,
                                      const std::vector<float>& rm) {
    (void)site_id; // identity travels with SiteData; kept for call-site clarity
    const SiteTrainOutcome out =
        train_site_from(cfg, site, drl, rm, cfg.fed.policy.local_epochs,
                        cfg.fed.policy.local_epochs, static_cast<uint64_t>(round));
    return {out.qnet.params().values, out.rm.params().values, out.combined_loss};
}

FedRunResult federated_simulate(const ExperimentConfig& cfg, const std::vector<SiteData>& sites) {
    if (sites.empty()) throw std::invalid_argument("federated_simulate: no sites");
    for (const SiteData& s : sites)
        if (s.train.empty())
            throw std::invalid_argument("federated_simulate: site with empty data");

    std::vector<SiteWeight> weights;
    for (const SiteData& s : sites)
        weights.push_back({s.id, static_cast<uint32_t>(s.train.size()),
                           static_cast<uint32_t>(s.train.size())});

    const SiteTrainer trainer = [&](int site_id, int round, const GlobalModel& current) {
        const SiteData* site = nullptr;
        for (const SiteData& s : sites)
            if (s.id == site_id) site = &s;
        if (!site) throw std::logic_error("federated_simulate: unknown site id");
        return federated_local_round(cfg, *site, site_id, round, current.theta_cdrl.values,
                                     current.theta_crm.values);
    };
    return run_federated(weights, cfg.fed.policy, make_initial_global(cfg), trainer);
}

} // namespace fseg
