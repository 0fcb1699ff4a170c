// fseg: federated threshold-segmentation experiments on synthetic phantoms.
//
// Subcommands: gen-data, train-local, fed-coordinator, fed-site, evaluate,
// render-panels, param-count, grad-check. Exit codes: 0 success, 1 runtime
// failure, 2 usage/config errors.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fseg/checkpoint.hpp"
#include "fseg/config.hpp"
#include "fseg/fednet.hpp"
#include "fseg/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

ExperimentConfig load_config_or_exit(const std::string& path) {
    try {
        return load_config(path);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::exit(kExitUsage);
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

std::pair<std::string, uint16_t> parse_endpoint(const std::string& endpoint) {
    const size_t colon = endpoint.rfind(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("endpoint must be host:port, got " + endpoint);
    const int port = std::stoi(endpoint.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::invalid_argument("port out of range");
    return {endpoint.substr(0, colon), static_cast<uint16_t>(port)};
}

std::string train_log_csv(const DrlTrainStats& drl, const RefineTrainStats& rm) {
    std::ostringstream os;
    os << "stage,epoch,mean_reward,mean_loss\n";
    for (size_t e = 0; e < drl.epoch_mean_reward.size(); ++e) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "drl,%zu,%.6f,%.6f\n", e + 1, drl.epoch_mean_reward[e],
                      drl.epoch_mean_loss[e]);
        os << buf;
    }
    for (size_t e = 0; e < rm.epoch_loss.size(); ++e) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "rm,%zu,,%.6f\n", e + 1, rm.epoch_loss[e]);
        os << buf;
    }
    return os.str();
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
    const ExperimentConfig cfg = load_config_or_exit(config_path);
    const Manifest m = generate_dataset(cfg, out_dir);
    size_t total = 0;
    for (const auto& s : m.sites) total += s.entries.size();
    std::cout << "wrote " << m.sites.size() << " sites, " << total << " samples, manifest at "
              << (fs::path(out_dir) / "manifest.json").string() << "\n";
    return kExitOk;
}

int cmd_train_local(const std::string& config_path, const std::string& site_dir,
                    const std::string& out_dir) {
    const ExperimentConfig cfg = load_config_or_exit(config_path);
    const SiteData site = load_site_data(site_dir);
    fs::create_directories(out_dir);
    const SiteTrainOutcome out = train_site(cfg, site);
    save_checkpoint(out.qnet, (fs::path(out_dir) / "drl").string(), out.drl_stats.epochs_run);
    save_checkpoint(out.rm, (fs::path(out_dir) / "rm").string(), out.rm_stats.epochs_run);
    write_text((fs::path(out_dir) / "train_log.csv").string(),
               train_log_csv(out.drl_stats, out.rm_stats));
    std::cout << "site " << site.id << ": drl epochs " << out.drl_stats.epochs_run
              << ", rm epochs " << out.rm_stats.epochs_run << ", combined loss "
              << out.combined_loss << "\n";
    return kExitOk;
}

std::string rounds_csv(const std::vector<double>& losses) {
    std::ostringstream os;
    os << "round,aggregated_loss\n";
    for (size_t r = 0; r < losses.size(); ++r) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%zu,%.6f\n", r + 1, losses[r]);
        os << buf;
    }
    return os.str();
}

void write_global_checkpoints(const ExperimentConfig& cfg, const GlobalModel& model,
                              const std::string& out_dir, int rounds) {
    Network qnet = build_qnet(cfg.agent.net);
    qnet.params().values = model.theta_cdrl.values;
    Network rm = build_refine_net(cfg.refine.net);
    rm.params().values = model.theta_crm.values;
    save_checkpoint(qnet, (fs::path(out_dir) / "global_drl").string(), rounds);
    save_checkpoint(rm, (fs::path(out_dir) / "global_rm").string(), rounds);
}

int cmd_fed_coordinator(const std::string& config_path, const std::string& out_dir,
                        bool simulate, const std::string& data_root, const std::string& listen,
                        const std::string& port_file) {
    const ExperimentConfig cfg = load_config_or_exit(config_path);
    fs::create_directories(out_dir);

    if (simulate) {
        if (data_root.empty()) {
            std::cerr << "error: --simulate requires --data-root\n";
            return kExitUsage;
        }
        std::vector<SiteData> sites;
        for (int k = 1; k <= cfg.fed.expected_sites; ++k)
            sites.push_back(
                load_site_data((fs::path(data_root) / ("site_" + std::to_string(k))).string()));
        const FedRunResult r = federated_simulate(cfg, sites);
        write_global_checkpoints(cfg, r.model, out_dir, r.rounds);
        write_text((fs::path(out_dir) / "rounds.csv").string(), rounds_csv(r.round_losses));
        std::cout << "federated simulation finished after " << r.rounds << " rounds\n";
        return kExitOk;
    }

    const auto [host, port] = parse_endpoint(listen);
    CoordinatorOptions opts;
    opts.host = host;
    opts.port = port;
    opts.expected_sites = cfg.fed.expected_sites;
    const CoordinatorResult r =
        coordinator_serve(opts, cfg.fed.policy, make_initial_global(cfg), [&](uint16_t bound) {
            std::cout << "LISTENING " << bound << std::endl;
            if (!port_file.empty()) write_text(port_file, std::to_string(bound) + "\n");
        });
    write_global_checkpoints(cfg, r.model, out_dir, r.rounds);
    write_text((fs::path(out_dir) / "rounds.csv").string(), rounds_csv(r.round_losses));
    std::cout << "federated run finished after " << r.rounds << " rounds\n";
    return kExitOk;
}

int cmd_fed_site(const std::string& config_path, const std::string& site_dir,
                 const std::string& endpoint) {
    const ExperimentConfig cfg = load_config_or_exit(config_path);
    const SiteData site = load_site_data(site_dir);
    const auto [host, port] = parse_endpoint(endpoint);
    const SiteWeight identity{site.id, static_cast<uint32_t>(site.train.size()),
                              static_cast<uint32_t>(site.train.size())};
    const int rounds = site_client_run(
        host, port, identity,
        [&](int round, const std::vector<float>& drl, const std::vector<float>& rm) {
            return federated_local_round(cfg, site, site.id, round, drl, rm);
        });
    std::cout << "site " << site.id << " done after " << rounds << " rounds\n";
    return kExitOk;
}

int cmd_evaluate(const std::string& config_path, const std::string& site_dir,
                 const std::string& checkpoint_dir, const std::string& out_path,
                 const std::string& drl_name, const std::string& rm_name) {
    const ExperimentConfig cfg = load_config_or_exit(config_path);
    const SiteData site = load_site_data(site_dir);
    if (site.test.empty()) throw std::runtime_error("site has no test split: " + site_dir);

    Network qnet = build_qnet(cfg.agent.net);
    load_checkpoint(qnet, (fs::path(checkpoint_dir) / drl_name).string());
    Network rm = build_refine_net(cfg.refine.net);
    load_checkpoint(rm, (fs::path(checkpoint_dir) / rm_name).string());

    const SiteEvaluation ev = evaluate_site(cfg, qnet, rm, site.test);
    const std::vector<std::pair<int, SiteEvaluation>> table = {{site.id, ev}};
    std::cout << evaluation_table(table);
    if (!out_path.empty()) write_text(out_path, evaluation_csv(table));
    return kExitOk;
}

int cmd_render_panels(const std::string& config_path, const std::string& site_dir,
                      const std::string& checkpoint_dir, const std::string& out_dir,
                      const std::string& drl_name, const std::string& rm_name) {
    const ExperimentConfig cfg = load_config_or_exit(config_path);
    const SiteData site = load_site_data(site_dir);
    Network qnet = build_qnet(cfg.agent.net);
    load_checkpoint(qnet, (fs::path(checkpoint_dir) / drl_name).string());
    Network rm = build_refine_net(cfg.refine.net);
    load_checkpoint(rm, (fs::path(checkpoint_dir) / rm_name).string());
    render_panels(cfg, qnet, rm, site.test, out_dir);
    std::cout << "wrote " << site.test.size() << " panels to " << out_dir << "\n";
    return kExitOk;
}

int cmd_param_count(const std::string& config_path) {
    const ExperimentConfig cfg = load_config_or_exit(config_path);
    const Network qnet = build_qnet(cfg.agent.net);
    const Network rm = build_refine_net(cfg.refine.net);
    std::cout << "DRL parameters:   " << qnet.param_count() << "\n"
              << "RM parameters:    " << rm.param_count() << "\n"
              << "Total parameters: " << qnet.param_count() + rm.param_count() << "\n";
    return kExitOk;
}

int cmd_grad_check(const std::string& config_path, bool inject_fault) {
    load_config_or_exit(config_path); // validate the config up front
    // tiny instances of both architectures keep the full check under seconds
    QNetworkSpec qspec;
    qspec.conv_widths = {2, 4};
    qspec.dense_width = 8;
    qspec.input_size = 16;
    Network qnet = build_qnet(qspec);
    RngStream qrng(17, 0);
    qnet.init_he_uniform(qrng);
    // nudge every parameter off exact ReLU kinks (zero biases on dead
    // channels make one-sided sensitivities the finite difference sees)
    for (auto& p : qnet.params().values) p += static_cast<float>(0.05 * qrng.gaussian());
    Tensor qin({1, 2, 16, 16});
    for (auto& v : qin.data) v = static_cast<float>(qrng.uniform());
    const GradCheckReport qrep = gradient_check(qnet, qin, 1e-4, inject_fault ? 0 : -1);
    std::printf("DRL net: %zu params, max rel error %.3e -> %s\n", qrep.checked,
                qrep.max_rel_error, qrep.pass ? "pass" : "FAIL");

    RefineNetSpec rspec;
    rspec.widths = {2, 2, 2};
    Network rm = build_refine_net(rspec);
    RngStream rrng(2, 0);
    rm.init_he_uniform(rrng);
    for (auto& p : rm.params().values) p += static_cast<float>(0.05 * rrng.gaussian());
    Tensor rin({1, 2, 16, 16});
    for (auto& v : rin.data) v = static_cast<float>(rrng.uniform());
    const GradCheckReport rrep = gradient_check(rm, rin, 1e-4);
    std::printf("RM net:  %zu params, max rel error %.3e -> %s\n", rrep.checked,
                rrep.max_rel_error, rrep.pass ? "pass" : "FAIL");

    return (qrep.pass && rrep.pass) ? kExitOk : kExitRuntime;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated threshold-segmentation experiments on synthetic phantoms"};
    app.require_subcommand(1);

    std::string config_path, out_dir, site_dir, data_root, endpoint = "127.0.0.1:7450";
    std::string checkpoints, out_path, port_file;
    std::string drl_name = "drl", rm_name = "rm";
    bool simulate = false, inject_fault = false;

    auto* gen = app.add_subcommand("gen-data", "generate per-site phantom datasets");
    gen->add_option("--config", config_path, "experiment config (json)")->required();
    gen->add_option("--out", out_dir, "output directory")->required();

    auto* train = app.add_subcommand("train-local", "train DRL + RM on one site's data");
    train->add_option("--config", config_path)->required();
    train->add_option("--site-dir", site_dir, "site data directory")->required();
    train->add_option("--out", out_dir, "checkpoint/log directory")->required();

    auto* coord = app.add_subcommand("fed-coordinator", "run the aggregation coordinator");
    coord->add_option("--config", config_path)->required();
    coord->add_option("--out", out_dir)->required();
    coord->add_flag("--simulate", simulate, "run all sites in-process");
    coord->add_option("--data-root", data_root, "dataset root (simulate mode)");
    coord->add_option("--listen", endpoint, "host:port (port 0 = ephemeral)");
    coord->add_option("--port-file", port_file, "write the bound port here");

    auto* fsite = app.add_subcommand("fed-site", "run one training site against a coordinator");
    fsite->add_option("--config", config_path)->required();
    fsite->add_option("--site-dir", site_dir)->required();
    fsite->add_option("--endpoint", endpoint, "coordinator host:port")->required();

    auto* eval = app.add_subcommand("evaluate", "score checkpoints on a site's test split");
    eval->add_option("--config", config_path)->required();
    eval->add_option("--site-dir", site_dir)->required();
    eval->add_option("--checkpoints", checkpoints, "checkpoint directory")->required();
    eval->add_option("--out", out_path, "CSV output path");
    eval->add_option("--drl-name", drl_name, "DRL checkpoint prefix");
    eval->add_option("--rm-name", rm_name, "RM checkpoint prefix");

    auto* panels = app.add_subcommand("render-panels", "write per-sample montage PGMs");
    panels->add_option("--config", config_path)->required();
    panels->add_option("--site-dir", site_dir)->required();
    panels->add_option("--checkpoints", checkpoints)->required();
    panels->add_option("--out", out_dir)->required();
    panels->add_option("--drl-name", drl_name);
    panels->add_option("--rm-name", rm_name);

    auto* pcount = app.add_subcommand("param-count", "print DRL/RM/total parameter counts");
    pcount->add_option("--config", config_path)->required();

    auto* gcheck = app.add_subcommand("grad-check", "finite-difference check on tiny nets");
    gcheck->add_option("--config", config_path)->required();
    gcheck->add_flag("--inject-grad-fault", inject_fault,
                     "corrupt one analytic gradient (test hook)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // CLI11's non-error exits (--help) return 0; usage errors map to 2
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(config_path, out_dir);
        if (train->parsed()) return cmd_train_local(config_path, site_dir, out_dir);
        if (coord->parsed())
            return cmd_fed_coordinator(config_path, out_dir, simulate, data_root, endpoint,
                                       port_file);
        if (fsite->parsed()) return cmd_fed_site(config_path, site_dir, endpoint);
        if (eval->parsed())
            return cmd_evaluate(config_path, site_dir, checkpoints, out_path, drl_name, rm_name);
        if (panels->parsed())
            return cmd_render_panels(config_path, site_dir, checkpoints, out_dir, drl_name,
                                     rm_name);
        if (pcount->parsed()) return cmd_param_count(config_path);
        if (gcheck->parsed()) return cmd_grad_check(config_path, inject_fault);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
