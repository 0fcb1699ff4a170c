#include <doctest.h>

#include <filesystem>

#include "fseg/checkpoint.hpp"
#include "fseg/pgm.hpp"
#include "fseg/pipeline.hpp"

using namespace fseg;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_cfg() {
    ExperimentConfig cfg;
    cfg.seeds.master = 555;
    cfg.data.distribution = {2};
    cfg.data.slices_per_subject = 4;
    cfg.data.phantom.width = 32;
    cfg.data.phantom.height = 32;
    cfg.agent.net.conv_widths = {2, 4};
    cfg.agent.net.dense_width = 16;
    cfg.agent.net.input_size = 16;
    cfg.agent.batch = 8;
    cfg.agent.buffer_capacity = 64;
    cfg.agent.epochs = 2;
    cfg.agent.gamma = 0.0;
    cfg.refine.net.widths = {2, 4, 4};
    cfg.refine.batch = 4;
    cfg.refine.epochs = 2;
    return cfg;
}

SiteData tiny_site(const ExperimentConfig& cfg) {
    const auto samples = generate_site_datasets(cfg.data.distribution,
                                                cfg.data.slices_per_subject, cfg.data.phantom,
                                                cfg.seeds.master)[0];
    SiteData site;
    site.id = 1;
    RngStream split_rng(cfg.seeds.master, stream_id::kSplit + 1);
    const auto [tr, te] = split_train_test(samples.size(), cfg.data.train_frac, split_rng);
    for (size_t i : tr) site.train.push_back(samples[i]);
    for (size_t i : te) site.test.push_back(samples[i]);
    return site;
}

} // namespace

TEST_CASE("evaluate_site agrees with direct metrics computation") {
    const ExperimentConfig cfg = tiny_cfg();
    const SiteData site = tiny_site(cfg);
    SiteTrainOutcome out = train_site(cfg, site);
    const SiteEvaluation ev = evaluate_site(cfg, out.qnet, out.rm, site.test);

    // recompute through the metrics module on the same masks
    std::vector<double> dscs;
    for (const Sample& s : site.test) {
        const EpisodeResult ep = run_episode_greedy(out.qnet, s.image, cfg.agent.net);
        dscs.push_back(dsc(ep.final_mask, s.gt));
    }
    const MeanStd expect = mean_std(dscs);
    CHECK(ev.dsc_drl.mean == doctest::Approx(expect.mean).epsilon(1e-12));
    CHECK(ev.dsc_drl.std == doctest::Approx(expect.std).epsilon(1e-12));

    SUBCASE("formatted table uses the mean-plus-minus-std layout") {
        const std::string table = evaluation_table({{site.id, ev}});
        CHECK(table.find("±") != std::string::npos);
        CHECK(table.find("DSC") != std::string::npos);
        CHECK(table.find("MAE") != std::string::npos);
    }
    SUBCASE("csv rows carry site, variant, metric, mean, std") {
        const std::string csv = evaluation_csv({{site.id, ev}});
        CHECK(csv.rfind("site,variant,metric,mean,std\n", 0) == 0);
        CHECK(csv.find("1,drl,dsc,") != std::string::npos);
        CHECK(csv.find("1,drl+rm,mae,") != std::string::npos);
    }
}

TEST_CASE("an oracle predictor scores DSC 1.0 +/- 0.0") {
    // feed the gt as the prediction through the metrics path evaluate uses
    const ExperimentConfig cfg = tiny_cfg();
    const SiteData site = tiny_site(cfg);
    std::vector<double> dscs;
    for (const Sample& s : site.test) dscs.push_back(dsc(s.gt, s.gt));
    const MeanStd ms = mean_std(dscs);
    CHECK(ms.mean == doctest::Approx(1.0));
    CHECK(ms.std == doctest::Approx(0.0));
}

TEST_CASE("render_panels writes 6-tile montages whose mask tiles match the episode") {
    const ExperimentConfig cfg = tiny_cfg();
    const SiteData site = tiny_site(cfg);
    SiteTrainOutcome out = train_site(cfg, site);

    const fs::path dir = fs::temp_directory_path() / "fseg_panels_test";
    fs::remove_all(dir);
    render_panels(cfg, out.qnet, out.rm, site.test, dir.string());

    const Sample& s0 = site.test[0];
    const EpisodeResult ep = run_episode_greedy(out.qnet, s0.image, cfg.agent.net);
    const Image2D montage = pgm_read((dir / "panel_0000.pgm").string());
    REQUIRE(montage.width == 6 * s0.image.width);
    REQUIRE(montage.height == s0.image.height);

    // tiles 3..5 are the per-step masks, rendered as {0,255}
    for (int step = 0; step < 3; ++step) {
        const int tile = 2 + step;
        for (int y = 0; y < s0.image.height; ++y) {
            for (int x = 0; x < s0.image.width; ++x) {
                const float expect =
                    ep.step_masks[static_cast<size_t>(step)].at(x, y) ? 255.0f : 0.0f;
                REQUIRE(montage.at(tile * s0.image.width + x, y) == expect);
            }
        }
    }
}

TEST_CASE("checkpoints round-trip and reject mismatched architectures") {
    const ExperimentConfig cfg = tiny_cfg();
    Network net = build_qnet(cfg.agent.net);
    RngStream rng(1, 2);
    net.init_he_uniform(rng);

    const fs::path dir = fs::temp_directory_path() / "fseg_ckpt_test";
    fs::create_directories(dir);
    save_checkpoint(net, (dir / "net").string(), 42);

    Network same = build_qnet(cfg.agent.net);
    load_checkpoint(same, (dir / "net").string());
    REQUIRE(same.params().values == net.params().values);

    QNetworkSpec other_spec = cfg.agent.net;
    other_spec.dense_width = 8;
    Network other = build_qnet(other_spec);
    CHECK_THROWS_WITH_AS(load_checkpoint(other, (dir / "net").string()),
                         doctest::Contains("mismatch"), std::runtime_error);
}

TEST_CASE("generate_dataset writes loadable self-contained site dirs") {
    ExperimentConfig cfg = tiny_cfg();
    cfg.data.distribution = {2, 3};
    const fs::path dir = fs::temp_directory_path() / "fseg_gen_test";
    fs::remove_all(dir);
    const Manifest m = generate_dataset(cfg, dir.string());
    REQUIRE(m.sites.size() == 2);
    CHECK(m.sites[0].entries.size() == 8);  // 2 subjects x 4 slices
    CHECK(m.sites[1].entries.size() == 12); // 3 subjects x 4 slices

    const SiteData site2 = load_site_data((dir / "site_2").string());
    CHECK(site2.id == 2);
    CHECK(site2.train.size() + site2.test.size() == 12);
    CHECK(site2.train.size() == static_cast<size_t>(12 * cfg.data.train_frac));
    // loaded pixels match the generator output bit for bit
    const auto regen = generate_site_datasets(cfg.data.distribution, cfg.data.slices_per_subject,
                                              cfg.data.phantom, cfg.seeds.master);
    size_t found = 0;
    for (const Sample& loaded : site2.train) {
        for (const Sample& orig : regen[1])
            if (loaded.image.data == orig.image.data && loaded.gt == orig.gt) {
                ++found;
                break;
            }
    }
    CHECK(found == site2.train.size());
}

TEST_CASE("experiment config: defaults resolve and unknown keys are rejected") {
    const ExperimentConfig defaults = config_from_json("{}");
    CHECK(defaults.data.distribution == std::vector<int>{10, 4, 4});
    CHECK(defaults.data.slices_per_subject == 20);
    CHECK(defaults.env.k == doctest::Approx(5.0));
    CHECK(defaults.env.gate == doctest::Approx(0.7));
    CHECK(defaults.agent.gamma == doctest::Approx(0.9));
    CHECK(defaults.agent.buffer_capacity == 10000);
    CHECK(defaults.fed.policy.local_epochs == 10);
    CHECK(defaults.refine.net.psp_grids == std::vector<int>{1, 2, 3, 6});

    CHECK_THROWS_WITH_AS(config_from_json(R"({"datum": {}})"),
                         doctest::Contains("unknown key"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"agent": {"learning_rate": 0.1}})"),
                         doctest::Contains("unknown key"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"env": {"gate": 1.5}})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json("not json"), std::invalid_argument);

    // round-trips through the serializer
    const std::string text = config_to_json(defaults);
    const ExperimentConfig back = config_from_json(text);
    CHECK(back.agent.lr == defaults.agent.lr);
    CHECK(back.data.phantom.sigma == defaults.data.phantom.sigma);
}
