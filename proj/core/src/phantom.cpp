#include "fseg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fseg/metrics.hpp"
#include <json.hpp>

namespace fseg {

void validate(const PhantomSpec& spec) {
    if (spec.width <= 0 || spec.height <= 0)
        throw std::invalid_argument("phantom: non-positive dimensions");
    if (!(spec.mu_bg < spec.mu_gm && spec.mu_gm < spec.mu_wm))
        throw std::invalid_argument("phantom: intensity means must satisfy bg < gm < wm");
    if (!(spec.sigma >= 0.0)) throw std::invalid_argument("phantom: sigma must be >= 0");
    if (spec.blob_count_min < 1 || spec.blob_count_max < spec.blob_count_min)
        throw std::invalid_argument("phantom: bad blob count range");
    if (spec.max_value <= 0.0) throw std::invalid_argument("phantom: bad max value");
}

Sample generate_phantom(const PhantomSpec& spec, RngStream& rng) {
    validate(spec);
    const int W = spec.width, H = spec.height;

    // WM region: union of 1..4 filled ellipses kept away from the border
    BinaryMask wm(W, H);
    const int blobs = spec.blob_count_min +
                      static_cast<int>(rng.uniform_int(
                          static_cast<uint32_t>(spec.blob_count_max - spec.blob_count_min + 1)));
    const double min_ax = 0.09 * std::min(W, H);
    const double max_ax = 0.16 * std::min(W, H);
    for (int b = 0; b < blobs; ++b) {
        const double a = min_ax + rng.uniform() * (max_ax - min_ax);
        const double bb = min_ax + rng.uniform() * (max_ax - min_ax);
        const double theta = rng.uniform() * M_PI;
        const double margin = std::max(a, bb) + 2.0;
        const double cx = margin + rng.uniform() * (W - 2.0 * margin);
        const double cy = margin + rng.uniform() * (H - 2.0 * margin);
        const double ct = std::cos(theta), st = std::sin(theta);
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                const double dx = x - cx, dy = y - cy;
                const double u = dx * ct + dy * st;
                const double v = -dx * st + dy * ct;
                if ((u * u) / (a * a) + (v * v) / (bb * bb) <= 1.0) wm.at(x, y) = 1;
            }
        }
    }

    // GM ring = dilated WM minus WM
    const BinaryMask ring_outer = dilate(wm, spec.gm_ring_iters);

    Image2D img(W, H);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double mu = spec.mu_bg;
            if (wm.at(x, y)) mu = spec.mu_wm;
            else if (ring_outer.at(x, y)) mu = spec.mu_gm;
            double v = rng.gaussian(mu, spec.sigma);
            v = std::clamp(v, 0.0, spec.max_value);
            img.at(x, y) = static_cast<float>(std::round(v)); // integer-valued for PGM
        }
    }
    return {std::move(img), std::move(wm)};
}

std::vector<std::vector<Sample>> generate_site_datasets(const std::vector<int>& distribution,
                                                        int slices_per_subject,
                                                        const PhantomSpec& spec, uint64_t seed) {
    if (distribution.empty()) throw std::invalid_argument("datasets: empty distribution");
    for (int c : distribution)
        if (c < 1) throw std::invalid_argument("datasets: subject counts must be >= 1");
    if (slices_per_subject < 1)
        throw std::invalid_argument("datasets: slices_per_subject must be >= 1");

    std::vector<std::vector<Sample>> sites;
    uint64_t subject = 0;
    for (int count : distribution) {
        std::vector<Sample> samples;
        samples.reserve(static_cast<size_t>(count) * slices_per_subject);
        for (int s = 0; s < count; ++s, ++subject) {
            RngStream rng(seed, subject); // one stream per subject
            for (int k = 0; k < slices_per_subject; ++k)
                samples.push_back(generate_phantom(spec, rng));
        }
        sites.push_back(std::move(samples));
    }
    return sites;
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_train_test(size_t n, double frac,
                                                                     RngStream& rng) {
    if (!(frac > 0.0 && frac < 1.0))
        throw std::invalid_argument("split: frac must be in (0,1)");
    if (n < 2) throw std::invalid_argument("split: need at least 2 samples");
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    // Fisher-Yates with our own stream (std::shuffle is not portable)
    for (size_t i = n - 1; i > 0; --i) {
        const size_t j = rng.uniform_int(static_cast<uint32_t>(i + 1));
        std::swap(idx[i], idx[j]);
    }
    const size_t n_train = static_cast<size_t>(std::floor(static_cast<double>(n) * frac));
    std::vector<size_t> train(idx.begin(), idx.begin() + static_cast<long>(n_train));
    std::vector<size_t> test(idx.begin() + static_cast<long>(n_train), idx.end());
    return {std::move(train), std::move(test)};
}

std::string manifest_to_json(const Manifest& m) {
    nlohmann::ordered_json j;
    j["seed"] = m.seed;
    j["slices_per_subject"] = m.slices_per_subject;
    j["sites"] = nlohmann::ordered_json::array();
    for (const SiteManifest& s : m.sites) {
        nlohmann::ordered_json js;
        js["id"] = s.id;
        js["n_drl"] = s.n_drl;
        js["n_rm"] = s.n_rm;
        js["files"] = nlohmann::ordered_json::array();
        for (const ManifestEntry& e : s.entries) {
            js["files"].push_back({{"image", e.image_path}, {"gt", e.gt_path}, {"split", e.split}});
        }
        j["sites"].push_back(std::move(js));
    }
    return j.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Manifest m;
    m.seed = j.at("seed").get<uint64_t>();
    m.slices_per_subject = j.at("slices_per_subject").get<int>();
    for (const auto& js : j.at("sites")) {
        SiteManifest s;
        s.id = js.at("id").get<int>();
        s.n_drl = js.at("n_drl").get<uint32_t>();
        s.n_rm = js.at("n_rm").get<uint32_t>();
        for (const auto& je : js.at("files")) {
            ManifestEntry e;
            e.image_path = je.at("image").get<std::string>();
            e.gt_path = je.at("gt").get<std::string>();
            e.split = je.at("split").get<std::string>();
            if (e.split != "train" && e.split != "test")
                throw std::invalid_argument("manifest: split must be train or test");
            s.entries.push_back(std::move(e));
        }
        m.sites.push_back(std::move(s));
    }
    return m;
}

} // namespace fseg
