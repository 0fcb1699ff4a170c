#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fseg/image.hpp"
#include "fseg/rng.hpp"

namespace fseg {

// Synthetic tissue phantom: a bright WM-like region (the segmentation
// target), a GM-like ring around it, background elsewhere. Intensities are
// normal with a shared sigma, so WM/GM distributions overlap and the
// geometry-defined ground truth is not exactly recoverable by thresholding.
struct PhantomSpec {
    int width = 64;
    int height = 64;
    int blob_count_min = 1;
    int blob_count_max = 4;
    double mu_wm = 180.0;
    double mu_gm = 120.0;
    double mu_bg = 30.0;
    double sigma = 20.0;
    double max_value = 255.0;
    int gm_ring_iters = 3; // dilation radius of the GM ring around WM
};

struct Sample {
    Image2D image;
    BinaryMask gt; // geometry-defined WM region
};

struct ManifestEntry {
    std::string image_path;
    std::string gt_path;
    std::string split; // "train" | "test"
};

struct SiteManifest {
    int id = 0;
    uint32_t n_drl = 0; // DRL training-sample count (federation weight)
    uint32_t n_rm = 0;  // RM training-sample count
    std::vector<ManifestEntry> entries;
};

struct Manifest {
    uint64_t seed = 0;
    int slices_per_subject = 0;
    std::vector<SiteManifest> sites;
};

struct SiteData {
    int id = 0;
    std::vector<Sample> train;
    std::vector<Sample> test;
};

void validate(const PhantomSpec& spec);

// Deterministic for a given (spec, rng state). Intensities are integer
// valued in [0, max_value] so PGM round-trips are bit-exact.
Sample generate_phantom(const PhantomSpec& spec, RngStream& rng);

// Subject-count distribution -> per-site sample lists. Each subject draws
// from its own RngStream (stream_id = global subject index), so sites are
// statistically independent and reproducible in isolation.
std::vector<std::vector<Sample>> generate_site_datasets(const std::vector<int>& distribution,
                                                        int slices_per_subject,
                                                        const PhantomSpec& spec, uint64_t seed);

// Seeded-shuffle split: floor(n*frac) train, the rest test. Exact partition.
std::pair<std::vector<size_t>, std::vector<size_t>> split_train_test(size_t n, double frac,
                                                                     RngStream& rng);

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);

} // namespace fseg
