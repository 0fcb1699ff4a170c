#pragma once

#include <vector>

#include "fseg/image.hpp"
#include "fseg/network.hpp"
#include "fseg/rng.hpp"

namespace fseg {

// Reduced boundary-refinement network: 2-channel input (image + coarse
// mask), three residual encoder blocks with stride-2 downsamples, pyramid
// pooling over a set of grids, and a bilinear-upsampling decoder with skip
// concats down to a 1-channel sigmoid probability map.
struct RefineNetSpec {
    std::vector<int> widths = {16, 32, 64};
    std::vector<int> psp_grids = {1, 2, 3, 6};
};

Network build_refine_net(const RefineNetSpec& spec);

struct RefineLossConfig {
    double lambda_l1 = 1.0;
    double clamp_eps = 1e-7; // probability clamp inside the logs
};

struct RefineTrainConfig {
    RefineNetSpec net;
    RefineLossConfig loss;
    double lr = 1e-3; // Adam
    int batch = 8;
    int epochs = 20;
    int early_stop_patience = 5;
    double early_stop_min_delta = 1e-4;
    double binarize_tau = 0.5;
};

struct RefineExample {
    Image2D image;
    BinaryMask coarse;
    BinaryMask gt;
};

// Probability map [1,1,H,W] in (0,1). Spatial dims are zero-padded up to a
// multiple of 8 for the encoder and cropped back afterwards.
Tensor refine_forward(Network& net, const Image2D& image, const BinaryMask& coarse);

// pixel -> 1 iff prob >= tau
BinaryMask binarize(const Tensor& prob, double tau = 0.5);

// mean BCE + lambda * mean L1, with clamped logs
double refine_loss(const Tensor& pred, const BinaryMask& gt, const RefineLossConfig& cfg);

struct RefineTrainStats {
    std::vector<double> epoch_loss;
    int epochs_run = 0;
    float final_loss = 0.0f;
};

RefineTrainStats train_refine(Network& net, const std::vector<RefineExample>& dataset,
                              const RefineTrainConfig& cfg, RngStream& rng,
                              bool early_stop = true);

} // namespace fseg
