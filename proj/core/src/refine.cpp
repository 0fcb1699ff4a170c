#include "fseg/refine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fseg {

Network build_refine_net(const RefineNetSpec& spec) {
    if (spec.widths.size() != 3) throw std::invalid_argument("refine: need three block widths");
    if (spec.psp_grids.empty()) throw std::invalid_argument("refine: need pyramid grids");
    const int w0 = spec.widths[0], w1 = spec.widths[1], w2 = spec.widths[2];
    std::vector<LayerSpec> L;
    auto res_block = [&L](int in_ch, int out_ch) {
        // stride-2 projection, then two convs with a residual add
        L.push_back(LayerSpec::conv2d(in_ch, out_ch, 3, 2, 1));
        L.push_back(LayerSpec::relu());
        const int block_in = static_cast<int>(L.size()) - 1;
        L.push_back(LayerSpec::conv2d(out_ch, out_ch, 3, 1, 1));
        L.push_back(LayerSpec::relu());
        L.push_back(LayerSpec::conv2d(out_ch, out_ch, 3, 1, 1));
        L.push_back(LayerSpec::add(block_in));
        L.push_back(LayerSpec::relu());
        return static_cast<int>(L.size()) - 1; // block output index
    };

    const int b1 = res_block(2, w0);  // H/2
    const int b2 = res_block(w0, w1); // H/4
    const int b3 = res_block(w1, w2); // H/8

    // pyramid pooling: each branch pools the encoder output to an s x s
    // grid and bilinearly upsamples back; branches are concat-accumulated
    int concat_head = b3;
    int channels = w2;
    for (size_t gi = 0; gi < spec.psp_grids.size(); ++gi) {
        L.push_back(LayerSpec::avgpool_to_grid(spec.psp_grids[gi], b3));
        const int pooled = static_cast<int>(L.size()) - 1;
        LayerSpec cc = LayerSpec::concat_ch(pooled);
        cc.input = concat_head;
        L.push_back(cc);
        concat_head = static_cast<int>(L.size()) - 1;
        channels += w2;
    }
    L.push_back(LayerSpec::conv2d(channels, w2, 1, 1, 0)); // psp reduce
    L.push_back(LayerSpec::relu());

    // decoder: upsample, concat the encoder skip, conv
    L.push_back(LayerSpec::upsample_bilinear(2)); // H/4
    L.push_back(LayerSpec::concat_ch(b2));
    L.push_back(LayerSpec::conv2d(w2 + w1, w1, 3, 1, 1));
    L.push_back(LayerSpec::relu());
    L.push_back(LayerSpec::upsample_bilinear(2)); // H/2
    L.push_back(LayerSpec::concat_ch(b1));
    L.push_back(LayerSpec::conv2d(w1 + w0, w0, 3, 1, 1));
    L.push_back(LayerSpec::relu());
    L.push_back(LayerSpec::upsample_bilinear(2)); // H
    L.push_back(LayerSpec::concat_ch(LayerSpec::kInput));
    L.push_back(LayerSpec::conv2d(w0 + 2, w0, 3, 1, 1));
    L.push_back(LayerSpec::relu());
    L.push_back(LayerSpec::conv2d(w0, 1, 1, 1, 0));
    L.push_back(LayerSpec::sigmoid());
    return Network(std::move(L));
}

namespace {

// 2-channel refine input, zero-padded to a multiple of 8
Tensor make_refine_input(const Image2D& image, const BinaryMask& coarse, int& padded_h,
                         int& padded_w) {
    if (image.width != coarse.width || image.height != coarse.height)
        throw std::invalid_argument("refine: image/coarse shape mismatch");
    const float max_p = image_max_pixel(image);
    const float scale = max_p > 0.0f ? 1.0f / max_p : 1.0f;
    padded_h = (image.height + 7) / 8 * 8;
    padded_w = (image.width + 7) / 8 * 8;
    Tensor in({1, 2, padded_h, padded_w});
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            in.data[static_cast<size_t>(y) * padded_w + x] = image.at(x, y) * scale;
    const size_t plane = static_cast<size_t>(padded_h) * padded_w;
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            in.data[plane + static_cast<size_t>(y) * padded_w + x] =
                static_cast<float>(coarse.at(x, y));
    return in;
}

Tensor crop_output(const Tensor& out, int h, int w) {
    if (out.dim(2) == h && out.dim(3) == w) return out;
    Tensor cropped({out.dim(0), out.dim(1), h, w});
    const int PW = out.dim(3);
    for (int n = 0; n < out.dim(0); ++n)
        for (int c = 0; c < out.dim(1); ++c) {
            const size_t src = (static_cast<size_t>(n) * out.dim(1) + c) *
                               static_cast<size_t>(out.dim(2)) * PW;
            const size_t dst =
                (static_cast<size_t>(n) * out.dim(1) + c) * static_cast<size_t>(h) * w;
            for (int y = 0; y < h; ++y)
                std::copy_n(out.data.begin() + static_cast<long>(src + static_cast<size_t>(y) * PW),
                            w, cropped.data.begin() + static_cast<long>(dst + static_cast<size_t>(y) * w));
        }
    return cropped;
}

} // namespace

Tensor refine_forward(Network& net, const Image2D& image, const BinaryMask& coarse) {
    int ph = 0, pw = 0;
    const Tensor in = make_refine_input(image, coarse, ph, pw);
    const Tensor out = net.forward(in);
    return crop_output(out, image.height, image.width);
}

BinaryMask binarize(const Tensor& prob, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("binarize: tau out of (0,1)");
    if (prob.shape.size() != 4 || prob.dim(0) != 1 || prob.dim(1) != 1)
        throw std::invalid_argument("binarize: expected a [1,1,H,W] map");
    BinaryMask mask(prob.dim(3), prob.dim(2));
    for (size_t i = 0; i < mask.data.size(); ++i)
        mask.data[i] = prob.data[i] >= static_cast<float>(tau) ? 1 : 0;
    return mask;
}

double refine_loss(const Tensor& pred, const BinaryMask& gt, const RefineLossConfig& cfg) {
    if (pred.size() != gt.data.size()) throw std::invalid_argument("refine_loss: shape mismatch");
    const double eps = cfg.clamp_eps;
    double bce = 0.0, l1 = 0.0;
    for (size_t i = 0; i < gt.data.size(); ++i) {
        const double p = std::clamp(static_cast<double>(pred.data[i]), eps, 1.0 - eps);
        const double y = gt.data[i];
        bce += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        l1 += std::fabs(static_cast<double>(pred.data[i]) - y);
    }
    const double n = static_cast<double>(gt.data.size());
    return bce / n + cfg.lambda_l1 * (l1 / n);
}

namespace {

// dL/dpred for BCE + lambda*L1, epsilon-guarded denominators; reads the
// per-sample view, writes into the batch upstream at `offset`
void loss_upstream(const Tensor& pred_view, const BinaryMask& gt, const RefineLossConfig& cfg,
                   double batch_scale, Tensor& upstream, size_t offset) {
    const double n = static_cast<double>(gt.data.size());
    for (size_t i = 0; i < gt.data.size(); ++i) {
        const double p = pred_view.data[i];
        const double y = gt.data[i];
        const double pc = std::clamp(p, cfg.clamp_eps, 1.0 - cfg.clamp_eps);
        double g = (-y / pc + (1.0 - y) / (1.0 - pc)) / n;
        const double diff = p - y;
        if (diff > 0) g += cfg.lambda_l1 / n;
        else if (diff < 0) g -= cfg.lambda_l1 / n;
        upstream.data[offset + i] = static_cast<float>(g * batch_scale);
    }
}

} // namespace

RefineTrainStats train_refine(Network& net, const std::vector<RefineExample>& dataset,
                              const RefineTrainConfig& cfg, RngStream& rng, bool early_stop) {
    if (dataset.empty()) throw std::invalid_argument("train_refine: empty dataset");

    OptimizerState opt = OptimizerState::adam(cfg.lr);
    RefineTrainStats stats;
    double best_loss = 1e300;
    int wait = 0;

    std::vector<size_t> order(dataset.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // seeded shuffle each epoch
        for (size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_int(static_cast<uint32_t>(i + 1))]);

        double loss_sum = 0.0;
        size_t batches = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
            const size_t B = end - start;

            // assemble padded batch input
            int ph = 0, pw = 0;
            std::vector<Tensor> inputs;
            inputs.reserve(B);
            for (size_t k = start; k < end; ++k)
                inputs.push_back(make_refine_input(dataset[order[k]].image,
                                                   dataset[order[k]].coarse, ph, pw));
            Tensor batch_in({static_cast<int>(B), 2, ph, pw});
            const size_t stride = inputs[0].size();
            for (size_t k = 0; k < B; ++k)
                std::copy(inputs[k].data.begin(), inputs[k].data.end(),
                          batch_in.data.begin() + static_cast<long>(k * stride));

            const Tensor pred = net.forward(batch_in);
            Tensor upstream(pred.shape);
            double batch_loss = 0.0;
            const size_t out_stride = static_cast<size_t>(ph) * pw;
            for (size_t k = 0; k < B; ++k) {
                const RefineExample& ex = dataset[order[start + k]];
                // padded region has gt 0 and contributes like background
                BinaryMask padded_gt(pw, ph);
                for (int y = 0; y < ex.gt.height; ++y)
                    for (int x = 0; x < ex.gt.width; ++x)
                        padded_gt.at(x, y) = ex.gt.at(x, y);
                Tensor view({1, 1, ph, pw},
                            std::vector<float>(pred.data.begin() + static_cast<long>(k * out_stride),
                                               pred.data.begin() +
                                                   static_cast<long>((k + 1) * out_stride)));
                batch_loss += refine_loss(view, padded_gt, cfg.loss);
                loss_upstream(view, padded_gt, cfg.loss, 1.0 / static_cast<double>(B), upstream,
                              k * out_stride);
            }
            batch_loss /= static_cast<double>(B);
            net.backward(upstream);
            optimizer_step(opt, net);
            loss_sum += batch_loss;
            ++batches;
        }
        const double epoch_loss = loss_sum / static_cast<double>(batches);
        stats.epoch_loss.push_back(epoch_loss);
        stats.epochs_run = epoch + 1;
        stats.final_loss = static_cast<float>(epoch_loss);

        if (early_stop) {
            if (epoch_loss < best_loss - cfg.early_stop_min_delta) {
                best_loss = epoch_loss;
                wait = 0;
            } else if (++wait >= cfg.early_stop_patience) {
                break;
            }
        }
    }
    return stats;
}

} // namespace fseg
