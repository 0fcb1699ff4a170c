#include "fseg/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace fseg {

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw std::invalid_argument("confusion: shape mismatch");
    ConfusionCounts c;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const bool p = pred.data[i] != 0;
        const bool g = gt.data[i] != 0;
        if (p && g) ++c.tp;
        else if (p && !g) ++c.fp;
        else if (!p && g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double dsc(const ConfusionCounts& c) {
    const uint64_t denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return 1.0; // both masks empty: perfect match
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double sensitivity(const ConfusionCounts& c) {
    const uint64_t denom = c.tp + c.fn;
    if (denom == 0) return 1.0;
    return static_cast<double>(c.tp) / static_cast<double>(denom);
}

double specificity(const ConfusionCounts& c) {
    const uint64_t denom = c.tn + c.fp;
    if (denom == 0) return 1.0;
    return static_cast<double>(c.tn) / static_cast<double>(denom);
}

double dsc(const BinaryMask& pred, const BinaryMask& gt) { return dsc(confusion(pred, gt)); }

double mae(const std::vector<float>& pred_values, const BinaryMask& gt) {
    if (pred_values.size() != gt.data.size())
        throw std::invalid_argument("mae: shape mismatch");
    if (gt.data.empty()) throw std::invalid_argument("mae: empty mask");
    double acc = 0.0;
    for (size_t i = 0; i < gt.data.size(); ++i)
        acc += std::fabs(static_cast<double>(gt.data[i]) - static_cast<double>(pred_values[i]));
    return acc / static_cast<double>(gt.data.size());
}

double mae(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw std::invalid_argument("mae: shape mismatch");
    std::vector<float> vals(pred.data.begin(), pred.data.end());
    return mae(vals, gt);
}

BinaryMask dilate(const BinaryMask& mask, int iters) {
    if (iters < 0) throw std::invalid_argument("dilate: iters must be >= 0");
    BinaryMask cur = mask;
    const int W = mask.width, H = mask.height;
    for (int it = 0; it < iters; ++it) {
        BinaryMask next(W, H);
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                uint8_t v = 0;
                for (int dy = -1; dy <= 1 && !v; ++dy) {
                    const int yy = y + dy;
                    if (yy < 0 || yy >= H) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = x + dx;
                        if (xx < 0 || xx >= W) continue;
                        if (cur.at(xx, yy)) { v = 1; break; }
                    }
                }
                next.at(x, y) = v;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

MetricReport evaluate_masks(const BinaryMask& pred, const BinaryMask& gt) {
    const ConfusionCounts c = confusion(pred, gt);
    MetricReport r;
    r.dsc = dsc(c);
    r.sensitivity = sensitivity(c);
    r.specificity = specificity(c);
    r.mae = mae(pred, gt);
    return r;
}

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd ms;
    if (xs.empty()) return ms;
    double sum = 0.0;
    for (double x : xs) sum += x;
    ms.mean = sum / static_cast<double>(xs.size());
    double sq = 0.0;
    for (double x : xs) sq += (x - ms.mean) * (x - ms.mean);
    ms.std = std::sqrt(sq / static_cast<double>(xs.size()));
    return ms;
}

} // namespace fseg
