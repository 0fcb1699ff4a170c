#pragma once

#include <cstdint>
#include <vector>

#include "fseg/image.hpp"

namespace fseg {

struct ConfusionCounts {
    uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    uint64_t total() const { return tp + fp + fn + tn; }
};

struct MetricReport {
    double dsc = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double mae = 0.0;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

// Per-pixel counting against the ground truth; foreground = 1.
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

// 2TP/(2TP+FP+FN); empty-denominator convention: both masks empty -> 1.0.
double dsc(const ConfusionCounts& c);
// TP/(TP+FN) and TN/(TN+FP); 0/0 -> 1.0 by the same convention.
double sensitivity(const ConfusionCounts& c);
double specificity(const ConfusionCounts& c);

double dsc(const BinaryMask& pred, const BinaryMask& gt);

// Mean absolute error; pred may be binary or probabilities in [0,1].
double mae(const std::vector<float>& pred_values, const BinaryMask& gt);
double mae(const BinaryMask& pred, const BinaryMask& gt);

// Iterated 3x3 full-structuring-element dilation; iters=0 is the identity.
BinaryMask dilate(const BinaryMask& mask, int iters);

MetricReport evaluate_masks(const BinaryMask& pred, const BinaryMask& gt);

// Population mean/std (sqrt of mean squared deviation) for report tables.
MeanStd mean_std(const std::vector<double>& xs);

} // namespace fseg
