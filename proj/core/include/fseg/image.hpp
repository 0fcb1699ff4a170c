#pragma once

#include <cstdint>
#include <vector>

#include "fseg/tensor.hpp"

namespace fseg {

// Row-major float intensity grid, values finite and >= 0.
struct Image2D {
    int width = 0;
    int height = 0;
    std::vector<float> data; // size == width * height

    Image2D() = default;
    Image2D(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return data.size(); }
};

// {0,1} segmentation mask, same shape discipline as Image2D.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data; // values strictly 0 or 1

    BinaryMask() = default;
    BinaryMask(int w, int h, uint8_t fill = 0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return data.size(); }

    bool operator==(const BinaryMask& o) const {
        return width == o.width && height == o.height && data == o.data;
    }
};

// Validates shape/value invariants; throws std::invalid_argument on violation.
void validate(const Image2D& img);
void validate(const BinaryMask& mask);

// Max over all pixels. Throws on an empty image.
float image_max_pixel(const Image2D& img);

// 2-channel observation [2,H,W]: channel 0 = intensities / max_p (max_p
// treated as 1 when the image is all zero), channel 1 = mask as floats.
Tensor concat_state(const Image2D& img, const BinaryMask& mask);

// Nearest-neighbor resize, used to shrink environment images for the Q-network.
Image2D resize_nearest(const Image2D& img, int out_w, int out_h);
BinaryMask resize_nearest(const BinaryMask& mask, int out_w, int out_h);

} // namespace fseg
