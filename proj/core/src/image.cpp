#include "fseg/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fseg {

void validate(const Image2D& img) {
    if (img.width <= 0 || img.height <= 0)
        throw std::invalid_argument("image: non-positive dimensions");
    if (img.data.size() != static_cast<size_t>(img.width) * img.height)
        throw std::invalid_argument("image: data length != width*height");
    for (float v : img.data)
        if (!std::isfinite(v) || v < 0.0f)
            throw std::invalid_argument("image: intensities must be finite and >= 0");
}

void validate(const BinaryMask& mask) {
    if (mask.width <= 0 || mask.height <= 0)
        throw std::invalid_argument("mask: non-positive dimensions");
    if (mask.data.size() != static_cast<size_t>(mask.width) * mask.height)
        throw std::invalid_argument("mask: data length != width*height");
    for (uint8_t v : mask.data)
        if (v > 1) throw std::invalid_argument("mask: values must be 0 or 1");
}

float image_max_pixel(const Image2D& img) {
    if (img.data.empty()) throw std::invalid_argument("image_max_pixel: empty image");
    return *std::max_element(img.data.begin(), img.data.end());
}

Tensor concat_state(const Image2D& img, const BinaryMask& mask) {
    if (img.width != mask.width || img.height != mask.height)
        throw std::invalid_argument("concat_state: shape mismatch");
    if (img.data.empty()) throw std::invalid_argument("concat_state: empty image");

    float max_p = image_max_pixel(img);
    float scale = max_p > 0.0f ? 1.0f / max_p : 1.0f; // all-zero image: divide by 1

    Tensor out({2, img.height, img.width});
    size_t n = img.size();
    for (size_t i = 0; i < n; ++i) out.data[i] = img.data[i] * scale;
    for (size_t i = 0; i < n; ++i) out.data[n + i] = static_cast<float>(mask.data[i]);
    return out;
}

namespace {
inline int nn_src(int dst, int out_len, int in_len) {
    int s = static_cast<int>((static_cast<int64_t>(dst) * in_len) / out_len);
    return std::min(s, in_len - 1);
}
} // namespace

Image2D resize_nearest(const Image2D& img, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0)
        throw std::invalid_argument("resize_nearest: non-positive target size");
    if (img.width == out_w && img.height == out_h) return img;
    Image2D out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        int sy = nn_src(y, out_h, img.height);
        for (int x = 0; x < out_w; ++x)
            out.at(x, y) = img.at(nn_src(x, out_w, img.width), sy);
    }
    return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0)
        throw std::invalid_argument("resize_nearest: non-positive target size");
    if (mask.width == out_w && mask.height == out_h) return mask;
    BinaryMask out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        int sy = nn_src(y, out_h, mask.height);
        for (int x = 0; x < out_w; ++x)
            out.at(x, y) = mask.at(nn_src(x, out_w, mask.width), sy);
    }
    return out;
}

} // namespace fseg
