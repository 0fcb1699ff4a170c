#pragma once

// Templated forward/backward kernels over LayerSpec graphs. The float
// instantiation is the training path; the double instantiation backs the
// finite-difference gradient oracle. Layers form a sequence where each
// layer reads the previous output by default; Add/ConcatCh additionally
// read a skip source, and any layer may override its main input. Sources
// always reference earlier layers (or -1, the network input).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fseg/tensor.hpp"

namespace fseg {

enum class LayerKind : uint8_t {
    Conv2D,
    Dense,
    ReLU,
    Sigmoid,
    MaxPool2,
    UpsampleBilinear,
    AvgPoolToGrid,
    Add,
    ConcatCh,
};

struct LayerSpec {
    static constexpr int kPrev = -2;  // main input: previous layer
    static constexpr int kInput = -1; // network input

    LayerKind kind = LayerKind::ReLU;
    int in_ch = 0, out_ch = 0, ksize = 0, stride = 1, pad = 0; // Conv2D
    int in_features = 0, out_features = 0;                     // Dense
    int factor = 0;                                            // UpsampleBilinear
    int grid = 0;                                              // AvgPoolToGrid
    int source = kPrev; // Add / ConcatCh skip source
    int input = kPrev;  // main input override

    static LayerSpec conv2d(int in_ch, int out_ch, int k, int stride = 1, int pad = 0) {
        LayerSpec s;
        s.kind = LayerKind::Conv2D;
        s.in_ch = in_ch;
        s.out_ch = out_ch;
        s.ksize = k;
        s.stride = stride;
        s.pad = pad;
        return s;
    }
    static LayerSpec dense(int in, int out) {
        LayerSpec s;
        s.kind = LayerKind::Dense;
        s.in_features = in;
        s.out_features = out;
        return s;
    }
    static LayerSpec relu() {
        LayerSpec s;
        s.kind = LayerKind::ReLU;
        return s;
    }
    static LayerSpec sigmoid() {
        LayerSpec s;
        s.kind = LayerKind::Sigmoid;
        return s;
    }
    static LayerSpec maxpool2() {
        LayerSpec s;
        s.kind = LayerKind::MaxPool2;
        return s;
    }
    static LayerSpec upsample_bilinear(int factor) {
        LayerSpec s;
        s.kind = LayerKind::UpsampleBilinear;
        s.factor = factor;
        return s;
    }
    static LayerSpec avgpool_to_grid(int grid, int input = kPrev) {
        LayerSpec s;
        s.kind = LayerKind::AvgPoolToGrid;
        s.grid = grid;
        s.input = input;
        return s;
    }
    static LayerSpec add(int source) {
        LayerSpec s;
        s.kind = LayerKind::Add;
        s.source = source;
        return s;
    }
    static LayerSpec concat_ch(int source) {
        LayerSpec s;
        s.kind = LayerKind::ConcatCh;
        s.source = source;
        return s;
    }

    // parameter tensor sizes; zero for parameterless layers
    size_t weight_count() const {
        switch (kind) {
            case LayerKind::Conv2D:
                return static_cast<size_t>(out_ch) * in_ch * ksize * ksize;
            case LayerKind::Dense:
                return static_cast<size_t>(in_features) * out_features;
            default:
                return 0;
        }
    }
    size_t bias_count() const {
        switch (kind) {
            case LayerKind::Conv2D:
                return static_cast<size_t>(out_ch);
            case LayerKind::Dense:
                return static_cast<size_t>(out_features);
            default:
                return 0;
        }
    }
};

const char* layer_kind_name(LayerKind k);

namespace nn {

struct ParamIndex {
    size_t w_off = 0, w_len = 0, b_off = 0, b_len = 0;
};

// Offsets of each layer's weights/biases in the flat parameter array,
// enumerated in layer order (the deterministic layout contract).
std::vector<ParamIndex> build_param_index(const std::vector<LayerSpec>& layers);
size_t total_param_count(const std::vector<LayerSpec>& layers);

// Structural validation: acyclic sources, positive hyperparameters.
void validate_layers(const std::vector<LayerSpec>& layers);

template <typename T>
struct ForwardCache {
    TensorT<T> input;
    std::vector<TensorT<T>> acts;          // per-layer outputs
    std::vector<std::vector<size_t>> pool; // MaxPool2 argmax (flat input offsets)
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

template <typename T>
void conv2d_forward(const TensorT<T>& in, const T* w, const T* b, const LayerSpec& s,
                    TensorT<T>& out) {
    require(in.shape.size() == 4, "conv2d: input must be [N,C,H,W]");
    const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    require(C == s.in_ch, "conv2d: channel mismatch");
    const int K = s.ksize, st = s.stride, P = s.pad, OC = s.out_ch;
    const int OH = (H + 2 * P - K) / st + 1;
    const int OW = (W + 2 * P - K) / st + 1;
    require(OH > 0 && OW > 0, "conv2d: output would be empty");
    out = TensorT<T>({N, OC, OH, OW});
    for (int n = 0; n < N; ++n) {
        const T* inp = in.data.data() + static_cast<size_t>(n) * C * H * W;
        T* outp = out.data.data() + static_cast<size_t>(n) * OC * OH * OW;
        for (int oc = 0; oc < OC; ++oc) {
            for (int oy = 0; oy < OH; ++oy) {
                for (int ox = 0; ox < OW; ++ox) {
                    T acc = b[oc];
                    for (int c = 0; c < C; ++c) {
                        const T* plane = inp + static_cast<size_t>(c) * H * W;
                        const T* wket = w + ((static_cast<size_t>(oc) * C + c) * K) * K;
                        for (int ky = 0; ky < K; ++ky) {
                            const int iy = oy * st - P + ky;
                            if (iy < 0 || iy >= H) continue;
                            for (int kx = 0; kx < K; ++kx) {
                                const int ix = ox * st - P + kx;
                                if (ix < 0 || ix >= W) continue;
                                acc += plane[static_cast<size_t>(iy) * W + ix] *
                                       wket[static_cast<size_t>(ky) * K + kx];
                            }
                        }
                    }
                    outp[(static_cast<size_t>(oc) * OH + oy) * OW + ox] = acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward(const TensorT<T>& in, const T* w, const LayerSpec& s,
                     const TensorT<T>& gout, TensorT<T>& gin, T* gw, T* gb) {
    const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    const int K = s.ksize, st = s.stride, P = s.pad, OC = s.out_ch;
    const int OH = gout.dim(2), OW = gout.dim(3);
    for (int n = 0; n < N; ++n) {
        const T* inp = in.data.data() + static_cast<size_t>(n) * C * H * W;
        T* ginp = gin.data.data() + static_cast<size_t>(n) * C * H * W;
        const T* goutp = gout.data.data() + static_cast<size_t>(n) * OC * OH * OW;
        for (int oc = 0; oc < OC; ++oc) {
            for (int oy = 0; oy < OH; ++oy) {
                for (int ox = 0; ox < OW; ++ox) {
                    const T g = goutp[(static_cast<size_t>(oc) * OH + oy) * OW + ox];
                    gb[oc] += g;
                    for (int c = 0; c < C; ++c) {
                        const T* plane = inp + static_cast<size_t>(c) * H * W;
                        T* gplane = ginp + static_cast<size_t>(c) * H * W;
                        const size_t wbase = ((static_cast<size_t>(oc) * C + c) * K) * K;
                        for (int ky = 0; ky < K; ++ky) {
                            const int iy = oy * st - P + ky;
                            if (iy < 0 || iy >= H) continue;
                            for (int kx = 0; kx < K; ++kx) {
                                const int ix = ox * st - P + kx;
                                if (ix < 0 || ix >= W) continue;
                                const size_t ii = static_cast<size_t>(iy) * W + ix;
                                gplane[ii] += g * w[wbase + static_cast<size_t>(ky) * K + kx];
                                gw[wbase + static_cast<size_t>(ky) * K + kx] += g * plane[ii];
                            }
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void dense_forward(const TensorT<T>& in, const T* w, const T* b, const LayerSpec& s,
                   TensorT<T>& out) {
    require(in.shape.size() >= 2, "dense: input must have a batch dimension");
    const int N = in.dim(0);
    const size_t F = in.size() / static_cast<size_t>(N); // implicit flatten
    require(F == static_cast<size_t>(s.in_features), "dense: feature count mismatch");
    const int O = s.out_features;
    out = TensorT<T>({N, O});
    for (int n = 0; n < N; ++n) {
        const T* x = in.data.data() + static_cast<size_t>(n) * F;
        T* y = out.data.data() + static_cast<size_t>(n) * O;
        for (int o = 0; o < O; ++o) {
            T acc = b[o];
            const T* wrow = w + static_cast<size_t>(o) * F;
            for (size_t f = 0; f < F; ++f) acc += x[f] * wrow[f];
            y[o] = acc;
        }
    }
}

template <typename T>
void dense_backward(const TensorT<T>& in, const T* w, const LayerSpec& s,
                    const TensorT<T>& gout, TensorT<T>& gin, T* gw, T* gb) {
    const int N = in.dim(0);
    const size_t F = in.size() / static_cast<size_t>(N);
    const int O = s.out_features;
    for (int n = 0; n < N; ++n) {
        const T* x = in.data.data() + static_cast<size_t>(n) * F;
        T* gx = gin.data.data() + static_cast<size_t>(n) * F;
        const T* gy = gout.data.data() + static_cast<size_t>(n) * O;
        for (int o = 0; o < O; ++o) {
            const T g = gy[o];
            gb[o] += g;
            const T* wrow = w + static_cast<size_t>(o) * F;
            T* gwrow = gw + static_cast<size_t>(o) * F;
            for (size_t f = 0; f < F; ++f) {
                gx[f] += g * wrow[f];
                gwrow[f] += g * x[f];
            }
        }
    }
}

// align_corners=false sampling; indices clamp at the border
template <typename T>
void bilinear_resize_forward(const TensorT<T>& in, int OH, int OW, TensorT<T>& out) {
    require(in.shape.size() == 4, "bilinear: input must be [N,C,H,W]");
    const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    out = TensorT<T>({N, C, OH, OW});
    const double sy = static_cast<double>(H) / OH;
    const double sx = static_cast<double>(W) / OW;
    for (int oy = 0; oy < OH; ++oy) {
        double fy = (oy + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        if (y0 < 0) { y0 = 0; wy = 0.0; }
        int y1 = y0 + 1 < H ? y0 + 1 : H - 1;
        if (y0 >= H - 1) { y0 = H - 1; y1 = H - 1; wy = 0.0; }
        for (int ox = 0; ox < OW; ++ox) {
            double fx = (ox + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            if (x0 < 0) { x0 = 0; wx = 0.0; }
            int x1 = x0 + 1 < W ? x0 + 1 : W - 1;
            if (x0 >= W - 1) { x0 = W - 1; x1 = W - 1; wx = 0.0; }
            const T w00 = static_cast<T>((1 - wy) * (1 - wx));
            const T w01 = static_cast<T>((1 - wy) * wx);
            const T w10 = static_cast<T>(wy * (1 - wx));
            const T w11 = static_cast<T>(wy * wx);
            for (int n = 0; n < N; ++n) {
                for (int c = 0; c < C; ++c) {
                    const T* p = in.data.data() +
                                 ((static_cast<size_t>(n) * C + c) * H) * static_cast<size_t>(W);
                    out.data[((static_cast<size_t>(n) * C + c) * OH + oy) * OW + ox] =
                        w00 * p[static_cast<size_t>(y0) * W + x0] +
                        w01 * p[static_cast<size_t>(y0) * W + x1] +
                        w10 * p[static_cast<size_t>(y1) * W + x0] +
                        w11 * p[static_cast<size_t>(y1) * W + x1];
                }
            }
        }
    }
}

template <typename T>
void bilinear_resize_backward(const std::vector<int>& in_shape, const TensorT<T>& gout,
                              TensorT<T>& gin) {
    const int N = in_shape[0], C = in_shape[1], H = in_shape[2], W = in_shape[3];
    const int OH = gout.dim(2), OW = gout.dim(3);
    const double sy = static_cast<double>(H) / OH;
    const double sx = static_cast<double>(W) / OW;
    for (int oy = 0; oy < OH; ++oy) {
        double fy = (oy + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        if (y0 < 0) { y0 = 0; wy = 0.0; }
        int y1 = y0 + 1 < H ? y0 + 1 : H - 1;
        if (y0 >= H - 1) { y0 = H - 1; y1 = H - 1; wy = 0.0; }
        for (int ox = 0; ox < OW; ++ox) {
            double fx = (ox + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            if (x0 < 0) { x0 = 0; wx = 0.0; }
            int x1 = x0 + 1 < W ? x0 + 1 : W - 1;
            if (x0 >= W - 1) { x0 = W - 1; x1 = W - 1; wx = 0.0; }
            const T w00 = static_cast<T>((1 - wy) * (1 - wx));
            const T w01 = static_cast<T>((1 - wy) * wx);
            const T w10 = static_cast<T>(wy * (1 - wx));
            const T w11 = static_cast<T>(wy * wx);
            for (int n = 0; n < N; ++n) {
                for (int c = 0; c < C; ++c) {
                    T* gp = gin.data.data() +
                            ((static_cast<size_t>(n) * C + c) * H) * static_cast<size_t>(W);
                    const T g =
                        gout.data[((static_cast<size_t>(n) * C + c) * OH + oy) * OW + ox];
                    gp[static_cast<size_t>(y0) * W + x0] += w00 * g;
                    gp[static_cast<size_t>(y0) * W + x1] += w01 * g;
                    gp[static_cast<size_t>(y1) * W + x0] += w10 * g;
                    gp[static_cast<size_t>(y1) * W + x1] += w11 * g;
                }
            }
        }
    }
}

// adaptive cell [floor(i*H/s), ceil((i+1)*H/s)) -- never empty, may overlap
inline void grid_cell(int i, int len, int s, int& lo, int& hi) {
    lo = (i * len) / s;
    hi = ((i + 1) * len + s - 1) / s;
    if (hi > len) hi = len;
}

template <typename T>
void avgpool_grid(const TensorT<T>& in, int s, TensorT<T>& pooled) {
    const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    pooled = TensorT<T>({N, C, s, s});
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            const T* p = in.data.data() + ((static_cast<size_t>(n) * C + c) * H) *
                                              static_cast<size_t>(W);
            for (int gy = 0; gy < s; ++gy) {
                int y0, y1;
                grid_cell(gy, H, s, y0, y1);
                for (int gx = 0; gx < s; ++gx) {
                    int x0, x1;
                    grid_cell(gx, W, s, x0, x1);
                    T acc = T(0);
                    for (int y = y0; y < y1; ++y)
                        for (int x = x0; x < x1; ++x) acc += p[static_cast<size_t>(y) * W + x];
                    pooled.data[((static_cast<size_t>(n) * C + c) * s + gy) * s + gx] =
                        acc / static_cast<T>((y1 - y0) * (x1 - x0));
                }
            }
        }
    }
}

template <typename T>
void avgpool_grid_backward(const std::vector<int>& in_shape, int s, const TensorT<T>& gpooled,
                           TensorT<T>& gin) {
    const int N = in_shape[0], C = in_shape[1], H = in_shape[2], W = in_shape[3];
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            T* gp = gin.data.data() + ((static_cast<size_t>(n) * C + c) * H) *
                                          static_cast<size_t>(W);
            for (int gy = 0; gy < s; ++gy) {
                int y0, y1;
                grid_cell(gy, H, s, y0, y1);
                for (int gx = 0; gx < s; ++gx) {
                    int x0, x1;
                    grid_cell(gx, W, s, x0, x1);
                    const T g =
                        gpooled.data[((static_cast<size_t>(n) * C + c) * s + gy) * s + gx] /
                        static_cast<T>((y1 - y0) * (x1 - x0));
                    for (int y = y0; y < y1; ++y)
                        for (int x = x0; x < x1; ++x) gp[static_cast<size_t>(y) * W + x] += g;
                }
            }
        }
    }
}

} // namespace detail

// Forward pass over the whole graph; fills cache when non-null.
template <typename T>
TensorT<T> engine_forward(const std::vector<LayerSpec>& layers,
                          const std::vector<ParamIndex>& index, const std::vector<T>& params,
                          const TensorT<T>& input, ForwardCache<T>* cache) {
    using detail::require;
    ForwardCache<T> local;
    ForwardCache<T>& c = cache ? *cache : local;
    c.input = input;
    c.acts.assign(layers.size(), TensorT<T>{});
    c.pool.assign(layers.size(), {});

    auto resolved = [&](int idx, size_t at) -> const TensorT<T>& {
        int r = idx == LayerSpec::kPrev ? static_cast<int>(at) - 1 : idx;
        require(r < static_cast<int>(at), "network: source must reference an earlier layer");
        return r < 0 ? c.input : c.acts[static_cast<size_t>(r)];
    };

    for (size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& s = layers[i];
        const TensorT<T>& x = resolved(s.input, i);
        const T* w = params.data() + index[i].w_off;
        const T* b = params.data() + index[i].b_off;
        TensorT<T>& y = c.acts[i];
        switch (s.kind) {
            case LayerKind::Conv2D:
                detail::conv2d_forward(x, w, b, s, y);
                break;
            case LayerKind::Dense:
                detail::dense_forward(x, w, b, s, y);
                break;
            case LayerKind::ReLU: {
                y = x;
                for (T& v : y.data) v = v > T(0) ? v : T(0);
                break;
            }
            case LayerKind::Sigmoid: {
                y = x;
                for (T& v : y.data) v = T(1) / (T(1) + std::exp(-v));
                break;
            }
            case LayerKind::MaxPool2: {
                require(x.shape.size() == 4, "maxpool2: input must be [N,C,H,W]");
                const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
                const int OH = H / 2, OW = W / 2;
                require(OH > 0 && OW > 0, "maxpool2: input too small");
                y = TensorT<T>({N, C, OH, OW});
                auto& idxs = c.pool[i];
                idxs.resize(y.size());
                size_t o = 0;
                for (int n = 0; n < N; ++n) {
                    for (int ch = 0; ch < C; ++ch) {
                        const size_t base =
                            ((static_cast<size_t>(n) * C + ch) * H) * static_cast<size_t>(W);
                        for (int oy = 0; oy < OH; ++oy) {
                            for (int ox = 0; ox < OW; ++ox, ++o) {
                                size_t best = base + static_cast<size_t>(2 * oy) * W + 2 * ox;
                                T bv = x.data[best];
                                const size_t cands[3] = {best + 1, best + static_cast<size_t>(W),
                                                         best + static_cast<size_t>(W) + 1};
                                for (size_t cc : cands) {
                                    if (x.data[cc] > bv) {
                                        bv = x.data[cc];
                                        best = cc;
                                    }
                                }
                                y.data[o] = bv;
                                idxs[o] = best;
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::UpsampleBilinear: {
                require(x.shape.size() == 4, "upsample: input must be [N,C,H,W]");
                require(s.factor >= 1, "upsample: factor must be >= 1");
                detail::bilinear_resize_forward(x, x.dim(2) * s.factor, x.dim(3) * s.factor, y);
                break;
            }
            case LayerKind::AvgPoolToGrid: {
                require(x.shape.size() == 4, "avgpool_to_grid: input must be [N,C,H,W]");
                require(s.grid >= 1, "avgpool_to_grid: grid must be >= 1");
                TensorT<T> pooled;
                detail::avgpool_grid(x, s.grid, pooled);
                detail::bilinear_resize_forward(pooled, x.dim(2), x.dim(3), y);
                break;
            }
            case LayerKind::Add: {
                const TensorT<T>& src = resolved(s.source, i);
                require(x.shape == src.shape, "add: operand shapes differ");
                y = x;
                for (size_t k = 0; k < y.size(); ++k) y.data[k] += src.data[k];
                break;
            }
            case LayerKind::ConcatCh: {
                const TensorT<T>& src = resolved(s.source, i);
                require(x.shape.size() == 4 && src.shape.size() == 4,
                        "concat_ch: operands must be [N,C,H,W]");
                require(x.dim(0) == src.dim(0) && x.dim(2) == src.dim(2) &&
                            x.dim(3) == src.dim(3),
                        "concat_ch: spatial/batch shapes differ");
                const int N = x.dim(0), C1 = x.dim(1), C2 = src.dim(1), H = x.dim(2),
                          W = x.dim(3);
                y = TensorT<T>({N, C1 + C2, H, W});
                const size_t plane = static_cast<size_t>(H) * W;
                for (int n = 0; n < N; ++n) {
                    std::copy_n(x.data.data() + static_cast<size_t>(n) * C1 * plane, C1 * plane,
                                y.data.data() + static_cast<size_t>(n) * (C1 + C2) * plane);
                    std::copy_n(src.data.data() + static_cast<size_t>(n) * C2 * plane, C2 * plane,
                                y.data.data() + (static_cast<size_t>(n) * (C1 + C2) + C1) * plane);
                }
                break;
            }
        }
    }
    return c.acts.empty() ? c.input : c.acts.back();
}

// Backward pass; writes parameter gradients into `grads` (zeroed here) and
// returns nothing else. `upstream` matches the final layer's output shape.
template <typename T>
void engine_backward(const std::vector<LayerSpec>& layers, const std::vector<ParamIndex>& index,
                     const std::vector<T>& params, const ForwardCache<T>& cache,
                     const TensorT<T>& upstream, std::vector<T>& grads) {
    using detail::require;
    require(!cache.acts.empty(), "backward: forward cache is empty");
    require(upstream.shape == cache.acts.back().shape,
            "backward: upstream gradient shape mismatch");
    grads.assign(params.size(), T(0));

    std::vector<TensorT<T>> gacts(layers.size());
    TensorT<T> ginput; // accumulated but unused by callers today

    auto resolve_idx = [&](int idx, size_t at) -> int {
        return idx == LayerSpec::kPrev ? static_cast<int>(at) - 1 : idx;
    };
    auto grad_of = [&](int r) -> TensorT<T>& { return r < 0 ? ginput : gacts[static_cast<size_t>(r)]; };
    auto act_of = [&](int r) -> const TensorT<T>& {
        return r < 0 ? cache.input : cache.acts[static_cast<size_t>(r)];
    };
    auto accum_into = [&](int r, const TensorT<T>& shape_like) -> TensorT<T>& {
        TensorT<T>& g = grad_of(r);
        if (g.data.empty()) g = TensorT<T>(shape_like.shape);
        return g;
    };

    gacts.back() = upstream;
    for (size_t ii = layers.size(); ii-- > 0;) {
        const LayerSpec& s = layers[ii];
        TensorT<T>& gy = gacts[ii];
        if (gy.data.empty()) continue; // never consumed
        const int xin = resolve_idx(s.input, ii);
        const TensorT<T>& x = act_of(xin);
        const TensorT<T>& y = cache.acts[ii];
        T* gw = grads.data() + index[ii].w_off;
        T* gb = grads.data() + index[ii].b_off;
        switch (s.kind) {
            case LayerKind::Conv2D: {
                TensorT<T>& gx = accum_into(xin, x);
                detail::conv2d_backward(x, params.data() + index[ii].w_off, s, gy, gx, gw, gb);
                break;
            }
            case LayerKind::Dense: {
                TensorT<T>& gx = accum_into(xin, x);
                detail::dense_backward(x, params.data() + index[ii].w_off, s, gy, gx, gw, gb);
                break;
            }
            case LayerKind::ReLU: {
                TensorT<T>& gx = accum_into(xin, x);
                for (size_t k = 0; k < x.size(); ++k)
                    if (x.data[k] > T(0)) gx.data[k] += gy.data[k];
                break;
            }
            case LayerKind::Sigmoid: {
                TensorT<T>& gx = accum_into(xin, x);
                for (size_t k = 0; k < x.size(); ++k)
                    gx.data[k] += gy.data[k] * y.data[k] * (T(1) - y.data[k]);
                break;
            }
            case LayerKind::MaxPool2: {
                TensorT<T>& gx = accum_into(xin, x);
                const auto& idxs = cache.pool[ii];
                for (size_t o = 0; o < gy.size(); ++o) gx.data[idxs[o]] += gy.data[o];
                break;
            }
            case LayerKind::UpsampleBilinear: {
                TensorT<T>& gx = accum_into(xin, x);
                detail::bilinear_resize_backward(x.shape, gy, gx);
                break;
            }
            case LayerKind::AvgPoolToGrid: {
                TensorT<T>& gx = accum_into(xin, x);
                TensorT<T> gpooled({x.dim(0), x.dim(1), s.grid, s.grid});
                detail::bilinear_resize_backward(gpooled.shape, gy, gpooled);
                detail::avgpool_grid_backward(x.shape, s.grid, gpooled, gx);
                break;
            }
            case LayerKind::Add: {
                const int src = resolve_idx(s.source, ii);
                TensorT<T>& gx = accum_into(xin, x);
                TensorT<T>& gs = accum_into(src, act_of(src));
                for (size_t k = 0; k < gy.size(); ++k) {
                    gx.data[k] += gy.data[k];
                    gs.data[k] += gy.data[k];
                }
                break;
            }
            case LayerKind::ConcatCh: {
                const int src = resolve_idx(s.source, ii);
                const TensorT<T>& sv = act_of(src);
                TensorT<T>& gx = accum_into(xin, x);
                TensorT<T>& gs = accum_into(src, sv);
                const int N = x.dim(0), C1 = x.dim(1), C2 = sv.dim(1);
                const size_t plane = static_cast<size_t>(x.dim(2)) * x.dim(3);
                for (int n = 0; n < N; ++n) {
                    const T* g1 = gy.data.data() + static_cast<size_t>(n) * (C1 + C2) * plane;
                    T* gxp = gx.data.data() + static_cast<size_t>(n) * C1 * plane;
                    T* gsp = gs.data.data() + static_cast<size_t>(n) * C2 * plane;
                    for (size_t k = 0; k < static_cast<size_t>(C1) * plane; ++k) gxp[k] += g1[k];
                    for (size_t k = 0; k < static_cast<size_t>(C2) * plane; ++k)
                        gsp[k] += g1[static_cast<size_t>(C1) * plane + k];
                }
                break;
            }
        }
    }
}

} // namespace nn
} // namespace fseg
