#include "fseg/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fseg {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv2D: return "conv2d";
        case LayerKind::Dense: return "dense";
        case LayerKind::ReLU: return "relu";
        case LayerKind::Sigmoid: return "sigmoid";
        case LayerKind::MaxPool2: return "maxpool2";
        case LayerKind::UpsampleBilinear: return "upsample";
        case LayerKind::AvgPoolToGrid: return "avgpool_grid";
        case LayerKind::Add: return "add";
        case LayerKind::ConcatCh: return "concat_ch";
    }
    return "?";
}

namespace nn {

void validate_layers(const std::vector<LayerSpec>& layers) {
    for (size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& s = layers[i];
        auto check_ref = [&](int r, const char* what) {
            if (r == LayerSpec::kPrev) return;
            if (r < -1 || r >= static_cast<int>(i))
                throw std::invalid_argument(std::string("network: layer ") + std::to_string(i) +
                                            ": " + what + " must reference an earlier layer");
        };
        check_ref(s.input, "input");
        switch (s.kind) {
            case LayerKind::Conv2D:
                if (s.in_ch <= 0 || s.out_ch <= 0 || s.ksize <= 0 || s.stride <= 0 || s.pad < 0)
                    throw std::invalid_argument("network: bad conv2d hyperparameters");
                break;
            case LayerKind::Dense:
                if (s.in_features <= 0 || s.out_features <= 0)
                    throw std::invalid_argument("network: bad dense hyperparameters");
                break;
            case LayerKind::UpsampleBilinear:
                if (s.factor < 1) throw std::invalid_argument("network: bad upsample factor");
                break;
            case LayerKind::AvgPoolToGrid:
                if (s.grid < 1) throw std::invalid_argument("network: bad pool grid");
                break;
            case LayerKind::Add:
            case LayerKind::ConcatCh:
                check_ref(s.source, "source");
                break;
            default:
                break;
        }
    }
}

std::vector<ParamIndex> build_param_index(const std::vector<LayerSpec>& layers) {
    std::vector<ParamIndex> index(layers.size());
    size_t off = 0;
    for (size_t i = 0; i < layers.size(); ++i) {
        ParamIndex& pi = index[i];
        pi.w_len = layers[i].weight_count();
        pi.b_len = layers[i].bias_count();
        pi.w_off = off;
        off += pi.w_len;
        pi.b_off = off;
        off += pi.b_len;
    }
    return index;
}

size_t total_param_count(const std::vector<LayerSpec>& layers) {
    size_t n = 0;
    for (const LayerSpec& s : layers) n += s.weight_count() + s.bias_count();
    return n;
}

} // namespace nn

size_t param_count(const std::vector<LayerSpec>& layers) {
    return nn::total_param_count(layers);
}

Network::Network(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
    nn::validate_layers(layers_);
    index_ = nn::build_param_index(layers_);
    params_.values.assign(nn::total_param_count(layers_), 0.0f);
    for (size_t i = 0; i < layers_.size(); ++i) {
        const std::string tag = "L" + std::to_string(i);
        if (index_[i].w_len > 0)
            params_.layout.push_back({tag + ".w", index_[i].w_off, index_[i].w_len});
        if (index_[i].b_len > 0)
            params_.layout.push_back({tag + ".b", index_[i].b_off, index_[i].b_len});
    }
    grads_ = params_;
}

size_t Network::param_count() const { return params_.values.size(); }

void Network::init_he_uniform(RngStream& rng) {
    for (size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& s = layers_[i];
        size_t fan_in = 0;
        if (s.kind == LayerKind::Conv2D)
            fan_in = static_cast<size_t>(s.in_ch) * s.ksize * s.ksize;
        else if (s.kind == LayerKind::Dense)
            fan_in = static_cast<size_t>(s.in_features);
        else
            continue;
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        float* w = params_.values.data() + index_[i].w_off;
        for (size_t k = 0; k < index_[i].w_len; ++k)
            w[k] = static_cast<float>((rng.uniform() * 2.0 - 1.0) * limit);
        float* b = params_.values.data() + index_[i].b_off;
        std::fill_n(b, index_[i].b_len, 0.0f);
    }
}

Tensor Network::forward(const Tensor& input) {
    cache_.emplace();
    return nn::engine_forward<float>(layers_, index_, params_.values, input, &*cache_);
}

const ParameterVector& Network::backward(const Tensor& upstream_grad) {
    if (!cache_) throw std::logic_error("network: backward called before forward");
    nn::engine_backward<float>(layers_, index_, params_.values, *cache_, upstream_grad,
                               grads_.values);
    return grads_;
}

std::string Network::arch_string() const {
    std::ostringstream os;
    for (const LayerSpec& s : layers_) {
        os << layer_kind_name(s.kind);
        switch (s.kind) {
            case LayerKind::Conv2D:
                os << "(" << s.in_ch << "," << s.out_ch << "," << s.ksize << "," << s.stride
                   << "," << s.pad << ")";
                break;
            case LayerKind::Dense:
                os << "(" << s.in_features << "," << s.out_features << ")";
                break;
            case LayerKind::UpsampleBilinear:
                os << "(" << s.factor << ")";
                break;
            case LayerKind::AvgPoolToGrid:
                os << "(" << s.grid << "@" << s.input << ")";
                break;
            case LayerKind::Add:
            case LayerKind::ConcatCh:
                os << "(" << s.source << ")";
                break;
            default:
                break;
        }
        if (s.input != LayerSpec::kPrev && s.kind != LayerKind::AvgPoolToGrid)
            os << "[in=" << s.input << "]";
        os << ";";
    }
    return os.str();
}

GradCheckReport gradient_check(const Network& net, const Tensor& input, double tolerance,
                               long corrupt_param) {
    const auto& layers = net.layers();
    const auto& index = net.param_index();
    std::vector<double> params(net.params().values.begin(), net.params().values.end());
    TensorT<double> in64 = input.cast<double>();

    // quadratic loss: L(y) = 0.5*sum(y^2), dL/dy = y
    auto loss_of = [&](const std::vector<double>& p) {
        TensorT<double> y = nn::engine_forward<double>(layers, index, p, in64, nullptr);
        double acc = 0.0;
        for (double v : y.data) acc += 0.5 * v * v;
        return acc;
    };

    nn::ForwardCache<double> cache;
    TensorT<double> out = nn::engine_forward<double>(layers, index, params, in64, &cache);
    std::vector<double> analytic;
    nn::engine_backward<double>(layers, index, params, cache, out, analytic);
    if (corrupt_param >= 0 && corrupt_param < static_cast<long>(analytic.size()))
        analytic[static_cast<size_t>(corrupt_param)] *= 2.0;

    GradCheckReport report;
    report.checked = params.size();
    report.pass = true;
    for (size_t j = 0; j < params.size(); ++j) {
        // step balances truncation error against cancellation in the
        // 64-bit loss difference; 1e-5 leaves deep-net gradients noise-bound
        const double h = 1e-4 * std::max(1.0, std::fabs(params[j]));
        const double saved = params[j];
        params[j] = saved + h;
        const double lp = loss_of(params);
        params[j] = saved - h;
        const double lm = loss_of(params);
        params[j] = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::fabs(analytic[j]), std::fabs(fd), 1e-8});
        const double rel = std::fabs(analytic[j] - fd) / denom;
        if (rel > report.max_rel_error) report.max_rel_error = rel;
        if (rel > tolerance) {
            report.pass = false;
            if (report.worst.size() < 8) report.worst.push_back({j, analytic[j], fd, rel});
        }
    }
    return report; // zero-parameter nets pass vacuously
}

OptimizerState OptimizerState::sgd(double lr, double momentum) {
    OptimizerState o;
    o.kind = Kind::SGD;
    o.lr = lr;
    o.momentum = momentum;
    return o;
}

OptimizerState OptimizerState::adam(double lr, double beta1, double beta2, double eps) {
    OptimizerState o;
    o.kind = Kind::Adam;
    o.lr = lr;
    o.beta1 = beta1;
    o.beta2 = beta2;
    o.eps = eps;
    return o;
}

void optimizer_step(OptimizerState& opt, Network& net) {
    auto& p = net.params().values;
    const auto& g = net.grads().values;
    if (p.size() != g.size()) throw std::logic_error("optimizer: grads/params size mismatch");
    switch (opt.kind) {
        case OptimizerState::Kind::SGD: {
            if (opt.momentum != 0.0 && opt.m.size() != p.size()) opt.m.assign(p.size(), 0.0f);
            for (size_t i = 0; i < p.size(); ++i) {
                if (opt.momentum != 0.0) {
                    opt.m[i] = static_cast<float>(opt.momentum * opt.m[i] + g[i]);
                    p[i] -= static_cast<float>(opt.lr) * opt.m[i];
                } else {
                    p[i] -= static_cast<float>(opt.lr * g[i]);
                }
            }
            break;
        }
        case OptimizerState::Kind::Adam: {
            if (opt.m.size() != p.size()) opt.m.assign(p.size(), 0.0f);
            if (opt.v.size() != p.size()) opt.v.assign(p.size(), 0.0f);
            opt.step += 1;
            const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
            const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
            for (size_t i = 0; i < p.size(); ++i) {
                opt.m[i] = static_cast<float>(opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * g[i]);
                opt.v[i] = static_cast<float>(opt.beta2 * opt.v[i] +
                                              (1.0 - opt.beta2) * static_cast<double>(g[i]) * g[i]);
                const double mhat = opt.m[i] / bc1;
                const double vhat = opt.v[i] / bc2;
                p[i] -= static_cast<float>(opt.lr * mhat / (std::sqrt(vhat) + opt.eps));
            }
            break;
        }
    }
}

std::vector<uint8_t> save_params(const Network& net) { return params_to_blob(net.params()); }

void load_params(Network& net, const std::vector<uint8_t>& blob) {
    params_from_blob(net.params(), blob);
}

} // namespace fseg
