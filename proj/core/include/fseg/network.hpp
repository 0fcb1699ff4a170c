#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fseg/nn_engine.hpp"
#include "fseg/params.hpp"
#include "fseg/rng.hpp"
#include "fseg/tensor.hpp"

namespace fseg {

// A sequential-with-skips network. Parameters live in a flat
// ParameterVector whose layout is determined solely by the layer specs
// (segment "L<i>.w"/"L<i>.b" per parameterized layer, in layer order).
class Network {
public:
    Network() = default;
    explicit Network(std::vector<LayerSpec> layers);

    const std::vector<LayerSpec>& layers() const { return layers_; }
    ParameterVector& params() { return params_; }
    const ParameterVector& params() const { return params_; }
    const ParameterVector& grads() const { return grads_; }

    size_t param_count() const;

    // He-uniform for conv/dense weights (fan-in), zero biases.
    void init_he_uniform(RngStream& rng);

    // Deterministic given (params, input); caches activations for backward.
    Tensor forward(const Tensor& input);
    // Populates grads (same layout as params). Throws if forward not cached.
    const ParameterVector& backward(const Tensor& upstream_grad);
    void clear_cache() { cache_.reset(); }
    bool has_cache() const { return cache_.has_value(); }

    // Compact architecture signature, used by checkpoints to detect
    // checkpoint/spec mismatches.
    std::string arch_string() const;

    const std::vector<nn::ParamIndex>& param_index() const { return index_; }

private:
    std::vector<LayerSpec> layers_;
    std::vector<nn::ParamIndex> index_;
    ParameterVector params_;
    ParameterVector grads_;
    std::optional<nn::ForwardCache<float>> cache_;
};

// Analytic parameter count from specs alone: Conv2D = out*(in*k*k)+out,
// Dense = in*out+out, everything else 0.
size_t param_count(const std::vector<LayerSpec>& layers);

struct GradCheckEntry {
    size_t param_index;
    double analytic;
    double finite_diff;
    double rel_error;
};

struct GradCheckReport {
    bool pass = false;
    double max_rel_error = 0.0;
    size_t checked = 0;
    std::vector<GradCheckEntry> worst; // top offenders, for diagnostics
};

// Compares analytic gradients against 64-bit central finite differences
// under the quadratic loss L(y) = 0.5*sum(y^2). Every parameter is
// perturbed, so keep the network tiny. `corrupt_param` (>=0) doubles one
// analytic gradient, a hook for fault-injection tests.
GradCheckReport gradient_check(const Network& net, const Tensor& input, double tolerance,
                               long corrupt_param = -1);

// Optimizers. Moment buffers mirror the parameter layout.
struct OptimizerState {
    enum class Kind { SGD, Adam };
    Kind kind = Kind::SGD;
    double lr = 1e-3;
    double momentum = 0.0;           // SGD
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8; // Adam
    int64_t step = 0;
    std::vector<float> m, v;

    static OptimizerState sgd(double lr, double momentum = 0.0);
    static OptimizerState adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                               double eps = 1e-8);
};

// Applies one update from net.grads() to net.params().
void optimizer_step(OptimizerState& opt, Network& net);

// Parameter blob round-trip (little-endian f32, layout order, no header).
std::vector<uint8_t> save_params(const Network& net);
void load_params(Network& net, const std::vector<uint8_t>& blob);

} // namespace fseg
