#pragma once

#include <qdrl/common.hpp>
#include <qdrl/rng.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace qdrl {

enum class Activation { identity, tanh };

/// One dense layer. `weights` is fan_in x fan_out so that a row holds the
/// outgoing weights of one input unit; a forward pass computes W^T x + b.
struct LayerParams {
    Mat weights;
    Vec biases;

    Index fan_in() const { return weights.rows(); }
    Index fan_out() const { return weights.cols(); }
};

/// Layer sizes plus output activation, e.g. {4, 64, 64, 2} with tanh output
/// for a policy. Hidden activations are always tanh.
struct MlpArchitecture {
    std::vector<Index> dims;
    Activation output_activation = Activation::tanh;

    Index input_dim() const { return dims.front(); }
    Index output_dim() const { return dims.back(); }
    Index num_layers() const { return static_cast<Index>(dims.size()) - 1; }

    bool operator==(const MlpArchitecture&) const = default;
};

struct MlpParams {
    std::vector<LayerParams> layers;
    Activation output_activation = Activation::tanh;

    Index input_dim() const { return layers.front().fan_in(); }
    Index output_dim() const { return layers.back().fan_out(); }
};

inline MlpArchitecture architecture_of(const MlpParams& params) {
    MlpArchitecture arch;
    arch.dims.reserve(params.layers.size() + 1);
    arch.dims.push_back(params.layers.front().fan_in());
    for (const auto& layer : params.layers) arch.dims.push_back(layer.fan_out());
    arch.output_activation = params.output_activation;
    return arch;
}

inline Index parameter_count(const MlpArchitecture& arch) {
    Index count = 0;
    for (std::size_t l = 0; l + 1 < arch.dims.size(); ++l)
        count += arch.dims[l] * arch.dims[l + 1] + arch.dims[l + 1];
    return count;
}

inline MlpParams make_mlp(const MlpArchitecture& arch) {
    require(arch.dims.size() >= 2, "make_mlp: architecture needs at least one layer");
    MlpParams params;
    params.output_activation = arch.output_activation;
    for (std::size_t l = 0; l + 1 < arch.dims.size(); ++l) {
        require(arch.dims[l] >= 1 && arch.dims[l + 1] >= 1, "make_mlp: layer dims must be >= 1");
        params.layers.push_back({Mat::Zero(arch.dims[l], arch.dims[l + 1]), Vec::Zero(arch.dims[l + 1])});
    }
    return params;
}

/// Fan-in scaled uniform init: weights and biases in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
inline MlpParams random_mlp(const MlpArchitecture& arch, RngEngine& rng) {
    MlpParams params = make_mlp(arch);
    for (auto& layer : params.layers) {
        const Real bound = 1.0 / std::sqrt(static_cast<Real>(layer.fan_in()));
        std::uniform_real_distribution<Real> dist(-bound, bound);
        for (Index j = 0; j < layer.fan_out(); ++j) {
            for (Index i = 0; i < layer.fan_in(); ++i) layer.weights(i, j) = dist(rng);
            layer.biases[j] = dist(rng);
        }
    }
    return params;
}

namespace detail {

inline void check_input_dim(const MlpParams& params, Index got, const char* where) {
    if (got != params.input_dim())
        throw std::invalid_argument(std::string(where) + ": input dim mismatch, expected " +
                                    std::to_string(params.input_dim()) + ", got " + std::to_string(got));
}

inline void check_output_dim(const MlpParams& params, Index got, const char* where) {
    if (got != params.output_dim())
        throw std::invalid_argument(std::string(where) + ": upstream dim mismatch, expected " +
                                    std::to_string(params.output_dim()) + ", got " + std::to_string(got));
}

}  // namespace detail

/// Single-input forward pass with strictly sequential accumulation: each
/// output unit is computed as bias + sum of weighted inputs in input order.
/// The fixed order makes the actor-injection fold reproduce the conditioned
/// actor bit for bit (see variation.hpp).
inline Vec forward(const MlpParams& params, const Eigen::Ref<const Vec>& input) {
    detail::check_input_dim(params, input.size(), "forward");
    Vec h = input;
    const Index last = static_cast<Index>(params.layers.size()) - 1;
    for (Index l = 0; l <= last; ++l) {
        const auto& layer = params.layers[l];
        Vec z(layer.fan_out());
        for (Index j = 0; j < layer.fan_out(); ++j) {
            Real acc = layer.biases[j];
            for (Index i = 0; i < layer.fan_in(); ++i) acc += layer.weights(i, j) * h[i];
            z[j] = acc;
        }
        const bool is_output = (l == last);
        if (!is_output || params.output_activation == Activation::tanh)
            h = z.array().tanh().matrix();
        else
            h = std::move(z);
    }
    return h;
}

/// Batched forward pass; inputs are columns. Uses matrix products, so it is
/// not bit-identical to the single-input path — training uses this one,
/// rollouts use the single-input one.
inline Mat forward_batch(const MlpParams& params, const Eigen::Ref<const Mat>& inputs) {
    detail::check_input_dim(params, inputs.rows(), "forward_batch");
    Mat h = inputs;
    const Index last = static_cast<Index>(params.layers.size()) - 1;
    for (Index l = 0; l <= last; ++l) {
        const auto& layer = params.layers[l];
        Mat z = (layer.weights.transpose() * h).colwise() + layer.biases;
        const bool is_output = (l == last);
        if (!is_output || params.output_activation == Activation::tanh)
            h = z.array().tanh().matrix();
        else
            h = std::move(z);
    }
    return h;
}

/// Post-activation values of every layer (activations[0] is the input batch),
/// kept around for backpropagation. tanh' is recovered as 1 - h^2, so
/// pre-activations need not be stored.
struct ForwardTrace {
    std::vector<Mat> activations;

    const Mat& output() const { return activations.back(); }
};

inline ForwardTrace forward_traced(const MlpParams& params, const Eigen::Ref<const Mat>& inputs) {
    detail::check_input_dim(params, inputs.rows(), "forward_traced");
    ForwardTrace trace;
    trace.activations.reserve(params.layers.size() + 1);
    trace.activations.emplace_back(inputs);
    const Index last = static_cast<Index>(params.layers.size()) - 1;
    for (Index l = 0; l <= last; ++l) {
        const auto& layer = params.layers[l];
        Mat z = (layer.weights.transpose() * trace.activations.back()).colwise() + layer.biases;
        const bool is_output = (l == last);
        if (!is_output || params.output_activation == Activation::tanh)
            trace.activations.emplace_back(z.array().tanh().matrix());
        else
            trace.activations.emplace_back(std::move(z));
    }
    return trace;
}

struct BackwardResult {
    Vec param_grads;  // canonical flat layout, summed over the batch
    Mat input_grads;  // same shape as the input batch
};

/// Reverse-mode pass for a traced batch. `upstream` holds dL/d(output) per
/// column; the returned parameter gradient is the sum over the batch.
inline BackwardResult backward_batch(const MlpParams& params, const ForwardTrace& trace,
                                     const Eigen::Ref<const Mat>& upstream) {
    detail::check_output_dim(params, upstream.rows(), "backward_batch");
    require(upstream.cols() == trace.activations.front().cols(),
            "backward_batch: upstream batch size mismatch");
    const Index num_layers = static_cast<Index>(params.layers.size());

    BackwardResult result;
    result.param_grads.resize([&] {
        Index n = 0;
        for (const auto& layer : params.layers) n += layer.weights.size() + layer.biases.size();
        return n;
    }());

    std::vector<Index> offsets(num_layers);
    Index offset = 0;
    for (Index l = 0; l < num_layers; ++l) {
        offsets[l] = offset;
        offset += params.layers[l].weights.size() + params.layers[l].biases.size();
    }

    Mat grad = upstream;
    for (Index l = num_layers - 1; l >= 0; --l) {
        const auto& layer = params.layers[l];
        const Mat& h_out = trace.activations[l + 1];
        const Mat& h_in = trace.activations[l];
        const bool tanh_here = (l < num_layers - 1) || params.output_activation == Activation::tanh;
        Mat gz = tanh_here ? (grad.array() * (1.0 - h_out.array().square())).matrix() : std::move(grad);

        // dL/dW = h_in gz^T (fan_in x fan_out); flat layout is row-major per layer.
        Mat w_grad = h_in * gz.transpose();
        auto span = result.param_grads.segment(offsets[l], layer.weights.size() + layer.biases.size());
        span.head(layer.weights.size()) = w_grad.transpose().reshaped();
        span.tail(layer.biases.size()) = gz.rowwise().sum();

        grad = layer.weights * gz;
    }
    result.input_grads = std::move(grad);
    return result;
}

/// Single-input reverse-mode derivative of forward().
inline BackwardResult backward(const MlpParams& params, const Eigen::Ref<const Vec>& input,
                               const Eigen::Ref<const Vec>& upstream_grad) {
    ForwardTrace trace = forward_traced(params, input);
    return backward_batch(params, trace, upstream_grad);
}

/// Canonical flat layout: layers in order, per layer the weight matrix in
/// row-major order (all outgoing weights of input unit 0, then unit 1, ...)
/// followed by the biases. This layout is the genotype format and is part of
/// the archive file contract.
inline Vec flatten(const MlpParams& params) {
    Vec flat(parameter_count(architecture_of(params)));
    Index offset = 0;
    for (const auto& layer : params.layers) {
        flat.segment(offset, layer.weights.size()) = layer.weights.transpose().reshaped();
        offset += layer.weights.size();
        flat.segment(offset, layer.biases.size()) = layer.biases;
        offset += layer.biases.size();
    }
    return flat;
}

inline MlpParams unflatten(const MlpArchitecture& arch, const Eigen::Ref<const Vec>& flat) {
    if (flat.size() != parameter_count(arch))
        throw std::invalid_argument("unflatten: expected " + std::to_string(parameter_count(arch)) +
                                    " parameters, got " + std::to_string(flat.size()));
    MlpParams params = make_mlp(arch);
    Index offset = 0;
    for (auto& layer : params.layers) {
        layer.weights = Eigen::Map<const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            flat.data() + offset, layer.fan_in(), layer.fan_out());
        offset += layer.weights.size();
        layer.biases = flat.segment(offset, layer.biases.size());
        offset += layer.biases.size();
    }
    return params;
}

}  // namespace qdrl
