#pragma once

// Convolutional regressor: four conv blocks (conv, batch-norm, ReLU, 2x2 max-pool),
// flatten, two 512-unit fully connected layers, and a 2-unit output
// (normalized depth, normalized location-from-tip).

#include "finray/error.hpp"
#include "finray/hash.hpp"
#include "finray/json_util.hpp"
#include "finray/learner/layers.hpp"
#include "finray/sensor.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace finray::learner {

// Min-max target scaling: t_norm = (t - min) / (max - min).
struct TargetNormalization {
    double depth_min = 1.0;
    double depth_max = 5.5;
    double location_min = 10.0;
    double location_max = 50.0;

    double normalize_depth(double d) const { return (d - depth_min) / (depth_max - depth_min); }
    double normalize_location(double l) const { return (l - location_min) / (location_max - location_min); }
    double denormalize_depth(double t) const { return depth_min + t * (depth_max - depth_min); }
    double denormalize_location(double t) const { return location_min + t * (location_max - location_min); }
};

struct ModelConfig {
    int input_resolution = 128;
    int filters = 32;
    std::vector<int> kernels = {11, 9, 7, 5};
    int hidden_units = 512;
    int hidden_layers = 2;
    bool conv_bias = true;
    TargetNormalization normalization;

    int blocks() const { return static_cast<int>(kernels.size()); }

    void validate() const
    {
        require(input_resolution > 0 && filters > 0 && hidden_units > 0 && hidden_layers >= 0,
                "model dimensions must be positive");
        require(!kernels.empty(), "model needs at least one conv block");
        for (int k : kernels)
            require(k > 0 && k % 2 == 1, "conv kernels must be positive and odd");
        require(input_resolution % (1 << blocks()) == 0,
                "input resolution " + std::to_string(input_resolution) + " is not divisible by 2^" +
                    std::to_string(blocks()) + "; pooled dims would be non-integral");
        require(normalization.depth_max > normalization.depth_min &&
                    normalization.location_max > normalization.location_min,
                "normalization ranges must satisfy min < max");
    }

    // Pre-flatten feature map (channels x h x w).
    Shape feature_shape() const
    {
        const int side = input_resolution >> blocks();
        return {filters, side, side};
    }
};

inline Json to_json(const ModelConfig& c)
{
    return {{"input_resolution", c.input_resolution},
            {"filters", c.filters},
            {"kernels", c.kernels},
            {"hidden_units", c.hidden_units},
            {"hidden_layers", c.hidden_layers},
            {"conv_bias", c.conv_bias},
            {"normalization",
             {{"depth_min", c.normalization.depth_min},
              {"depth_max", c.normalization.depth_max},
              {"location_min", c.normalization.location_min},
              {"location_max", c.normalization.location_max}}}};
}

inline ModelConfig model_config_from_json(const Json& j, const std::string& ctx = "model")
{
    ModelConfig c;
    ObjectReader(j, ctx)
        .get("input_resolution", c.input_resolution)
        .get("filters", c.filters)
        .get("kernels", c.kernels)
        .get("hidden_units", c.hidden_units)
        .get("hidden_layers", c.hidden_layers)
        .get("conv_bias", c.conv_bias)
        .nested("normalization",
                [&](const Json& n, const std::string& nctx) {
                    ObjectReader(n, nctx)
                        .get("depth_min", c.normalization.depth_min)
                        .get("depth_max", c.normalization.depth_max)
                        .get("location_min", c.normalization.location_min)
                        .get("location_max", c.normalization.location_max)
                        .finish();
                })
        .finish();
    return c;
}

struct EpochLog {
    double train_mse;
    double val_mse;
};

struct Prediction {
    double depth_mm;
    double location_from_tip_mm;
};

template <class T>
class Model {
public:
    ModelConfig config;
    Sequential<T> net;
    std::vector<EpochLog> log;
    Digest dataset_hash{};

    // Forward in normalized target units; output is n x 2.
    Tensor<T> forward_normalized(const Tensor<T>& x, Mode mode) { return net.forward(x, mode); }

    std::vector<Prediction> predict(const Tensor<T>& x)
    {
        const Tensor<T> y = net.forward(x, Mode::Infer);
        std::vector<Prediction> out(static_cast<std::size_t>(y.n));
        for (int i = 0; i < y.n; ++i) {
            out[i].depth_mm = config.normalization.denormalize_depth(y.sample(i)[0]);
            out[i].location_from_tip_mm = config.normalization.denormalize_location(y.sample(i)[1]);
        }
        return out;
    }

    std::vector<Prediction> predict(std::span<const sensor::MarkerFrame> frames, std::size_t batch = 64);

    std::size_t parameter_count()
    {
        std::size_t n = 0;
        for (auto* p : net.params())
            n += p->value.size();
        return n;
    }
};

// He-uniform weights U(+-sqrt(6 / fan_in)) for ReLU-fed layers, U(+-1/sqrt(fan_in)) for
// the output layer; zero biases; batch-norm starts as identity.
template <class T>
Model<T> build_model(const ModelConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    Model<T> m;
    m.config = cfg;
    m.net.set_input_shape({1, cfg.input_resolution, cfg.input_resolution});
    std::mt19937_64 rng(seed);
    auto fill = [&](Param<T>& p, double bound) {
        std::uniform_real_distribution<double> u(-bound, bound);
        for (auto& v : p.value)
            v = static_cast<T>(u(rng));
    };

    int channels = 1;
    for (int b = 0; b < cfg.blocks(); ++b) {
        const std::string name = "block" + std::to_string(b + 1);
        auto& conv = m.net.template add<Conv2d<T>>(channels, cfg.filters, cfg.kernels[b], cfg.conv_bias, name + ".conv");
        conv.need_input_grad = b > 0;
        fill(*conv.params()[0], std::sqrt(6.0 / conv.patch()));
        m.net.template add<BatchNorm2d<T>>(cfg.filters, name + ".bn");
        m.net.template add<ReLU<T>>();
        m.net.template add<MaxPool2d<T>>();
        channels = cfg.filters;
    }
    m.net.template add<Flatten<T>>();
    int features = static_cast<int>(cfg.feature_shape().size());
    for (int h = 0; h < cfg.hidden_layers; ++h) {
        auto& fc = m.net.template add<Linear<T>>(features, cfg.hidden_units, "fc" + std::to_string(h + 1));
        fill(*fc.params()[0], std::sqrt(6.0 / features));
        m.net.template add<ReLU<T>>();
        features = cfg.hidden_units;
    }
    auto& head = m.net.template add<Linear<T>>(features, 2, "head");
    fill(*head.params()[0], 1.0 / std::sqrt(static_cast<double>(features)));

    // Closed-form check: same-padded conv keeps n, pool halves it.
    int side = cfg.input_resolution;
    std::size_t li = 0;
    const auto shapes = m.net.shapes();
    for (int b = 0; b < cfg.blocks(); ++b) {
        const int k = cfg.kernels[b];
        const int conv_out = (side - k + 2 * (k / 2)) / 1 + 1;
        require(shapes[li].h == conv_out && shapes[li].w == conv_out, "conv output shape mismatch");
        side = conv_out / 2;
        li += 3;
        require(shapes[li].h == side && shapes[li].c == cfg.filters, "pool output shape mismatch");
        ++li;
    }
    require(shapes.back().c == 2, "regressor must output exactly two values");
    return m;
}

template <class T>
Tensor<T> frames_to_tensor(std::span<const sensor::MarkerFrame> frames)
{
    require(!frames.empty(), "empty frame batch");
    const int res = frames.front().resolution();
    Tensor<T> x(static_cast<int>(frames.size()), {1, res, res});
    for (std::size_t i = 0; i < frames.size(); ++i) {
        require(frames[i].resolution() == res, "mixed frame resolutions in one batch");
        T* dst = x.sample(static_cast<int>(i));
        for (int y = 0; y < res; ++y)
            for (int xx = 0; xx < res; ++xx)
                dst[y * res + xx] = frames[i].get(xx, y) ? T(1) : T(0);
    }
    return x;
}

template <class T>
std::vector<Prediction> Model<T>::predict(std::span<const sensor::MarkerFrame> frames, std::size_t batch)
{
    std::vector<Prediction> out;
    out.reserve(frames.size());
    for (std::size_t lo = 0; lo < frames.size(); lo += batch) {
        const auto chunk = frames.subspan(lo, std::min(batch, frames.size() - lo));
        require(chunk.front().resolution() == config.input_resolution,
                "frame resolution " + std::to_string(chunk.front().resolution()) +
                    " does not match model resolution " + std::to_string(config.input_resolution));
        const auto p = predict(frames_to_tensor<T>(chunk));
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

} // namespace finray::learner
