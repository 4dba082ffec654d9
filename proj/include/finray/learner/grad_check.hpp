#pragma once

// Central-difference verification of the analytic gradients.

#include "finray/learner/model.hpp"
#include "finray/learner/train.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace finray::learner {

struct TensorError {
    std::string name;
    double max_rel_error;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t entries = 0;
    std::vector<TensorError> tensors;
};

// |a - n| / max(|a|, |n|, floor); the floor keeps near-zero gradients from
// turning round-off into large relative errors.
inline double relative_error(double analytic, double numeric, double floor = 1e-6)
{
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Small network for finite differences: 2 blocks, 4 filters, 16x16 input.
inline ModelConfig reduced_model_config()
{
    ModelConfig c;
    c.input_resolution = 16;
    c.filters = 4;
    c.kernels = {11, 9};
    c.hidden_units = 16;
    c.hidden_layers = 2;
    return c;
}

namespace detail {

template <class Loss>
void check_tensor(Storage<double>& values, const Storage<double>& analytic, const std::string& name,
                  double eps, Loss&& loss, GradCheckReport& report)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + eps;
        const double lp = loss();
        values[i] = saved - eps;
        const double lm = loss();
        values[i] = saved;
        worst = std::max(worst, relative_error(analytic[i], (lp - lm) / (2.0 * eps)));
    }
    report.entries += values.size();
    report.tensors.push_back({name, worst});
    report.max_rel_error = std::max(report.max_rel_error, worst);
}

} // namespace detail

// Whole-model check of the training loss (batch-norm in batch-statistics mode).
inline GradCheckReport grad_check(Model<double> model, const Tensor<double>& x, const Tensor<double>& target,
                                  double eps = 1e-5)
{
    auto loss = [&] {
        Tensor<double> dy;
        return mse_loss(model.forward_normalized(x, Mode::Train), target, dy);
    };
    model.net.zero_grad();
    Tensor<double> dy;
    mse_loss(model.forward_normalized(x, Mode::Train), target, dy);
    model.net.backward(dy);

    GradCheckReport report;
    for (auto* p : model.net.params()) {
        const Storage<double> analytic = p->grad;
        detail::check_tensor(p->value, analytic, p->name, eps, loss, report);
    }
    return report;
}

// Single-layer check with loss = sum(y * R) for a fixed random R; covers parameters
// and the input gradient.
inline GradCheckReport layer_grad_check(Layer<double>& layer, Tensor<double> x, Mode mode, double eps = 1e-5,
                                        std::uint64_t seed = 1)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const Shape os = layer.output_shape(x.shape);
    Tensor<double> proj(x.n, os);
    for (auto& v : proj.data)
        v = nd(rng);

    auto loss = [&] {
        const auto y = layer.forward(x, mode);
        double s = 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i)
            s += y.data[i] * proj.data[i];
        return s;
    };

    for (auto* p : layer.params())
        p->zero_grad();
    layer.forward(x, mode);
    const bool saved_flag = layer.need_input_grad;
    layer.need_input_grad = true;
    const auto dx = layer.backward(proj);
    layer.need_input_grad = saved_flag;

    GradCheckReport report;
    for (auto* p : layer.params()) {
        const Storage<double> analytic = p->grad;
        detail::check_tensor(p->value, analytic, p->name, eps, loss, report);
    }
    detail::check_tensor(x.data, dx.data, layer.kind() + ".input", eps, loss, report);
    return report;
}

} // namespace finray::learner
