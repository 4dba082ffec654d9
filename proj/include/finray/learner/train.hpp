#pragma once

#include "finray/datagen.hpp"
#include "finray/error.hpp"
#include "finray/learner/model.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace finray::learner {

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const
    {
        require(epochs >= 0, "epochs must be non-negative");
        require(batch_size > 0, "batch_size must be positive");
        require(learning_rate > 0, "learning_rate must be positive");
        require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && adam_eps > 0, "invalid Adam constants");
    }
};

inline Json to_json(const TrainConfig& t)
{
    return {{"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"learning_rate", t.learning_rate},
            {"optimizer", t.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
            {"seed", t.seed}};
}

inline TrainConfig train_config_from_json(const Json& j, const std::string& ctx = "train")
{
    TrainConfig t;
    std::string opt = "adam";
    ObjectReader(j, ctx)
        .get("epochs", t.epochs)
        .get("batch_size", t.batch_size)
        .get("learning_rate", t.learning_rate)
        .get("optimizer", opt)
        .get("seed", t.seed)
        .finish();
    if (opt == "adam")
        t.optimizer = OptimizerKind::Adam;
    else if (opt == "sgd")
        t.optimizer = OptimizerKind::Sgd;
    else
        throw Error(ErrorKind::Config, ctx + ".optimizer: expected 'adam' or 'sgd'");
    try {
        t.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, ctx + ": " + e.what());
    }
    return t;
}

// Mean squared error over n x 2 outputs; writes dL/dpred into `grad`.
template <class T>
double mse_loss(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>& grad)
{
    require(pred.data.size() == target.data.size(), "prediction/target size mismatch");
    grad = Tensor<T>(pred.n, pred.shape);
    const double scale = 1.0 / static_cast<double>(pred.data.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double r = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
        loss += r * r;
        grad.data[i] = static_cast<T>(2.0 * r * scale);
    }
    return loss * scale;
}

template <class T>
class Optimizer {
public:
    Optimizer(const TrainConfig& tc, std::vector<Param<T>*> params) : tc_(tc), params_(std::move(params))
    {
        if (tc_.optimizer == OptimizerKind::Adam)
            for (auto* p : params_) {
                m_.emplace_back(p->value.size(), T(0));
                v_.emplace_back(p->value.size(), T(0));
            }
    }

    void step()
    {
        ++t_;
        const T lr = static_cast<T>(tc_.learning_rate);
        if (tc_.optimizer == OptimizerKind::Sgd) {
            for (auto* p : params_)
                for (std::size_t i = 0; i < p->value.size(); ++i)
                    p->value[i] -= lr * p->grad[i];
            return;
        }
        const T b1 = static_cast<T>(tc_.beta1);
        const T b2 = static_cast<T>(tc_.beta2);
        const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(tc_.beta1, static_cast<double>(t_))));
        const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(tc_.beta2, static_cast<double>(t_))));
        const T eps = static_cast<T>(tc_.adam_eps);
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& val = params_[k]->value;
            const auto& g = params_[k]->grad;
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < val.size(); ++i) {
                m[i] = b1 * m[i] + (T(1) - b1) * g[i];
                v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
                val[i] -= lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
            }
        }
    }

private:
    TrainConfig tc_;
    std::vector<Param<T>*> params_;
    std::vector<std::vector<T>> m_, v_;
    long t_ = 0;
};

inline TargetNormalization normalization_for(const datagen::ContactRanges& r)
{
    return {r.depth_min_mm, r.depth_max_mm, r.location_min_mm, r.location_max_mm};
}

template <class T>
Tensor<T> targets_tensor(const datagen::Dataset& ds, std::span<const std::size_t> idx, const TargetNormalization& norm)
{
    Tensor<T> t(static_cast<int>(idx.size()), {2, 1, 1});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& s = ds.samples[idx[i]];
        t.sample(static_cast<int>(i))[0] = static_cast<T>(norm.normalize_depth(s.depth_mm));
        t.sample(static_cast<int>(i))[1] = static_cast<T>(norm.normalize_location(s.location_from_tip_mm));
    }
    return t;
}

template <class T>
Tensor<T> frames_tensor(const datagen::Dataset& ds, std::span<const std::size_t> idx)
{
    std::vector<sensor::MarkerFrame> frames;
    frames.reserve(idx.size());
    for (auto i : idx)
        frames.push_back(ds.samples[i].frame);
    return frames_to_tensor<T>(frames);
}

// Mean-squared error (normalized units) of the model in inference mode.
template <class T>
double inference_mse(Model<T>& model, const datagen::Dataset& ds, std::span<const std::size_t> idx,
                     std::size_t batch = 64)
{
    if (idx.empty())
        return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (std::size_t lo = 0; lo < idx.size(); lo += batch) {
        const auto chunk = idx.subspan(lo, std::min(batch, idx.size() - lo));
        const auto y = model.forward_normalized(frames_tensor<T>(ds, chunk), Mode::Infer);
        const auto t = targets_tensor<T>(ds, chunk, model.config.normalization);
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            const double r = static_cast<double>(y.data[i]) - static_cast<double>(t.data[i]);
            sum += r * r;
        }
    }
    return sum / static_cast<double>(2 * idx.size());
}

using EpochCallback = std::function<void(int epoch, const EpochLog&)>;

// One optimizer step per mini-batch over a seeded shuffle of the train split. A
// trailing batch of a single sample is skipped (batch statistics are undefined).
template <class T>
Model<T> train(Model<T> model, const datagen::Dataset& ds, const TrainConfig& tc, const EpochCallback& on_epoch = {})
{
    tc.validate();
    retain_freed_memory();
    const auto train_idx = ds.indices(datagen::SplitTag::Train);
    const auto val_idx = ds.indices(datagen::SplitTag::Val);
    require(!train_idx.empty(), "dataset has an empty train split");
    require(ds.resolution == model.config.input_resolution,
            "dataset resolution " + std::to_string(ds.resolution) + " does not match model resolution " +
                std::to_string(model.config.input_resolution));
    model.dataset_hash = datagen::dataset_hash(ds);
    if (tc.epochs == 0)
        return model;

    Optimizer<T> opt(tc, model.net.params());
    std::mt19937_64 rng(tc.seed);
    std::vector<std::size_t> order = train_idx;
    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(tc.batch_size)) {
            const std::size_t len = std::min<std::size_t>(tc.batch_size, order.size() - lo);
            if (len == 1 && order.size() > 1)
                continue;
            const std::span<const std::size_t> batch(order.data() + lo, len);
            model.net.zero_grad();
            const auto x = frames_tensor<T>(ds, batch);
            const auto t = targets_tensor<T>(ds, batch, model.config.normalization);
            const auto y = model.forward_normalized(x, Mode::Train);
            Tensor<T> dy;
            const double loss = mse_loss(y, t, dy);
            if (!std::isfinite(loss))
                throw Error(ErrorKind::Numeric, "non-finite training loss at epoch " + std::to_string(epoch) +
                                                    " (learning rate " + std::to_string(tc.learning_rate) +
                                                    " too large?)");
            model.net.backward(dy);
            opt.step();
            loss_sum += loss * static_cast<double>(len);
            seen += len;
        }
        const EpochLog entry{loss_sum / static_cast<double>(std::max<std::size_t>(seen, 1)),
                             inference_mse(model, ds, val_idx)};
        model.log.push_back(entry);
        if (on_epoch)
            on_epoch(epoch, entry);
    }
    return model;
}

struct Residual {
    std::size_t index;
    double true_depth_mm;
    double pred_depth_mm;
    double true_location_mm;
    double pred_location_mm;
};

struct EvalReport {
    double mae_depth_mm = 0.0;
    double mae_location_mm = 0.0;
    std::vector<Residual> residuals;
};

inline EvalReport summarize(std::vector<Residual> residuals)
{
    require(!residuals.empty(), "cannot evaluate an empty split");
    EvalReport r;
    for (const auto& e : residuals) {
        r.mae_depth_mm += std::abs(e.pred_depth_mm - e.true_depth_mm);
        r.mae_location_mm += std::abs(e.pred_location_mm - e.true_location_mm);
    }
    r.mae_depth_mm /= static_cast<double>(residuals.size());
    r.mae_location_mm /= static_cast<double>(residuals.size());
    r.residuals = std::move(residuals);
    return r;
}

// Evaluates any predictor(frames) -> predictions on a split, in physical units.
template <class Predictor>
EvalReport evaluate_with(Predictor&& predictor, const datagen::Dataset& ds, std::span<const std::size_t> idx)
{
    require(!idx.empty(), "cannot evaluate an empty split");
    std::vector<sensor::MarkerFrame> frames;
    frames.reserve(idx.size());
    for (auto i : idx)
        frames.push_back(ds.samples[i].frame);
    const std::vector<Prediction> pred = predictor(std::span<const sensor::MarkerFrame>(frames));
    std::vector<Residual> res;
    res.reserve(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& s = ds.samples[idx[k]];
        res.push_back({idx[k], s.depth_mm, pred[k].depth_mm, s.location_from_tip_mm, pred[k].location_from_tip_mm});
    }
    return summarize(std::move(res));
}

template <class T>
EvalReport evaluate(Model<T>& model, const datagen::Dataset& ds, datagen::SplitTag split)
{
    const auto idx = ds.indices(split);
    return evaluate_with([&](std::span<const sensor::MarkerFrame> f) { return model.predict(f); }, ds, idx);
}

} // namespace finray::learner
