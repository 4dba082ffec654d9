// Times one training step and one inference batch of the full-size regressor.
#include "finray/datagen.hpp"
#include "finray/learner/train.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>

using namespace finray;

int main(int argc, char** argv)
{
    const int res = argc > 1 ? std::atoi(argv[1]) : 64;
    const int steps = argc > 2 ? std::atoi(argv[2]) : 5;
    sensor::CameraConfig cam;
    cam.resolution_px = res;
    auto ds = datagen::split_dataset(
        datagen::generate_dataset(mechanics::FingerDesign{}, cam, datagen::ContactRanges{}, 64, 1), 0.5, 2);

    learner::ModelConfig cfg;
    cfg.input_resolution = res;
    auto model = learner::build_model<float>(cfg, 3);
    std::vector<std::size_t> idx(32);
    for (std::size_t i = 0; i < idx.size(); ++i)
        idx[i] = i;
    const auto x = learner::frames_tensor<float>(ds, idx);
    const auto t = learner::targets_tensor<float>(ds, idx, cfg.normalization);

    learner::TrainConfig tc;
    learner::Optimizer<float> opt(tc, model.net.params());
    const auto t0 = std::chrono::steady_clock::now();
    for (int s = 0; s < steps; ++s) {
        model.net.zero_grad();
        learner::Tensor<float> dy;
        learner::mse_loss(model.forward_normalized(x, learner::Mode::Train), t, dy);
        model.net.backward(dy);
        opt.step();
    }
    const auto t1 = std::chrono::steady_clock::now();
    for (int s = 0; s < steps; ++s)
        model.forward_normalized(x, learner::Mode::Infer);
    const auto t2 = std::chrono::steady_clock::now();
    const double step = std::chrono::duration<double>(t1 - t0).count() / steps;
    const double inf = std::chrono::duration<double>(t2 - t1).count() / steps;
    std::printf("res %d: train step (32) %.3f s, infer batch (32) %.3f s\n", res, step, inf);
    std::printf("projected 30 epochs x 100 steps + 30 x 800 val: %.1f min\n",
                (3000 * step + 30 * 25 * inf) / 60.0);
}
