#include "finray/learner/grad_check.hpp"
#include "finray/learner/model_io.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace finray;
using namespace finray::learner;

namespace {

Tensor<double> random_tensor(int n, Shape s, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Tensor<double> t(n, s);
    for (auto& v : t.data)
        v = nd(rng);
    return t;
}

template <class L>
void randomize(L& layer, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (auto* p : layer.params())
        for (auto& v : p->value)
            v = nd(rng);
}

// Direct same-padded cross-correlation, weights [ky][kx][in][out], data channels-last.
Tensor<double> direct_conv(const Tensor<double>& x, const Storage<double>& w, const Storage<double>& b, int out,
                           int k)
{
    const int h = x.shape.h, wd = x.shape.w, cin = x.shape.c, p = k / 2;
    Tensor<double> y(x.n, {out, h, wd});
    for (int i = 0; i < x.n; ++i)
        for (int oy = 0; oy < h; ++oy)
            for (int ox = 0; ox < wd; ++ox)
                for (int o = 0; o < out; ++o) {
                    double s = b.empty() ? 0.0 : b[o];
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = oy + ky - p, ix = ox + kx - p;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= wd)
                                continue;
                            for (int c = 0; c < cin; ++c)
                                s += x.data[((static_cast<std::size_t>(i) * h + iy) * wd + ix) * cin + c] *
                                     w[((ky * k + kx) * cin + c) * out + o];
                        }
                    y.data[((static_cast<std::size_t>(i) * h + oy) * wd + ox) * out + o] = s;
                }
    return y;
}

datagen::Dataset tiny_dataset(int n, int res, std::uint64_t seed)
{
    sensor::CameraConfig cam;
    cam.resolution_px = res;
    return datagen::split_dataset(
        datagen::generate_dataset(mechanics::FingerDesign{}, cam, datagen::ContactRanges{}, n, seed), 0.75, seed);
}

ModelConfig small_config(int res)
{
    ModelConfig c;
    c.input_resolution = res;
    c.filters = 4;
    c.kernels = {5, 3};
    c.hidden_units = 16;
    return c;
}

} // namespace

struct ConvCase {
    int cin, cout, k, h, w;
};

class ConvOracle : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvOracle, MatchesDirectCorrelation)
{
    const auto c = GetParam();
    Conv2d<double> conv(c.cin, c.cout, c.k, true, "c");
    randomize(conv, 11);
    const auto x = random_tensor(2, {c.cin, c.h, c.w}, 12);
    const auto y = conv.forward(x, Mode::Train);
    const auto ref = direct_conv(x, conv.params()[0]->value, conv.params()[1]->value, c.cout, c.k);
    ASSERT_EQ(y.data.size(), ref.data.size());
    for (std::size_t i = 0; i < y.data.size(); ++i)
        EXPECT_NEAR(y.data[i], ref.data[i], 1e-10);
}

TEST_P(ConvOracle, GradientsMatchFiniteDifferences)
{
    const auto c = GetParam();
    Conv2d<double> conv(c.cin, c.cout, c.k, true, "c");
    randomize(conv, 13);
    const auto r = layer_grad_check(conv, random_tensor(2, {c.cin, c.h, c.w}, 14), Mode::Train);
    // Taps that never overlap the image have a true gradient of zero, where the central
    // difference only sees FFT round-off / eps; the direct-sum test covers them exactly.
    const bool has_dead_taps = c.k / 2 >= std::min(c.h, c.w);
    EXPECT_LT(r.max_rel_error, has_dead_taps ? 1e-2 : 1e-6);
}

TEST_P(ConvOracle, WeightGradientMatchesDirectSum)
{
    // Exact reference for loss = sum(y * R): dW[ky][kx][c][o] = sum x[.., y+ky-p, x+kx-p, c] R[.., y, x, o].
    // Unlike finite differences this also pins taps that never overlap the input to zero.
    const auto c = GetParam();
    Conv2d<double> conv(c.cin, c.cout, c.k, false, "c");
    randomize(conv, 21);
    const auto x = random_tensor(2, {c.cin, c.h, c.w}, 22);
    const auto proj = random_tensor(2, {c.cout, c.h, c.w}, 23);
    conv.params()[0]->zero_grad();
    conv.forward(x, Mode::Train);
    conv.backward(proj);
    const auto& g = conv.params()[0]->grad;
    const int p = c.k / 2;
    for (int ky = 0; ky < c.k; ++ky)
        for (int kx = 0; kx < c.k; ++kx)
            for (int ci = 0; ci < c.cin; ++ci)
                for (int o = 0; o < c.cout; ++o) {
                    double s = 0.0;
                    for (int i = 0; i < 2; ++i)
                        for (int oy = 0; oy < c.h; ++oy)
                            for (int ox = 0; ox < c.w; ++ox) {
                                const int iy = oy + ky - p, ix = ox + kx - p;
                                if (iy < 0 || iy >= c.h || ix < 0 || ix >= c.w)
                                    continue;
                                s += x.data[((static_cast<std::size_t>(i) * c.h + iy) * c.w + ix) * c.cin + ci] *
                                     proj.data[((static_cast<std::size_t>(i) * c.h + oy) * c.w + ox) * c.cout + o];
                            }
                    EXPECT_NEAR(g[((ky * c.k + kx) * c.cin + ci) * c.cout + o], s, 1e-10);
                }
}

// Kernels wider than the image are included: the layer must still see zero padding.
INSTANTIATE_TEST_SUITE_P(Shapes, ConvOracle,
                         ::testing::Values(ConvCase{1, 3, 5, 6, 6}, ConvCase{2, 3, 3, 5, 7}, ConvCase{3, 2, 7, 8, 8},
                                           ConvCase{1, 4, 11, 16, 16}, ConvCase{2, 2, 9, 4, 4},
                                           ConvCase{1, 2, 11, 5, 3}));

TEST(Layers, ConvFloatAgreesWithDouble)
{
    Conv2d<double> cd(2, 3, 5, true, "c");
    randomize(cd, 3);
    Conv2d<float> cf(2, 3, 5, true, "c");
    for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t i = 0; i < cd.params()[p]->value.size(); ++i)
            cf.params()[p]->value[i] = static_cast<float>(cd.params()[p]->value[i]);
    const auto xd = random_tensor(1, {2, 12, 12}, 4);
    Tensor<float> xf(1, xd.shape);
    for (std::size_t i = 0; i < xd.data.size(); ++i)
        xf.data[i] = static_cast<float>(xd.data[i]);
    const auto yd = cd.forward(xd, Mode::Infer);
    const auto yf = cf.forward(xf, Mode::Infer);
    for (std::size_t i = 0; i < yd.data.size(); ++i)
        EXPECT_NEAR(yf.data[i], yd.data[i], 1e-4);
}

TEST(Layers, ConvIsBatchInvariant)
{
    Conv2d<double> conv(2, 3, 5, true, "c");
    randomize(conv, 5);
    const auto x = random_tensor(3, {2, 9, 9}, 6);
    const auto all = conv.forward(x, Mode::Infer);
    Tensor<double> one(1, x.shape);
    std::copy(x.sample(1), x.sample(1) + x.sample_size(), one.data.begin());
    const auto single = conv.forward(one, Mode::Infer);
    for (std::size_t i = 0; i < single.data.size(); ++i)
        EXPECT_EQ(single.data[i], all.sample(1)[i]);
}

TEST(Layers, BatchNormGradients)
{
    BatchNorm2d<double> bn(3, "bn");
    randomize(bn, 7);
    EXPECT_LT(layer_grad_check(bn, random_tensor(4, {3, 4, 4}, 8), Mode::Train).max_rel_error, 1e-6);
}

TEST(Layers, BatchNormNormalizesInTrainMode)
{
    BatchNorm2d<double> bn(2, "bn");
    auto x = random_tensor(4, {2, 3, 3}, 9);
    for (auto& v : x.data)
        v = 5.0 + 3.0 * v;
    const auto y = bn.forward(x, Mode::Train);
    for (int c = 0; c < 2; ++c) {
        double m = 0.0, m2 = 0.0;
        const std::size_t n = y.data.size() / 2;
        for (std::size_t i = c; i < y.data.size(); i += 2) {
            m += y.data[i];
            m2 += y.data[i] * y.data[i];
        }
        m /= n;
        EXPECT_NEAR(m, 0.0, 1e-12);
        EXPECT_NEAR(m2 / n - m * m, 1.0, 1e-4);
    }
    // Running statistics moved 10% of the way from (0, 1).
    const auto bufs = bn.buffers();
    EXPECT_GT(bufs[0]->value[0], 0.3);
    EXPECT_LT(bufs[0]->value[0], 0.7);
}

TEST(Layers, BatchNormInferenceUsesRunningStats)
{
    BatchNorm2d<double> bn(1, "bn");
    bn.buffers()[0]->value[0] = 2.0;
    bn.buffers()[1]->value[0] = 4.0;
    Tensor<double> x(1, {1, 1, 2});
    x.data = {2.0, 4.0};
    const auto y = bn.forward(x, Mode::Infer);
    EXPECT_NEAR(y.data[0], 0.0, 1e-12);
    EXPECT_NEAR(y.data[1], 2.0 / std::sqrt(4.0 + 1e-5), 1e-12);
}

TEST(Layers, MaxPoolForwardAndGradient)
{
    MaxPool2d<double> mp;
    Tensor<double> x(1, {1, 2, 4});
    x.data = {1, 5, 2, 2, 3, 4, 9, 0};
    const auto y = mp.forward(x, Mode::Train);
    ASSERT_EQ(y.data.size(), 2u);
    EXPECT_EQ(y.data[0], 5);
    EXPECT_EQ(y.data[1], 9);
    Tensor<double> dy(1, y.shape);
    dy.data = {1.0, 2.0};
    mp.need_input_grad = true;
    const auto dx = mp.backward(dy);
    EXPECT_EQ(dx.data, (Storage<double>{0, 1, 0, 0, 0, 0, 2, 0}));
    EXPECT_LT(layer_grad_check(mp, random_tensor(2, {3, 4, 6}, 10), Mode::Train).max_rel_error, 1e-6);
}

TEST(Layers, LinearAndReluGradients)
{
    Linear<double> fc(6, 4, "fc");
    randomize(fc, 15);
    EXPECT_LT(layer_grad_check(fc, random_tensor(3, {6, 1, 1}, 16), Mode::Train).max_rel_error, 1e-6);
    ReLU<double> relu;
    EXPECT_LT(layer_grad_check(relu, random_tensor(3, {2, 3, 3}, 17), Mode::Train).max_rel_error, 1e-6);
}

TEST(Model, ReducedModelGradCheck)
{
    auto m = build_model<double>(reduced_model_config(), 1);
    auto x = random_tensor(3, {1, 16, 16}, 18);
    for (auto& v : x.data)
        v = v > 0.5 ? 1.0 : 0.0;
    auto t = random_tensor(3, {2, 1, 1}, 19);
    const auto r = grad_check(m, x, t);
    EXPECT_LT(r.max_rel_error, 1e-4);
    EXPECT_EQ(r.entries, m.parameter_count());
}

TEST(Model, FeatureMapShapes)
{
    ModelConfig c;
    EXPECT_EQ(c.feature_shape(), (Shape{32, 8, 8}));
    c.input_resolution = 64;
    EXPECT_EQ(c.feature_shape(), (Shape{32, 4, 4}));
    auto m = build_model<float>(c, 1);
    EXPECT_EQ(m.net.shapes().back(), (Shape{2, 1, 1}));
    c.input_resolution = 100;
    EXPECT_THROW(build_model<float>(c, 1), Error);
}

TEST(Model, InitializationIsSeeded)
{
    auto a = build_model<float>(small_config(32), 4);
    auto b = build_model<float>(small_config(32), 4);
    auto c = build_model<float>(small_config(32), 5);
    EXPECT_EQ(serialize_model(a), serialize_model(b));
    EXPECT_NE(serialize_model(a), serialize_model(c));
}

TEST(Model, SerializationRoundTrip)
{
    auto m = build_model<float>(small_config(32), 2);
    const auto bytes = serialize_model(m);
    auto back = deserialize_model<float>(bytes);
    EXPECT_EQ(serialize_model(back), bytes);
    auto truncated = bytes;
    truncated.resize(bytes.size() / 2);
    EXPECT_THROW(deserialize_model<float>(truncated), Error);
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(deserialize_model<float>(bad), Error);
}

TEST(Model, PredictRejectsWrongResolution)
{
    auto m = build_model<float>(small_config(32), 2);
    const std::vector<sensor::MarkerFrame> frames{sensor::MarkerFrame(64)};
    EXPECT_THROW(m.predict(std::span<const sensor::MarkerFrame>(frames)), Error);
}

TEST(Train, ZeroEpochsLeavesWeightsUntouched)
{
    const auto ds = tiny_dataset(16, 32, 1);
    auto m = build_model<float>(small_config(32), 3);
    const auto before = serialize_model(m);
    TrainConfig tc;
    tc.epochs = 0;
    auto out = train(m, ds, tc);
    EXPECT_TRUE(out.log.empty());
    auto again = deserialize_model<float>(serialize_model(out));
    // Only the dataset hash differs.
    EXPECT_EQ(serialize_model(again).size(), before.size());
    for (std::size_t i = 0; i < m.net.params().size(); ++i)
        EXPECT_EQ(out.net.params()[i]->value, m.net.params()[i]->value);
}

TEST(Train, IsDeterministic)
{
    const auto ds = tiny_dataset(24, 32, 2);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    tc.seed = 7;
    auto a = train(build_model<float>(small_config(32), 1), ds, tc);
    auto b = train(build_model<float>(small_config(32), 1), ds, tc);
    EXPECT_EQ(serialize_model(a), serialize_model(b));
    ASSERT_EQ(a.log.size(), 2u);
}

TEST(Train, OverfitsTinyDataset)
{
    const auto ds = tiny_dataset(16, 32, 3);
    TrainConfig tc;
    tc.epochs = 60;
    tc.batch_size = 4;
    tc.learning_rate = 2e-3;
    auto m = train(build_model<float>(small_config(32), 1), ds, tc);
    EXPECT_LT(m.log.back().train_mse, 0.25 * m.log.front().train_mse);
}

TEST(Train, ResolutionMismatchRejected)
{
    const auto ds = tiny_dataset(8, 32, 4);
    try {
        train(build_model<float>(small_config(64), 1), ds, TrainConfig{});
        FAIL() << "expected an error";
    } catch (const Error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("32"), std::string::npos);
        EXPECT_NE(msg.find("64"), std::string::npos);
    }
}

TEST(Train, DivergenceIsNumericError)
{
    const auto ds = tiny_dataset(16, 32, 5);
    TrainConfig tc;
    tc.epochs = 5;
    tc.batch_size = 8;
    tc.optimizer = OptimizerKind::Sgd;
    tc.learning_rate = 1e30;
    try {
        train(build_model<float>(small_config(32), 1), ds, tc);
        FAIL() << "expected divergence";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Numeric);
    }
}

TEST(Train, NormalizationRoundTrip)
{
    const auto n = normalization_for(datagen::ContactRanges{});
    EXPECT_DOUBLE_EQ(n.normalize_depth(1.0), 0.0);
    EXPECT_DOUBLE_EQ(n.normalize_location(50.0), 1.0);
    EXPECT_NEAR(n.denormalize_depth(n.normalize_depth(3.3)), 3.3, 1e-12);
}
