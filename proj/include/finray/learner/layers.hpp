#pragma once

// Layers of the convolutional regressor. Each layer caches what it needs during
// forward() and consumes it in backward(); a Sequential run backwards over its layers
// is the whole reverse-mode differentiation core.

#include "finray/learner/fft.hpp"
#include "finray/learner/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace finray::learner {

enum class Mode { Train, Infer };

template <class T>
struct Param {
    std::string name;
    Storage<T> value;
    Storage<T> grad;

    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

// Persisted, non-trainable state (batch-norm running statistics).
template <class T>
struct Buffer {
    std::string name;
    Storage<T> value;
};

template <class T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
    // Accumulates parameter gradients and returns dL/dx (empty if !need_input_grad).
    virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
    virtual Shape output_shape(Shape in) const = 0;
    virtual std::string kind() const = 0;
    virtual std::vector<Param<T>*> params() { return {}; }
    virtual std::vector<Buffer<T>*> buffers() { return {}; }
    virtual std::unique_ptr<Layer<T>> clone() const = 0;

    bool need_input_grad = true;
};

// 2-D convolution, stride 1, "same" zero padding (odd kernels), weights stored
// [ky][kx][in][out]. Computed as a cross-correlation in the frequency domain: with
// transform sizes >= h + k/2 the cyclic result equals the zero-padded one, so forward,
// input gradient and weight gradient are per-frequency channel mixes. Each sample is
// transformed and mixed on its own.
template <class T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(int in_channels, int out_channels, int kernel, bool bias, const std::string& name)
        : in_(in_channels), out_(out_channels), k_(kernel), pad_(kernel / 2), has_bias_(bias)
    {
        require(kernel % 2 == 1, "convolution kernels must be odd for same padding");
        weight_ = {name + ".weight", Storage<T>(static_cast<std::size_t>(out_) * patch()),
                   Storage<T>(static_cast<std::size_t>(out_) * patch())};
        bias_ = {name + ".bias", Storage<T>(has_bias_ ? out_ : 0), Storage<T>(has_bias_ ? out_ : 0)};
    }

    int patch() const { return in_ * k_ * k_; }
    int kernel() const { return k_; }
    int in_channels() const { return in_; }
    int out_channels() const { return out_; }

    Shape output_shape(Shape in) const override
    {
        require(in.c == in_, "conv input channels mismatch");
        return {out_, in.h + 2 * pad_ - k_ + 1, in.w + 2 * pad_ - k_ + 1};
    }
    std::string kind() const override { return "conv2d"; }

    std::vector<Param<T>*> params() override
    {
        if (has_bias_)
            return {&weight_, &bias_};
        return {&weight_};
    }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }

    Tensor<T> forward(const Tensor<T>& x, Mode) override
    {
        const Shape os = output_shape(x.shape);
        setup(x.shape);
        weight_spectrum();
        const int nf = x_img_.freqs();
        x_spec_.resize(static_cast<std::size_t>(x.n) * nf * in_);
        Tensor<T> y(x.n, os);
        std::vector<T> acc_r(out_), acc_i(out_);
        for (int i = 0; i < x.n; ++i) {
            load(x.sample(i), x.shape, in_, x_img_);
            x_img_.forward();
            std::complex<T>* xs = x_spec_.data() + static_cast<std::size_t>(i) * nf * in_;
            std::copy(x_img_.spectrum().begin(), x_img_.spectrum().end(), xs);
            auto& ys = y_img_.spectrum();
            for (int f = 0; f < nf; ++f) {
                std::fill(acc_r.begin(), acc_r.end(), T(0));
                std::fill(acc_i.begin(), acc_i.end(), T(0));
                const T* wr = wr_.data() + static_cast<std::size_t>(f) * in_ * out_;
                const T* wi = wi_.data() + static_cast<std::size_t>(f) * in_ * out_;
                for (int c = 0; c < in_; ++c) {
                    const T xr = xs[f * in_ + c].real();
                    const T xi = xs[f * in_ + c].imag();
                    const T* a = wr + c * out_;
                    const T* b = wi + c * out_;
                    for (int o = 0; o < out_; ++o) {
                        acc_r[o] += xr * a[o] - xi * b[o];
                        acc_i[o] += xr * b[o] + xi * a[o];
                    }
                }
                for (int o = 0; o < out_; ++o)
                    ys[static_cast<std::size_t>(f) * out_ + o] = {acc_r[o], acc_i[o]};
            }
            y_img_.inverse();
            store(y_img_, os, out_, y.sample(i));
            if (has_bias_) {
                T* dst = y.sample(i);
                for (int p = 0; p < os.h * os.w; ++p)
                    for (int o = 0; o < out_; ++o)
                        dst[p * out_ + o] += bias_.value[o];
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override
    {
        const Shape is = in_shape_;
        const int nf = x_img_.freqs();
        Tensor<T> dx;
        if (this->need_input_grad)
            dx = Tensor<T>(dy.n, is);
        std::vector<T> rr(static_cast<std::size_t>(nf) * in_ * out_, T(0));
        std::vector<T> ri(rr.size(), T(0));
        std::vector<T> gr(out_), gi(out_), acc_r(in_), acc_i(in_);
        for (int i = 0; i < dy.n; ++i) {
            const T* g = dy.sample(i);
            if (has_bias_)
                for (int p = 0; p < dy.shape.h * dy.shape.w; ++p)
                    for (int o = 0; o < out_; ++o)
                        bias_.grad[o] += g[p * out_ + o];
            load(g, dy.shape, out_, y_img_);
            y_img_.forward();
            const auto& gs = y_img_.spectrum();
            const std::complex<T>* xs = x_spec_.data() + static_cast<std::size_t>(i) * nf * in_;
            auto& dxs = x_img_.spectrum();
            for (int f = 0; f < nf; ++f) {
                for (int o = 0; o < out_; ++o) {
                    gr[o] = gs[static_cast<std::size_t>(f) * out_ + o].real();
                    gi[o] = gs[static_cast<std::size_t>(f) * out_ + o].imag();
                }
                // weight spectrum gradient: x * conj(dy)
                T* r_re = rr.data() + static_cast<std::size_t>(f) * in_ * out_;
                T* r_im = ri.data() + static_cast<std::size_t>(f) * in_ * out_;
                for (int c = 0; c < in_; ++c) {
                    const T xr = xs[f * in_ + c].real();
                    const T xi = xs[f * in_ + c].imag();
                    T* a = r_re + c * out_;
                    T* b = r_im + c * out_;
                    for (int o = 0; o < out_; ++o) {
                        a[o] += xr * gr[o] + xi * gi[o];
                        b[o] += xi * gr[o] - xr * gi[o];
                    }
                }
                if (!this->need_input_grad)
                    continue;
                // input gradient: dy * conj(w), summed over output channels
                std::fill(acc_r.begin(), acc_r.end(), T(0));
                std::fill(acc_i.begin(), acc_i.end(), T(0));
                const T* wr = wtr_.data() + static_cast<std::size_t>(f) * in_ * out_;
                const T* wi = wti_.data() + static_cast<std::size_t>(f) * in_ * out_;
                for (int o = 0; o < out_; ++o) {
                    const T* a = wr + o * in_;
                    const T* b = wi + o * in_;
                    for (int c = 0; c < in_; ++c) {
                        acc_r[c] += gr[o] * a[c] + gi[o] * b[c];
                        acc_i[c] += gi[o] * a[c] - gr[o] * b[c];
                    }
                }
                for (int c = 0; c < in_; ++c)
                    dxs[static_cast<std::size_t>(f) * in_ + c] = {acc_r[c], acc_i[c]};
            }
            if (this->need_input_grad) {
                x_img_.inverse();
                store(x_img_, is, in_, dx.sample(i));
            }
        }

        auto& ks = k_img_.spectrum();
        for (std::size_t j = 0; j < rr.size(); ++j)
            ks[j] = {rr[j], ri[j]};
        k_img_.inverse();
        const T scale = T(1) / static_cast<T>(n0_ * n1_);
        const auto& kr = k_img_.real();
        const std::size_t co = static_cast<std::size_t>(in_) * out_;
        for (int ky = 0; ky < k_; ++ky)
            for (int kx = 0; kx < k_; ++kx) {
                const std::size_t src = (wrap(ky - pad_, n0_) * n1_ + wrap(kx - pad_, n1_)) * co;
                const std::size_t dst = (static_cast<std::size_t>(ky) * k_ + kx) * co;
                for (std::size_t j = 0; j < co; ++j)
                    weight_.grad[dst + j] += kr[src + j] * scale;
            }
        return dx;
    }

private:
    static std::size_t wrap(int v, int n) { return static_cast<std::size_t>((v % n + n) % n); }

    void setup(Shape in)
    {
        if (in == in_shape_ && n0_ > 0)
            return;
        in_shape_ = in;
        n0_ = fft::good_size(in.h + pad_);
        n1_ = fft::good_size(in.w + pad_);
        x_img_ = fft::Image<T>(n0_, n1_, in_);
        y_img_ = fft::Image<T>(n0_, n1_, out_);
        k_img_ = fft::Image<T>(n0_, n1_, in_ * out_);
    }

    // Kernel placed at (-ky + p, -kx + p) turns the correlation into a cyclic convolution.
    void weight_spectrum()
    {
        auto& kr = k_img_.real();
        std::fill(kr.begin(), kr.end(), T(0));
        const std::size_t co = static_cast<std::size_t>(in_) * out_;
        for (int ky = 0; ky < k_; ++ky)
            for (int kx = 0; kx < k_; ++kx) {
                const std::size_t dst = (wrap(pad_ - ky, n0_) * n1_ + wrap(pad_ - kx, n1_)) * co;
                const std::size_t src = (static_cast<std::size_t>(ky) * k_ + kx) * co;
                std::copy(weight_.value.begin() + src, weight_.value.begin() + src + co, kr.begin() + dst);
            }
        k_img_.forward();
        const auto& ks = k_img_.spectrum();
        const int nf = k_img_.freqs();
        wr_.resize(static_cast<std::size_t>(nf) * co);
        wi_.resize(wr_.size());
        wtr_.resize(wr_.size());
        wti_.resize(wr_.size());
        for (int f = 0; f < nf; ++f)
            for (int c = 0; c < in_; ++c)
                for (int o = 0; o < out_; ++o) {
                    const auto v = ks[f * co + c * out_ + o];
                    wr_[f * co + c * out_ + o] = v.real();
                    wi_[f * co + c * out_ + o] = v.imag();
                    wtr_[f * co + o * in_ + c] = v.real();
                    wti_[f * co + o * in_ + c] = v.imag();
                }
    }

    void load(const T* src, Shape s, int channels, fft::Image<T>& img) const
    {
        auto& r = img.real();
        std::fill(r.begin(), r.end(), T(0));
        const std::size_t row = static_cast<std::size_t>(s.w) * channels;
        for (int y = 0; y < s.h; ++y)
            std::copy(src + y * row, src + (y + 1) * row, r.begin() + static_cast<std::size_t>(y) * n1_ * channels);
    }

    void store(fft::Image<T>& img, Shape s, int channels, T* dst) const
    {
        const T scale = T(1) / static_cast<T>(n0_ * n1_);
        const auto& r = img.real();
        const std::size_t row = static_cast<std::size_t>(s.w) * channels;
        for (int y = 0; y < s.h; ++y) {
            const T* src = r.data() + static_cast<std::size_t>(y) * n1_ * channels;
            for (std::size_t j = 0; j < row; ++j)
                dst[y * row + j] = src[j] * scale;
        }
    }

    int in_, out_, k_, pad_;
    bool has_bias_;
    Param<T> weight_;
    Param<T> bias_;
    Shape in_shape_;
    int n0_ = 0, n1_ = 0;
    fft::Image<T> x_img_, y_img_, k_img_;
    std::vector<std::complex<T>> x_spec_;
    std::vector<T> wr_, wi_, wtr_, wti_;
};

// Per-channel batch normalization over (N, H, W).
template <class T>
class BatchNorm2d final : public Layer<T> {
public:
    BatchNorm2d(int channels, const std::string& name, double eps = 1e-5, double momentum = 0.1)
        : c_(channels), eps_(eps), momentum_(momentum)
    {
        gamma_ = {name + ".gamma", Storage<T>(c_, T(1)), Storage<T>(c_, T(0))};
        beta_ = {name + ".beta", Storage<T>(c_, T(0)), Storage<T>(c_, T(0))};
        running_mean_ = {name + ".running_mean", Storage<T>(c_, T(0))};
        running_var_ = {name + ".running_var", Storage<T>(c_, T(1))};
    }

    Shape output_shape(Shape in) const override
    {
        require(in.c == c_, "batch-norm channel mismatch");
        return in;
    }
    std::string kind() const override { return "batchnorm2d"; }
    std::vector<Param<T>*> params() override { return {&gamma_, &beta_}; }
    std::vector<Buffer<T>*> buffers() override { return {&running_mean_, &running_var_}; }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<BatchNorm2d>(*this); }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override
    {
        mode_ = mode;
        const std::size_t rows = x.data.size() / c_;
        const double count = static_cast<double>(rows);
        std::vector<double> mean(c_, 0.0);
        std::vector<double> var(c_, 0.0);
        if (mode == Mode::Train) {
            for (std::size_t r = 0; r < rows; ++r) {
                const T* p = x.data.data() + r * c_;
                for (int c = 0; c < c_; ++c)
                    mean[c] += p[c];
            }
            for (int c = 0; c < c_; ++c)
                mean[c] /= count;
            for (std::size_t r = 0; r < rows; ++r) {
                const T* p = x.data.data() + r * c_;
                for (int c = 0; c < c_; ++c) {
                    const double d = p[c] - mean[c];
                    var[c] += d * d;
                }
            }
            for (int c = 0; c < c_; ++c) {
                const double ss = var[c];
                var[c] = ss / count;
                const double unbiased = count > 1 ? ss / (count - 1) : var[c];
                running_mean_.value[c] =
                    static_cast<T>((1 - momentum_) * running_mean_.value[c] + momentum_ * mean[c]);
                running_var_.value[c] =
                    static_cast<T>((1 - momentum_) * running_var_.value[c] + momentum_ * unbiased);
            }
        } else {
            for (int c = 0; c < c_; ++c) {
                mean[c] = running_mean_.value[c];
                var[c] = running_var_.value[c];
            }
        }
        inv_std_.resize(c_);
        std::vector<T> m(c_), inv(c_);
        for (int c = 0; c < c_; ++c) {
            inv_std_[c] = 1.0 / std::sqrt(var[c] + eps_);
            m[c] = static_cast<T>(mean[c]);
            inv[c] = static_cast<T>(inv_std_[c]);
        }
        xhat_ = Tensor<T>(x.n, x.shape);
        Tensor<T> y(x.n, x.shape);
        for (std::size_t r = 0; r < rows; ++r) {
            const T* p = x.data.data() + r * c_;
            T* xh = xhat_.data.data() + r * c_;
            T* out = y.data.data() + r * c_;
            for (int c = 0; c < c_; ++c) {
                xh[c] = (p[c] - m[c]) * inv[c];
                out[c] = gamma_.value[c] * xh[c] + beta_.value[c];
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override
    {
        const std::size_t rows = dy.data.size() / c_;
        const double count = static_cast<double>(rows);
        std::vector<double> sum_dy(c_, 0.0);
        std::vector<double> sum_dy_xhat(c_, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const T* g = dy.data.data() + r * c_;
            const T* xh = xhat_.data.data() + r * c_;
            for (int c = 0; c < c_; ++c) {
                sum_dy[c] += g[c];
                sum_dy_xhat[c] += static_cast<double>(g[c]) * xh[c];
            }
        }
        std::vector<T> scale(c_), mdy(c_, T(0)), mdyx(c_, T(0));
        for (int c = 0; c < c_; ++c) {
            gamma_.grad[c] += static_cast<T>(sum_dy_xhat[c]);
            beta_.grad[c] += static_cast<T>(sum_dy[c]);
            scale[c] = static_cast<T>(gamma_.value[c] * inv_std_[c]);
            if (mode_ == Mode::Train) {
                mdy[c] = static_cast<T>(sum_dy[c] / count);
                mdyx[c] = static_cast<T>(sum_dy_xhat[c] / count);
            }
        }
        Tensor<T> dx(dy.n, dy.shape);
        for (std::size_t r = 0; r < rows; ++r) {
            const T* g = dy.data.data() + r * c_;
            const T* xh = xhat_.data.data() + r * c_;
            T* out = dx.data.data() + r * c_;
            for (int c = 0; c < c_; ++c)
                out[c] = scale[c] * (g[c] - mdy[c] - xh[c] * mdyx[c]);
        }
        return dx;
    }

private:
    int c_;
    double eps_, momentum_;
    Param<T> gamma_, beta_;
    Buffer<T> running_mean_, running_var_;
    Mode mode_ = Mode::Train;
    Tensor<T> xhat_;
    std::vector<double> inv_std_;
};

template <class T>
class ReLU final : public Layer<T> {
public:
    Shape output_shape(Shape in) const override { return in; }
    std::string kind() const override { return "relu"; }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ReLU>(*this); }

    Tensor<T> forward(const Tensor<T>& x, Mode) override
    {
        Tensor<T> y(x.n, x.shape);
        mask_.resize(y.data.size());
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            const bool on = x.data[i] > T(0);
            mask_[i] = on;
            y.data[i] = on ? x.data[i] : T(0);
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override
    {
        Tensor<T> dx(dy.n, dy.shape);
        for (std::size_t i = 0; i < dx.data.size(); ++i)
            dx.data[i] = mask_[i] ? dy.data[i] : T(0);
        return dx;
    }

private:
    std::vector<std::uint8_t> mask_;
};

// 2x2 max-pool, stride 2. Gradient goes to the first maximal element in row-major
// window order.
template <class T>
class MaxPool2d final : public Layer<T> {
public:
    Shape output_shape(Shape in) const override
    {
        require(in.h % 2 == 0 && in.w % 2 == 0, "max-pool input dims must be even, got " + in.str());
        return {in.c, in.h / 2, in.w / 2};
    }
    std::string kind() const override { return "maxpool2d"; }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool2d>(*this); }

    Tensor<T> forward(const Tensor<T>& x, Mode) override
    {
        in_shape_ = x.shape;
        const Shape os = output_shape(x.shape);
        const std::size_t C = static_cast<std::size_t>(x.shape.c);
        const std::size_t row = static_cast<std::size_t>(x.shape.w) * C;
        Tensor<T> y(x.n, os);
        argmax_.resize(y.data.size());
        std::size_t o = 0;
        for (int i = 0; i < x.n; ++i) {
            const T* src = x.sample(i);
            for (int oy = 0; oy < os.h; ++oy) {
                for (int ox = 0; ox < os.w; ++ox) {
                    const std::size_t base = (2 * oy) * row + (2 * ox) * C;
                    const std::size_t cand[4] = {base, base + C, base + row, base + row + C};
                    for (std::size_t c = 0; c < C; ++c, ++o) {
                        std::size_t best = cand[0] + c;
                        T bv = src[best];
                        for (int q = 1; q < 4; ++q)
                            if (src[cand[q] + c] > bv) {
                                bv = src[cand[q] + c];
                                best = cand[q] + c;
                            }
                        y.data[o] = bv;
                        argmax_[o] = static_cast<std::uint32_t>(best);
                    }
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override
    {
        Tensor<T> dx(dy.n, in_shape_);
        const std::size_t per = dy.sample_size();
        for (int i = 0; i < dy.n; ++i) {
            T* dst = dx.sample(i);
            for (std::size_t j = 0; j < per; ++j) {
                const std::size_t o = static_cast<std::size_t>(i) * per + j;
                dst[argmax_[o]] += dy.data[o];
            }
        }
        return dx;
    }

private:
    Shape in_shape_;
    std::vector<std::uint32_t> argmax_;
};

template <class T>
class Flatten final : public Layer<T> {
public:
    Shape output_shape(Shape in) const override { return {static_cast<int>(in.size()), 1, 1}; }
    std::string kind() const override { return "flatten"; }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Flatten>(*this); }

    Tensor<T> forward(const Tensor<T>& x, Mode) override
    {
        in_shape_ = x.shape;
        Tensor<T> y = x;
        y.shape = output_shape(x.shape);
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) override
    {
        Tensor<T> dx = dy;
        dx.shape = in_shape_;
        return dx;
    }

private:
    Shape in_shape_;
};

// Fully connected layer on flattened inputs. Each sample is a separate matrix-vector
// product so a row's result never depends on what else is in the batch.
template <class T>
class Linear final : public Layer<T> {
public:
    Linear(int in_features, int out_features, const std::string& name) : in_(in_features), out_(out_features)
    {
        weight_ = {name + ".weight", Storage<T>(static_cast<std::size_t>(out_) * in_),
                   Storage<T>(static_cast<std::size_t>(out_) * in_)};
        bias_ = {name + ".bias", Storage<T>(out_), Storage<T>(out_)};
    }

    int in_features() const { return in_; }
    int out_features() const { return out_; }

    Shape output_shape(Shape in) const override
    {
        require(static_cast<int>(in.size()) == in_, "linear input size mismatch");
        return {out_, 1, 1};
    }
    std::string kind() const override { return "linear"; }
    std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Linear>(*this); }

    Tensor<T> forward(const Tensor<T>& x, Mode) override
    {
        input_ = x;
        Tensor<T> y(x.n, {out_, 1, 1});
        Eigen::Map<const MatR<T>> W(weight_.value.data(), out_, in_);
        Eigen::Map<const VecX<T>> b(bias_.value.data(), out_);
        for (int i = 0; i < x.n; ++i) {
            Eigen::Map<VecX<T>> yi(y.sample(i), out_);
            yi.noalias() = W * Eigen::Map<const VecX<T>>(x.sample(i), in_);
            yi += b;
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override
    {
        Eigen::Map<const MatR<T>> X(input_.data.data(), input_.n, in_);
        Eigen::Map<const MatR<T>> dY(dy.data.data(), dy.n, out_);
        Eigen::Map<MatR<T>> dW(weight_.grad.data(), out_, in_);
        dW.noalias() += dY.transpose() * X;
        Eigen::Map<VecX<T>>(bias_.grad.data(), out_) += dY.colwise().sum().transpose();
        Tensor<T> dx;
        if (this->need_input_grad) {
            dx = Tensor<T>(dy.n, input_.shape);
            Eigen::Map<const MatR<T>> W(weight_.value.data(), out_, in_);
            Eigen::Map<MatR<T>>(dx.data.data(), dy.n, in_).noalias() = dY * W;
        }
        return dx;
    }

private:
    int in_, out_;
    Param<T> weight_, bias_;
    Tensor<T> input_;
};

template <class T>
class Sequential {
public:
    Sequential() = default;
    Sequential(const Sequential& o) : input_shape_(o.input_shape_)
    {
        for (const auto& l : o.layers_)
            layers_.push_back(l->clone());
    }
    Sequential& operator=(const Sequential& o)
    {
        if (this != &o) {
            Sequential tmp(o);
            std::swap(layers_, tmp.layers_);
            input_shape_ = o.input_shape_;
        }
        return *this;
    }
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    void set_input_shape(Shape s) { input_shape_ = s; }
    Shape input_shape() const { return input_shape_; }

    template <class L, class... Args>
    L& add(Args&&... args)
    {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    std::size_t size() const { return layers_.size(); }
    Layer<T>& layer(std::size_t i) { return *layers_[i]; }
    const Layer<T>& layer(std::size_t i) const { return *layers_[i]; }

    // Output shape after every layer, checked against the closed-form arithmetic.
    std::vector<Shape> shapes() const
    {
        std::vector<Shape> out;
        Shape s = input_shape_;
        for (const auto& l : layers_) {
            s = l->output_shape(s);
            out.push_back(s);
        }
        return out;
    }

    Tensor<T> forward(Tensor<T> x, Mode mode)
    {
        require(x.shape == input_shape_, "input shape " + x.shape.str() + " does not match network input " +
                                             input_shape_.str());
        for (auto& l : layers_)
            x = l->forward(x, mode);
        return x;
    }

    Tensor<T> backward(Tensor<T> dy)
    {
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
            dy = (*it)->backward(dy);
            if (dy.data.empty())
                break;
        }
        return dy;
    }

    std::vector<Param<T>*> params()
    {
        std::vector<Param<T>*> out;
        for (auto& l : layers_)
            for (auto* p : l->params())
                out.push_back(p);
        return out;
    }

    std::vector<Buffer<T>*> buffers()
    {
        std::vector<Buffer<T>*> out;
        for (auto& l : layers_)
            for (auto* b : l->buffers())
                out.push_back(b);
        return out;
    }

    void zero_grad()
    {
        for (auto* p : params())
            p->zero_grad();
    }

private:
    Shape input_shape_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

} // namespace finray::learner
