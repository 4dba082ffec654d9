#pragma once

// Thin FFTW wrapper for batched 2-D real transforms over channels-last images.
// Plans are created once per (precision, size, channel count) and shared; FFTW's
// execute functions are thread-safe, its planner is not, so planning is serialized.

#include <fftw3.h>

#include "finray/error.hpp"

#include <algorithm>
#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace finray::learner::fft {

template <class T>
struct Fftw;

template <>
struct Fftw<float> {
    using Plan = fftwf_plan;
    using Complex = fftwf_complex;
    static Plan r2c(const fftw_iodim* dims, const fftw_iodim* loop, float* in, Complex* out, unsigned flags)
    {
        return fftwf_plan_guru_dft_r2c(2, dims, 1, loop, in, out, flags);
    }
    static Plan c2r(const fftw_iodim* dims, const fftw_iodim* loop, Complex* in, float* out, unsigned flags)
    {
        return fftwf_plan_guru_dft_c2r(2, dims, 1, loop, in, out, flags);
    }
    static void run(Plan p, float* in, Complex* out) { fftwf_execute_dft_r2c(p, in, out); }
    static void run(Plan p, Complex* in, float* out) { fftwf_execute_dft_c2r(p, in, out); }
    static void* alloc(std::size_t bytes) { return fftwf_malloc(bytes); }
    static void release(void* p) { fftwf_free(p); }
};

template <>
struct Fftw<double> {
    using Plan = fftw_plan;
    using Complex = fftw_complex;
    static Plan r2c(const fftw_iodim* dims, const fftw_iodim* loop, double* in, Complex* out, unsigned flags)
    {
        return fftw_plan_guru_dft_r2c(2, dims, 1, loop, in, out, flags);
    }
    static Plan c2r(const fftw_iodim* dims, const fftw_iodim* loop, Complex* in, double* out, unsigned flags)
    {
        return fftw_plan_guru_dft_c2r(2, dims, 1, loop, in, out, flags);
    }
    static void run(Plan p, double* in, Complex* out) { fftw_execute_dft_r2c(p, in, out); }
    static void run(Plan p, Complex* in, double* out) { fftw_execute_dft_c2r(p, in, out); }
    static void* alloc(std::size_t bytes) { return fftw_malloc(bytes); }
    static void release(void* p) { fftw_free(p); }
};

// Smallest size >= n whose only prime factors are 2, 3, 5 and 7.
inline int good_size(int n)
{
    for (int m = std::max(n, 1);; ++m) {
        int r = m;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0)
                r /= p;
        if (r == 1)
            return m;
    }
}

// r2c and c2r plans for an n0 x n1 image with `channels` interleaved channels.
// Real layout [y][x][c]; spectrum layout [fy][fx][c] with fx < n1/2 + 1.
template <class T>
struct PlanPair {
    typename Fftw<T>::Plan forward;
    typename Fftw<T>::Plan inverse;
};

template <class T>
const PlanPair<T>& plans(int n0, int n1, int channels)
{
    using F = Fftw<T>;
    static std::mutex mutex;
    static std::map<std::tuple<int, int, int>, PlanPair<T>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    const auto key = std::make_tuple(n0, n1, channels);
    if (auto it = cache.find(key); it != cache.end())
        return it->second;

    const int f1 = n1 / 2 + 1;
    const std::size_t real_size = static_cast<std::size_t>(n0) * n1 * channels;
    const std::size_t spec_size = static_cast<std::size_t>(n0) * f1 * channels;
    auto* real = static_cast<T*>(F::alloc(sizeof(T) * real_size));
    auto* spec = static_cast<typename F::Complex*>(F::alloc(sizeof(typename F::Complex) * spec_size));
    const fftw_iodim rdims[2] = {{n0, n1 * channels, f1 * channels}, {n1, channels, channels}};
    const fftw_iodim cdims[2] = {{n0, f1 * channels, n1 * channels}, {n1, channels, channels}};
    const fftw_iodim loop[1] = {{channels, 1, 1}};
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair<T> p{F::r2c(rdims, loop, real, spec, flags), F::c2r(cdims, loop, spec, real, flags)};
    F::release(real);
    F::release(spec);
    require(p.forward != nullptr && p.inverse != nullptr, "FFT planning failed");
    return cache.emplace(key, p).first->second;
}

// One image's transform workspace.
template <class T>
class Image {
public:
    Image() = default;
    Image(int n0, int n1, int channels)
        : n0_(n0), n1_(n1), ch_(channels), real_(static_cast<std::size_t>(n0) * n1 * channels),
          spec_(static_cast<std::size_t>(n0) * (n1 / 2 + 1) * channels)
    {
    }

    int freqs() const { return n0_ * (n1_ / 2 + 1); }
    std::vector<T>& real() { return real_; }
    std::vector<std::complex<T>>& spectrum() { return spec_; }

    void forward()
    {
        const auto& p = plans<T>(n0_, n1_, ch_);
        Fftw<T>::run(p.forward, real_.data(), reinterpret_cast<typename Fftw<T>::Complex*>(spec_.data()));
    }
    // Unnormalized inverse (scaled by n0 * n1); overwrites the spectrum.
    void inverse()
    {
        const auto& p = plans<T>(n0_, n1_, ch_);
        Fftw<T>::run(p.inverse, reinterpret_cast<typename Fftw<T>::Complex*>(spec_.data()), real_.data());
    }

private:
    int n0_ = 0, n1_ = 0, ch_ = 0;
    std::vector<T> real_;
    std::vector<std::complex<T>> spec_;
};

} // namespace finray::learner::fft
