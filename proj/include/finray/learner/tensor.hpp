#pragma once

#include "finray/error.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <cstddef>
#include <new>
#include <mutex>
#include <string>
#include <vector>

namespace finray::learner {

struct Shape {
    int c = 0;
    int h = 0;
    int w = 0;

    std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
    bool operator==(const Shape&) const = default;
    std::string str() const { return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c); }
};

// Activations are allocated and freed every step; by default glibc hands blocks this
// large straight back to the kernel, and re-faulting the pages costs more than the
// arithmetic on them. Keep freed memory in the heap instead.
inline void retain_freed_memory()
{
#if defined(__GLIBC__)
    static std::once_flag once;
    std::call_once(once, [] {
        mallopt(M_MMAP_THRESHOLD, 1 << 30);
        mallopt(M_TRIM_THRESHOLD, -1);
    });
#endif
}

// Eigen's vectorized reductions peel off a head that depends on the buffer's address,
// so the summation order (and the low bits) would vary with where the heap put it.
// A fixed alignment keeps training bit-reproducible within and across processes.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t alignment{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept
    {
    }
    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }
    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept
    {
        return true;
    }
};

template <class T>
using Storage = std::vector<T, AlignedAllocator<T>>;

// Dense batch, channels-last: element (i, y, x, c) sits at ((i*h + y)*w + x)*c_count + c.
template <class T>
struct Tensor {
    int n = 0;
    Shape shape;
    Storage<T> data;

    Tensor() = default;
    Tensor(int batch, Shape s, T fill = T(0))
        : n(batch), shape(s), data(static_cast<std::size_t>(batch) * s.size(), fill)
    {
    }

    std::size_t sample_size() const { return shape.size(); }
    T* sample(int i) { return data.data() + static_cast<std::size_t>(i) * sample_size(); }
    const T* sample(int i) const { return data.data() + static_cast<std::size_t>(i) * sample_size(); }
};

} // namespace finray::learner
