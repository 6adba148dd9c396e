#pragma once

#include "procwarm/errors.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <numeric>
#include <vector>

namespace procwarm::model {

// 64-byte aligned storage. Vectorized Eigen kernels peel loop heads to
// reach alignment, so a fixed allocation alignment keeps the floating
// point summation order, and therefore every result bit, independent of
// where the allocator happened to place the buffer.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
    }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept {
        return true;
    }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

// Dense row-major tensor. Shape is kept for manifests and shape checks;
// the math views the data as an Eigen map.
template <typename T>
struct Tensor {
    std::vector<std::int64_t> shape;
    AlignedVector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> s) : shape(std::move(s)) {
        data.assign(static_cast<std::size_t>(numel()), T(0));
    }

    std::int64_t numel() const {
        return std::accumulate(shape.begin(), shape.end(), std::int64_t{1},
                               [](std::int64_t a, std::int64_t b) { return a * b; });
    }

    std::int64_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::int64_t cols() const { return shape.empty() ? 1 : numel() / shape[0]; }

    bool operator==(const Tensor&) const = default;

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.reserve(data.size());
        for (T v : data) out.data.push_back(static_cast<U>(v));
        return out;
    }
};

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

// Views a tensor as (rows, cols) where rows is the leading dimension.
template <typename T>
MatMap<T> as_matrix(Tensor<T>& t) {
    return MatMap<T>(t.data.data(), t.rows(), t.cols());
}
template <typename T>
ConstMatMap<T> as_matrix(const Tensor<T>& t) {
    return ConstMatMap<T>(t.data.data(), t.rows(), t.cols());
}
template <typename T>
VecMap<T> as_vector(Tensor<T>& t) {
    return VecMap<T>(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}
template <typename T>
ConstVecMap<T> as_vector(const Tensor<T>& t) {
    return ConstVecMap<T>(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}

inline void check_shape(const std::vector<std::int64_t>& got,
                        const std::vector<std::int64_t>& want, const char* what) {
    if (got != want) {
        auto fmt = [](const std::vector<std::int64_t>& s) {
            std::string out = "(";
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (i) out += ",";
                out += std::to_string(s[i]);
            }
            return out + ")";
        };
        throw ValidationError(std::string("shape mismatch for ") + what + ": got " + fmt(got) +
                              ", want " + fmt(want));
    }
}

}  // namespace procwarm::model
