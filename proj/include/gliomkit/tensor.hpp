#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "gliomkit/common.hpp"

namespace gliomkit {

// Dense N-d array with an optional same-shape gradient buffer. The layer
// functions in net/ operate on raw pointers into these; shapes are checked at
// the boundaries, hot loops index directly.
template <typename T>
struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<T> v;
    std::vector<T> g;

    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> s, T fill = T{}) : shape(std::move(s)) {
        v.assign(static_cast<std::size_t>(count()), fill);
    }

    std::int64_t count() const {
        std::int64_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }

    std::int64_t dim(std::size_t i) const { return shape.at(i); }

    void ensure_grad() {
        if (g.size() != v.size()) g.assign(v.size(), T{});
    }
    void zero_grad() {
        if (!g.empty()) std::fill(g.begin(), g.end(), T{});
    }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }
    T* grad() {
        ensure_grad();
        return g.data();
    }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + ")";
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape);
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

template <typename T>
void require_shape(const Tensor<T>& t, const std::vector<std::int64_t>& expected,
                   const std::string& name) {
    if (t.shape != expected) {
        Tensor<T> want(expected);
        throw shape_error(concat(name, ": expected shape ", want.shape_str(), ", got ",
                                 t.shape_str()));
    }
}

} // namespace gliomkit
