#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/tensor.hpp"

namespace gliomkit::net {

// One sampled pixel: owning image in the batch plus (row, col) at input resolution.
struct PixelCoord {
    std::int32_t image = 0;
    std::int32_t row = 0;
    std::int32_t col = 0;
};

namespace detail {

// align-corners-false mapping from input-resolution coordinates into a map
// downscaled by `scale`, clamped to the map bounds.
inline double map_coord(double coord, int scale, std::int64_t extent) {
    double u = (coord + 0.5) / static_cast<double>(scale) - 0.5;
    if (u < 0.0) u = 0.0;
    const double hi = static_cast<double>(extent - 1);
    if (u > hi) u = hi;
    return u;
}

struct BilinearWeights {
    std::int64_t lo, hi;
    double w_hi; // weight of the hi sample; lo gets 1 - w_hi
};

inline BilinearWeights bilinear_axis(double coord, int scale, std::int64_t extent) {
    const double u = map_coord(coord, scale, extent);
    BilinearWeights b;
    b.lo = static_cast<std::int64_t>(std::floor(u));
    if (b.lo > extent - 1) b.lo = extent - 1;
    b.hi = std::min<std::int64_t>(b.lo + 1, extent - 1);
    b.w_hi = u - static_cast<double>(b.lo);
    return b;
}

} // namespace detail

// Bilinearly samples each tapped feature map at every pixel and concatenates
// per-layer vectors in tap order: out (P, sum of tap channels).
// taps[i] has shape (B, C_i, H_i, W_i) and downscale factor scales[i].
template <typename T>
Tensor<T> hypercolumn_forward(const std::vector<const Tensor<T>*>& taps,
                              const std::vector<int>& scales,
                              const std::vector<PixelCoord>& coords, std::int64_t input_h,
                              std::int64_t input_w) {
    std::int64_t total_c = 0;
    for (const auto* t : taps) total_c += t->dim(1);
    const std::int64_t P = static_cast<std::int64_t>(coords.size());
    Tensor<T> out({P, total_c});

    for (std::int64_t p = 0; p < P; ++p) {
        const auto& px = coords[static_cast<std::size_t>(p)];
        if (px.row < 0 || px.row >= input_h || px.col < 0 || px.col >= input_w)
            throw value_error(concat("hypercolumn: pixel (", px.row, ",", px.col,
                                     ") outside image bounds ", input_h, "x", input_w));
        T* dst = out.data() + p * total_c;
        for (std::size_t l = 0; l < taps.size(); ++l) {
            const Tensor<T>& m = *taps[l];
            const std::int64_t C = m.dim(1), H = m.dim(2), W = m.dim(3);
            const auto ry = detail::bilinear_axis(px.row, scales[l], H);
            const auto cx = detail::bilinear_axis(px.col, scales[l], W);
            const T w00 = static_cast<T>((1.0 - ry.w_hi) * (1.0 - cx.w_hi));
            const T w01 = static_cast<T>((1.0 - ry.w_hi) * cx.w_hi);
            const T w10 = static_cast<T>(ry.w_hi * (1.0 - cx.w_hi));
            const T w11 = static_cast<T>(ry.w_hi * cx.w_hi);
            const T* base = m.data() + static_cast<std::int64_t>(px.image) * C * H * W;
            for (std::int64_t c = 0; c < C; ++c) {
                const T* plane = base + c * H * W;
                *dst++ = w00 * plane[ry.lo * W + cx.lo] + w01 * plane[ry.lo * W + cx.hi] +
                         w10 * plane[ry.hi * W + cx.lo] + w11 * plane[ry.hi * W + cx.hi];
            }
        }
    }
    return out;
}

// Scatters the hypercolumn gradient (out.g) back through the four
// interpolation weights into each tap's gradient buffer.
template <typename T>
void hypercolumn_backward(const std::vector<Tensor<T>*>& taps, const std::vector<int>& scales,
                          const std::vector<PixelCoord>& coords, Tensor<T>& out) {
    std::int64_t total_c = 0;
    for (auto* t : taps) {
        t->ensure_grad();
        total_c += t->dim(1);
    }
    const T* dout = out.grad();
    const std::int64_t P = static_cast<std::int64_t>(coords.size());
    for (std::int64_t p = 0; p < P; ++p) {
        const auto& px = coords[static_cast<std::size_t>(p)];
        const T* src = dout + p * total_c;
        for (std::size_t l = 0; l < taps.size(); ++l) {
            Tensor<T>& m = *taps[l];
            const std::int64_t C = m.dim(1), H = m.dim(2), W = m.dim(3);
            const auto ry = detail::bilinear_axis(px.row, scales[l], H);
            const auto cx = detail::bilinear_axis(px.col, scales[l], W);
            const T w00 = static_cast<T>((1.0 - ry.w_hi) * (1.0 - cx.w_hi));
            const T w01 = static_cast<T>((1.0 - ry.w_hi) * cx.w_hi);
            const T w10 = static_cast<T>(ry.w_hi * (1.0 - cx.w_hi));
            const T w11 = static_cast<T>(ry.w_hi * cx.w_hi);
            T* base = m.g.data() + static_cast<std::int64_t>(px.image) * C * H * W;
            for (std::int64_t c = 0; c < C; ++c) {
                T* plane = base + c * H * W;
                const T d = *src++;
                plane[ry.lo * W + cx.lo] += w00 * d;
                plane[ry.lo * W + cx.hi] += w01 * d;
                plane[ry.hi * W + cx.lo] += w10 * d;
                plane[ry.hi * W + cx.hi] += w11 * d;
            }
        }
    }
}

} // namespace gliomkit::net
