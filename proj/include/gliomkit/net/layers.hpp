#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/tensor.hpp"

namespace gliomkit::net {

// Layers fixed to the pixel-block geometry: 3x3 kernels, stride 1, zero
// padding 1, so spatial extents are preserved.
//
// Backward convention: every tensor's .g buffer accumulates dL/d(tensor).
// A backward function reads the output tensor's .g and accumulates into the
// gradients of its inputs and parameters. Callers zero parameter gradients at
// the start of a step; activation tensors allocate zeroed .g on demand.

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (x.shape.size() != 4) throw shape_error(concat("conv2d: input must be 4-d, got ", x.shape_str()));
    const std::int64_t B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (w.shape.size() != 4 || w.dim(1) != Cin || w.dim(2) != 3 || w.dim(3) != 3)
        throw shape_error(concat("conv2d: weights ", w.shape_str(), " do not match input channels ", Cin));
    const std::int64_t Cout = w.dim(0);
    if (b.count() != Cout) throw shape_error("conv2d: bias length must equal out channels");

    Tensor<T> y({B, Cout, H, W});
    const T* xp = x.data();
    const T* wp = w.data();
    T* yp = y.data();
    const std::int64_t plane = H * W;

    for (std::int64_t n = 0; n < B; ++n) {
        for (std::int64_t co = 0; co < Cout; ++co) {
            T* ybase = yp + (n * Cout + co) * plane;
            std::fill(ybase, ybase + plane, b.v[static_cast<std::size_t>(co)]);
            for (std::int64_t ci = 0; ci < Cin; ++ci) {
                const T* xbase = xp + (n * Cin + ci) * plane;
                const T* wk = wp + (co * Cin + ci) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        const T wv = wk[ky * 3 + kx];
                        const std::int64_t r0 = std::max<std::int64_t>(0, 1 - ky);
                        const std::int64_t r1 = std::min<std::int64_t>(H, H + 1 - ky);
                        const std::int64_t c0 = std::max<std::int64_t>(0, 1 - kx);
                        const std::int64_t c1 = std::min<std::int64_t>(W, W + 1 - kx);
                        for (std::int64_t r = r0; r < r1; ++r) {
                            T* yrow = ybase + r * W;
                            const T* xrow = xbase + (r + ky - 1) * W + (kx - 1);
                            for (std::int64_t c = c0; c < c1; ++c) yrow[c] += wv * xrow[c];
                        }
                    }
                }
            }
        }
    }
    return y;
}

template <typename T>
void conv2d_backward(Tensor<T>& x, Tensor<T>& w, Tensor<T>& b, Tensor<T>& y,
                     bool propagate_input = true) {
    const std::int64_t B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::int64_t Cout = w.dim(0);
    const std::int64_t plane = H * W;
    const T* xp = x.data();
    const T* wp = w.data();
    const T* dyp = y.grad();
    T* dwp = w.grad();
    T* dbp = b.grad();
    T* dxp = propagate_input ? x.grad() : nullptr;

    for (std::int64_t n = 0; n < B; ++n) {
        for (std::int64_t co = 0; co < Cout; ++co) {
            const T* dybase = dyp + (n * Cout + co) * plane;
            T acc = T{};
            for (std::int64_t i = 0; i < plane; ++i) acc += dybase[i];
            dbp[co] += acc;
            for (std::int64_t ci = 0; ci < Cin; ++ci) {
                const T* xbase = xp + (n * Cin + ci) * plane;
                T* dwk = dwp + (co * Cin + ci) * 9;
                const T* wk = wp + (co * Cin + ci) * 9;
                T* dxbase = dxp ? dxp + (n * Cin + ci) * plane : nullptr;
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        const std::int64_t r0 = std::max<std::int64_t>(0, 1 - ky);
                        const std::int64_t r1 = std::min<std::int64_t>(H, H + 1 - ky);
                        const std::int64_t c0 = std::max<std::int64_t>(0, 1 - kx);
                        const std::int64_t c1 = std::min<std::int64_t>(W, W + 1 - kx);
                        T wacc = T{};
                        const T wv = wk[ky * 3 + kx];
                        for (std::int64_t r = r0; r < r1; ++r) {
                            const T* dyrow = dybase + r * W;
                            const T* xrow = xbase + (r + ky - 1) * W + (kx - 1);
                            T* dxrow = dxbase ? dxbase + (r + ky - 1) * W + (kx - 1) : nullptr;
                            if (dxrow) {
                                for (std::int64_t c = c0; c < c1; ++c) {
                                    wacc += dyrow[c] * xrow[c];
                                    dxrow[c] += wv * dyrow[c];
                                }
                            } else {
                                for (std::int64_t c = c0; c < c1; ++c) wacc += dyrow[c] * xrow[c];
                            }
                        }
                        dwk[ky * 3 + kx] += wacc;
                    }
                }
            }
        }
    }
}

enum class BnMode { train, eval };

template <typename T>
struct BatchNormState {
    Tensor<T> gamma, beta;
    Tensor<T> running_mean, running_var;
    double momentum = 0.9; // running = momentum*running + (1-momentum)*batch
    double epsilon = 1e-5;
    bool initialized = false; // set by a train-mode pass or checkpoint load

    explicit BatchNormState(std::int64_t channels = 0, double mom = 0.9, double eps = 1e-5)
        : gamma({channels}, T(1)), beta({channels}, T(0)), running_mean({channels}, T(0)),
          running_var({channels}, T(1)), momentum(mom), epsilon(eps) {}
};

// Per-batch context needed by the backward pass.
template <typename T>
struct BnCache {
    std::vector<T> xhat;    // normalized pre-affine activations
    std::vector<T> inv_std; // per channel
};

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, BatchNormState<T>& state, BnMode mode,
                            BnCache<T>* cache = nullptr) {
    const std::int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (state.gamma.count() != C)
        throw shape_error(concat("batchnorm: state has ", state.gamma.count(), " channels, input ", C));
    const std::int64_t plane = H * W;
    const std::int64_t per_channel = B * plane;
    Tensor<T> y(x.shape);

    if (mode == BnMode::eval) {
        if (!state.initialized)
            throw value_error("batchnorm: eval mode before any training update or explicit "
                              "running-statistics initialization");
        for (std::int64_t c = 0; c < C; ++c) {
            const T mean = state.running_mean.v[static_cast<std::size_t>(c)];
            const T inv = T(1) / std::sqrt(state.running_var.v[static_cast<std::size_t>(c)] +
                                           static_cast<T>(state.epsilon));
            const T gm = state.gamma.v[static_cast<std::size_t>(c)];
            const T bt = state.beta.v[static_cast<std::size_t>(c)];
            for (std::int64_t n = 0; n < B; ++n) {
                const T* xr = x.data() + (n * C + c) * plane;
                T* yr = y.data() + (n * C + c) * plane;
                for (std::int64_t i = 0; i < plane; ++i) yr[i] = gm * (xr[i] - mean) * inv + bt;
            }
        }
        return y;
    }

    if (per_channel < 2)
        throw value_error("batchnorm: train mode needs at least 2 samples per channel");
    if (cache) {
        cache->xhat.resize(x.v.size());
        cache->inv_std.assign(static_cast<std::size_t>(C), T{});
    }
    for (std::int64_t c = 0; c < C; ++c) {
        double sum = 0.0, sq = 0.0;
        for (std::int64_t n = 0; n < B; ++n) {
            const T* xr = x.data() + (n * C + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
                sum += xr[i];
                sq += static_cast<double>(xr[i]) * xr[i];
            }
        }
        const double mean = sum / static_cast<double>(per_channel);
        const double var = std::max(0.0, sq / static_cast<double>(per_channel) - mean * mean);
        const T inv = static_cast<T>(1.0 / std::sqrt(var + state.epsilon));
        const T gm = state.gamma.v[static_cast<std::size_t>(c)];
        const T bt = state.beta.v[static_cast<std::size_t>(c)];
        for (std::int64_t n = 0; n < B; ++n) {
            const T* xr = x.data() + (n * C + c) * plane;
            T* yr = y.data() + (n * C + c) * plane;
            T* xh = cache ? cache->xhat.data() + (n * C + c) * plane : nullptr;
            for (std::int64_t i = 0; i < plane; ++i) {
                const T h = (xr[i] - static_cast<T>(mean)) * inv;
                if (xh) xh[i] = h;
                yr[i] = gm * h + bt;
            }
        }
        if (cache) cache->inv_std[static_cast<std::size_t>(c)] = inv;
        const double m = state.momentum;
        auto& rm = state.running_mean.v[static_cast<std::size_t>(c)];
        auto& rv = state.running_var.v[static_cast<std::size_t>(c)];
        rm = static_cast<T>(m * rm + (1.0 - m) * mean);
        rv = static_cast<T>(m * rv + (1.0 - m) * var);
    }
    state.initialized = true;
    return y;
}

// Train-mode backward including the batch-statistic coupling:
// dx = gamma*inv_std * (dy - mean(dy) - xhat*mean(dy*xhat)).
template <typename T>
void batchnorm_backward(Tensor<T>& x, BatchNormState<T>& state, const BnCache<T>& cache,
                        Tensor<T>& y) {
    const std::int64_t B = x.dim(0), C = x.dim(1), plane = x.dim(2) * x.dim(3);
    const std::int64_t per_channel = B * plane;
    const T* dyp = y.grad();
    T* dxp = x.grad();
    T* dgamma = state.gamma.grad();
    T* dbeta = state.beta.grad();

    for (std::int64_t c = 0; c < C; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::int64_t n = 0; n < B; ++n) {
            const T* dyr = dyp + (n * C + c) * plane;
            const T* xh = cache.xhat.data() + (n * C + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
                sum_dy += dyr[i];
                sum_dy_xhat += static_cast<double>(dyr[i]) * xh[i];
            }
        }
        dbeta[c] += static_cast<T>(sum_dy);
        dgamma[c] += static_cast<T>(sum_dy_xhat);
        const T gm = state.gamma.v[static_cast<std::size_t>(c)];
        const T inv = cache.inv_std[static_cast<std::size_t>(c)];
        const T mean_dy = static_cast<T>(sum_dy / static_cast<double>(per_channel));
        const T mean_dy_xhat = static_cast<T>(sum_dy_xhat / static_cast<double>(per_channel));
        for (std::int64_t n = 0; n < B; ++n) {
            const T* dyr = dyp + (n * C + c) * plane;
            const T* xh = cache.xhat.data() + (n * C + c) * plane;
            T* dxr = dxp + (n * C + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i)
                dxr[i] += gm * inv * (dyr[i] - mean_dy - xh[i] * mean_dy_xhat);
        }
    }
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.v.size(); ++i) y.v[i] = x.v[i] > T{} ? x.v[i] : T{};
    return y;
}

template <typename T>
void relu_backward(Tensor<T>& x, Tensor<T>& y) {
    const T* dy = y.grad();
    T* dx = x.grad();
    for (std::size_t i = 0; i < x.v.size(); ++i)
        if (x.v[i] > T{}) dx[i] += dy[i];
}

// 2x2 max pooling, stride 2, floor semantics on odd extents. argmax stores the
// flat in-plane index of the winning element (first maximum wins ties).
template <typename T>
Tensor<T> maxpool2_forward(const Tensor<T>& x, std::vector<std::int64_t>& argmax) {
    const std::int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::int64_t Ho = H / 2, Wo = W / 2;
    if (Ho < 1 || Wo < 1) throw shape_error("maxpool2: spatial extent too small to pool");
    Tensor<T> y({B, C, Ho, Wo});
    argmax.resize(static_cast<std::size_t>(y.count()));
    for (std::int64_t nc = 0; nc < B * C; ++nc) {
        const T* xb = x.data() + nc * H * W;
        T* yb = y.data() + nc * Ho * Wo;
        std::int64_t* ab = argmax.data() + nc * Ho * Wo;
        for (std::int64_t r = 0; r < Ho; ++r) {
            for (std::int64_t c = 0; c < Wo; ++c) {
                std::int64_t best = (2 * r) * W + 2 * c;
                T bv = xb[best];
                const std::int64_t cand[3] = {(2 * r) * W + 2 * c + 1, (2 * r + 1) * W + 2 * c,
                                              (2 * r + 1) * W + 2 * c + 1};
                for (std::int64_t idx : cand) {
                    if (xb[idx] > bv) {
                        bv = xb[idx];
                        best = idx;
                    }
                }
                yb[r * Wo + c] = bv;
                ab[r * Wo + c] = best;
            }
        }
    }
    return y;
}

template <typename T>
void maxpool2_backward(Tensor<T>& x, const std::vector<std::int64_t>& argmax, Tensor<T>& y) {
    const std::int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::int64_t Ho = H / 2, Wo = W / 2;
    const T* dy = y.grad();
    T* dx = x.grad();
    for (std::int64_t nc = 0; nc < B * C; ++nc) {
        T* dxb = dx + nc * H * W;
        const T* dyb = dy + nc * Ho * Wo;
        const std::int64_t* ab = argmax.data() + nc * Ho * Wo;
        for (std::int64_t i = 0; i < Ho * Wo; ++i) dxb[ab[i]] += dyb[i];
    }
}

// x: (P, F), w: (F, O), b: (O) -> y: (P, O)
template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    const std::int64_t P = x.dim(0), F = x.dim(1);
    if (w.dim(0) != F)
        throw shape_error(concat("linear: input width ", F, " does not match weights ", w.shape_str()));
    const std::int64_t O = w.dim(1);
    Tensor<T> y({P, O});
    for (std::int64_t p = 0; p < P; ++p) {
        T* yr = y.data() + p * O;
        for (std::int64_t o = 0; o < O; ++o) yr[o] = b.v[static_cast<std::size_t>(o)];
        const T* xr = x.data() + p * F;
        for (std::int64_t f = 0; f < F; ++f) {
            const T xv = xr[f];
            if (xv == T{}) continue;
            const T* wr = w.data() + f * O;
            for (std::int64_t o = 0; o < O; ++o) yr[o] += xv * wr[o];
        }
    }
    return y;
}

template <typename T>
void linear_backward(Tensor<T>& x, Tensor<T>& w, Tensor<T>& b, Tensor<T>& y,
                     bool propagate_input = true) {
    const std::int64_t P = x.dim(0), F = x.dim(1), O = w.dim(1);
    const T* dyp = y.grad();
    T* dw = w.grad();
    T* db = b.grad();
    T* dx = propagate_input ? x.grad() : nullptr;
    for (std::int64_t p = 0; p < P; ++p) {
        const T* dyr = dyp + p * O;
        const T* xr = x.data() + p * F;
        for (std::int64_t o = 0; o < O; ++o) db[o] += dyr[o];
        for (std::int64_t f = 0; f < F; ++f) {
            const T* wr = w.data() + f * O;
            T* dwr = dw + f * O;
            const T xv = xr[f];
            T acc = T{};
            for (std::int64_t o = 0; o < O; ++o) {
                dwr[o] += xv * dyr[o];
                acc += wr[o] * dyr[o];
            }
            if (dx) dx[p * F + f] += acc;
        }
    }
}

} // namespace gliomkit::net
