#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gliomkit/checkpoint.hpp"
#include "gliomkit/common.hpp"
#include "gliomkit/net/hypercolumn.hpp"
#include "gliomkit/net/layers.hpp"
#include "gliomkit/net/loss.hpp"
#include "gliomkit/net/optimizer.hpp"
#include "gliomkit/net/spec.hpp"
#include "gliomkit/rng.hpp"
#include "gliomkit/tensor.hpp"
#include "gliomkit/volume.hpp"

namespace gliomkit::net {

inline int label_to_class(int label) {
    switch (label) {
        case 0: return 0;
        case 1: return 1;
        case 2: return 2;
        case 4: return 3;
    }
    throw value_error(concat("label ", label, " is not in {0,1,2,4}"));
}

inline int class_to_label(int cls) {
    static const int table[4] = {0, 1, 2, 4};
    if (cls < 0 || cls > 3) throw value_error(concat("class ", cls, " is not in [0,4)"));
    return table[cls];
}

template <typename T>
struct SampleBatch {
    Tensor<T> images;               // (B, C, H, W)
    std::vector<PixelCoord> coords; // P sampled pixels, image index < B
    std::vector<int> labels;        // P class ids in [0, n_classes)
};

constexpr char net_checkpoint_magic[checkpoint::magic_size] = {'G', 'L', 'K', 'N',
                                                               'E', 'T', '1', '\0'};

// BN-PixelNet: a chain of conv+BN+ReLU pixel-blocks with 2x2 max-pools,
// hypercolumn taps bilinearly sampled at sparse pixel coordinates, and a
// 3-layer MLP classifying each sampled pixel.
template <typename T>
class Network {
public:
    explicit Network(NetSpec spec, std::vector<std::string> modalities = {})
        : spec_(std::move(spec)), modalities_(std::move(modalities)) {
        spec_.validate();
        if (modalities_.empty()) {
            const auto& canonical = ModalityStack::modality_names();
            for (int i = 0; i < spec_.in_channels && i < 4; ++i)
                modalities_.emplace_back(canonical[static_cast<std::size_t>(i)]);
        }
        int cin = spec_.in_channels;
        for (const auto& bs : spec_.blocks) {
            Block blk;
            blk.w = Tensor<T>({bs.out_channels, cin, 3, 3});
            blk.b = Tensor<T>({bs.out_channels});
            blk.has_bn = bs.batch_norm;
            if (blk.has_bn)
                blk.bn = BatchNormState<T>(bs.out_channels, spec_.bn_momentum, spec_.bn_epsilon);
            blocks_.push_back(std::move(blk));
            cin = bs.out_channels;
        }
        int fin = spec_.hypercolumn_width();
        for (int l = 0; l < 3; ++l) {
            const int fout = spec_.mlp_widths[static_cast<std::size_t>(l)];
            mlp_[static_cast<std::size_t>(l)].w = Tensor<T>({fin, fout});
            mlp_[static_cast<std::size_t>(l)].b = Tensor<T>({fout});
            fin = fout;
        }
    }

    const NetSpec& spec() const { return spec_; }
    const std::vector<std::string>& modalities() const { return modalities_; }

    // He-normal weights (ReLU stack), zero biases, identity BN affine.
    void init_params(std::uint64_t seed) {
        Rng rng(seed);
        for (auto& blk : blocks_) {
            const double std_dev = std::sqrt(2.0 / static_cast<double>(blk.w.dim(1) * 9));
            for (auto& v : blk.w.v) v = static_cast<T>(rng.normal(0.0, std_dev));
            std::fill(blk.b.v.begin(), blk.b.v.end(), T{});
            if (blk.has_bn) {
                std::fill(blk.bn.gamma.v.begin(), blk.bn.gamma.v.end(), T(1));
                std::fill(blk.bn.beta.v.begin(), blk.bn.beta.v.end(), T(0));
                std::fill(blk.bn.running_mean.v.begin(), blk.bn.running_mean.v.end(), T(0));
                std::fill(blk.bn.running_var.v.begin(), blk.bn.running_var.v.end(), T(1));
                blk.bn.initialized = false;
            }
        }
        for (auto& fc : mlp_) {
            const double std_dev = std::sqrt(2.0 / static_cast<double>(fc.w.dim(0)));
            for (auto& v : fc.w.v) v = static_cast<T>(rng.normal(0.0, std_dev));
            std::fill(fc.b.v.begin(), fc.b.v.end(), T{});
        }
    }

    struct Cache {
        std::vector<Tensor<T>> conv_out;  // per block, pre-BN
        std::vector<Tensor<T>> norm_out;  // per block, BN output (unused without BN)
        std::vector<Tensor<T>> act_out;   // per block, post-ReLU (hypercolumn tap source)
        std::vector<Tensor<T>> pooled;    // per block, pooled act_out (only pooled blocks)
        std::vector<BnCache<T>> bn_cache; // per block
        std::vector<std::vector<std::int64_t>> pool_argmax;
        Tensor<T> hyper;                  // (P, F)
        std::array<Tensor<T>, 3> fc_out;  // pre-ReLU; fc_out[2] = logits
        std::array<Tensor<T>, 2> fc_act;  // post-ReLU of fc 0 and 1
        std::int64_t input_h = 0, input_w = 0;
    };

    // Full pixel-classification forward pass: conv/BN/ReLU blocks, hypercolumn
    // sampling at `coords`, and the MLP head. Returns per-pixel logits (P, K).
    const Tensor<T>& forward_pixels(const Tensor<T>& images, const std::vector<PixelCoord>& coords,
                                    BnMode mode, Cache& cache) {
        forward_blocks(images, mode, cache);
        std::vector<const Tensor<T>*> taps;
        std::vector<int> scales;
        for (int t : spec_.hypercolumn_taps) {
            taps.push_back(&cache.act_out[static_cast<std::size_t>(t)]);
            scales.push_back(spec_.tap_scale(t));
        }
        cache.hyper = hypercolumn_forward(taps, scales, coords, cache.input_h, cache.input_w);
        cache.fc_out[0] = linear_forward(cache.hyper, mlp_[0].w, mlp_[0].b);
        cache.fc_act[0] = relu_forward(cache.fc_out[0]);
        cache.fc_out[1] = linear_forward(cache.fc_act[0], mlp_[1].w, mlp_[1].b);
        cache.fc_act[1] = relu_forward(cache.fc_out[1]);
        cache.fc_out[2] = linear_forward(cache.fc_act[1], mlp_[2].w, mlp_[2].b);
        return cache.fc_out[2];
    }

    // Training-mode loss without any gradient work (finite-difference probe).
    T loss_only(const SampleBatch<T>& batch) {
        Cache cache;
        const Tensor<T>& logits = forward_pixels(batch.images, batch.coords, BnMode::train, cache);
        return softmax_xent_loss(logits, batch.labels).loss;
    }

    // Forward + backward; parameter gradients and batch.images.g are filled
    // (accumulated on top of whatever is there — call zero_grads first).
    T forward_backward(SampleBatch<T>& batch) {
        Cache cache;
        forward_pixels(batch.images, batch.coords, BnMode::train, cache);
        auto res = softmax_xent_loss(cache.fc_out[2], batch.labels);
        if (!std::isfinite(static_cast<double>(res.loss)))
            throw_non_finite(batch, cache);
        cache.fc_out[2].ensure_grad();
        cache.fc_out[2].g = std::move(res.d_logits.v);
        backward(batch, cache);
        return res.loss;
    }

    void zero_grads() {
        for (auto* p : trainable_parameters()) {
            p->ensure_grad();
            p->zero_grad();
        }
    }

    // One optimizer update on a sampled batch. Returns the batch loss.
    T train_step(SampleBatch<T>& batch, Optimizer<T>& opt) {
        zero_grads();
        const T loss = forward_backward(batch);
        opt.step();
        return loss;
    }

    // Slice-by-slice inference over a full stack: all brain-mask pixels are
    // classified, everything else stays label 0.
    LabelVolume predict_volume(const ModalityStack& stack) {
        if (static_cast<int>(stack.volumes.size()) != spec_.in_channels)
            throw shape_error(concat("predict: network expects ", spec_.in_channels,
                                     " modalities, stack has ", stack.volumes.size()));
        const MaskVolume mask = brain_mask(stack);
        LabelVolume out(stack.dims(), stack.spacing(), 0);
        if (mask_count(mask) == 0) return out;

        std::vector<Volume3D> norm;
        norm.reserve(modalities_.size());
        for (const auto& m : modalities_) norm.push_back(normalize_zero_mean_unit_std(stack.modality(m), mask));

        const Dims3 dims = stack.dims();
        const std::int64_t H = dims.ny, W = dims.nx;
        for (std::int64_t z = 0; z < dims.nz; ++z) {
            std::vector<PixelCoord> coords;
            for (std::int64_t y = 0; y < dims.ny; ++y)
                for (std::int64_t x = 0; x < dims.nx; ++x)
                    if (mask.at(x, y, z))
                        coords.push_back({0, static_cast<std::int32_t>(y), static_cast<std::int32_t>(x)});
            if (coords.empty()) continue;

            Tensor<T> images({1, spec_.in_channels, H, W});
            for (std::size_t c = 0; c < norm.size(); ++c)
                for (std::int64_t y = 0; y < H; ++y)
                    for (std::int64_t x = 0; x < W; ++x)
                        images.v[static_cast<std::size_t>((static_cast<std::int64_t>(c) * H + y) * W + x)] =
                            static_cast<T>(norm[c].at(x, y, z));

            Cache cache;
            const Tensor<T>& logits = forward_pixels(images, coords, BnMode::eval, cache);
            const std::int64_t K = logits.dim(1);
            for (std::size_t p = 0; p < coords.size(); ++p) {
                const T* row = logits.data() + static_cast<std::int64_t>(p) * K;
                int best = 0;
                for (int k = 1; k < K; ++k)
                    if (row[k] > row[best]) best = k;
                out.at(coords[p].col, coords[p].row, z) =
                    static_cast<std::uint8_t>(class_to_label(best));
            }
        }
        return out;
    }

    // Learned tensors, declaration order (optimizer order).
    std::vector<Tensor<T>*> trainable_parameters() {
        std::vector<Tensor<T>*> out;
        for (auto& blk : blocks_) {
            out.push_back(&blk.w);
            out.push_back(&blk.b);
            if (blk.has_bn) {
                out.push_back(&blk.bn.gamma);
                out.push_back(&blk.bn.beta);
            }
        }
        for (auto& fc : mlp_) {
            out.push_back(&fc.w);
            out.push_back(&fc.b);
        }
        return out;
    }

    std::vector<std::pair<std::string, Tensor<T>*>> named_parameters() {
        std::vector<std::pair<std::string, Tensor<T>*>> out;
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            auto& blk = blocks_[i];
            out.emplace_back(concat("block", i, "/conv_w"), &blk.w);
            out.emplace_back(concat("block", i, "/conv_b"), &blk.b);
            if (blk.has_bn) {
                out.emplace_back(concat("block", i, "/bn_gamma"), &blk.bn.gamma);
                out.emplace_back(concat("block", i, "/bn_beta"), &blk.bn.beta);
            }
        }
        for (std::size_t l = 0; l < 3; ++l) {
            out.emplace_back(concat("mlp", l, "/w"), &mlp_[l].w);
            out.emplace_back(concat("mlp", l, "/b"), &mlp_[l].b);
        }
        return out;
    }

    // Checkpoint order: trainable tensors plus BN running statistics, all in
    // declaration order.
    std::vector<Tensor<T>*> checkpoint_tensors() {
        std::vector<Tensor<T>*> out;
        for (auto& blk : blocks_) {
            out.push_back(&blk.w);
            out.push_back(&blk.b);
            if (blk.has_bn) {
                out.push_back(&blk.bn.gamma);
                out.push_back(&blk.bn.beta);
                out.push_back(&blk.bn.running_mean);
                out.push_back(&blk.bn.running_var);
            }
        }
        for (auto& fc : mlp_) {
            out.push_back(&fc.w);
            out.push_back(&fc.b);
        }
        return out;
    }

    void save(const std::string& path) {
        nlohmann::json meta;
        meta["format"] = "gliomkit-net";
        meta["format_version"] = 1;
        meta["netspec"] = to_json(spec_);
        meta["modalities"] = modalities_;
        std::vector<bool> bn_init;
        for (const auto& blk : blocks_)
            if (blk.has_bn) bn_init.push_back(blk.bn.initialized);
        meta["bn_initialized"] = bn_init;
        std::vector<const Tensor<T>*> tensors;
        for (auto* t : checkpoint_tensors()) tensors.push_back(t);
        checkpoint::save(path, net_checkpoint_magic, meta, tensors);
    }

    static Network<T> load(const std::string& path) {
        auto loaded = checkpoint::load(path, net_checkpoint_magic);
        const NetSpec spec = netspec_from_json(loaded.meta.at("netspec"));
        std::vector<std::string> modalities =
            loaded.meta.value("modalities", std::vector<std::string>{});
        Network<T> net(spec, modalities);
        auto dst = net.checkpoint_tensors();
        if (dst.size() != loaded.tensors.size())
            throw format_error(concat(path, ": checkpoint has ", loaded.tensors.size(),
                                      " tensors, architecture needs ", dst.size()));
        for (std::size_t i = 0; i < dst.size(); ++i) {
            if (dst[i]->shape != loaded.tensors[i].shape)
                throw format_error(concat(path, ": tensor ", i, " shape ",
                                          loaded.tensors[i].shape_str(), " does not match ",
                                          dst[i]->shape_str()));
            for (std::size_t k = 0; k < dst[i]->v.size(); ++k)
                dst[i]->v[k] = static_cast<T>(loaded.tensors[i].v[k]);
        }
        const auto bn_init = loaded.meta.value("bn_initialized", std::vector<bool>{});
        std::size_t bi = 0;
        for (auto& blk : net.blocks_)
            if (blk.has_bn) blk.bn.initialized = bi < bn_init.size() ? bool(bn_init[bi++]) : true;
        return net;
    }

private:
    struct Block {
        Tensor<T> w, b;
        bool has_bn = false;
        BatchNormState<T> bn;
    };
    struct Fc {
        Tensor<T> w, b;
    };

    void forward_blocks(const Tensor<T>& images, BnMode mode, Cache& cache) {
        const std::size_t n = blocks_.size();
        cache.conv_out.resize(n);
        cache.norm_out.resize(n);
        cache.act_out.resize(n);
        cache.pooled.resize(n);
        cache.bn_cache.resize(n);
        cache.pool_argmax.resize(n);
        cache.input_h = images.dim(2);
        cache.input_w = images.dim(3);

        const Tensor<T>* cur = &images;
        for (std::size_t i = 0; i < n; ++i) {
            auto& blk = blocks_[i];
            cache.conv_out[i] = conv2d_forward(*cur, blk.w, blk.b);
            const Tensor<T>* pre_act = &cache.conv_out[i];
            if (blk.has_bn) {
                cache.norm_out[i] = batchnorm_forward(
                    cache.conv_out[i], blk.bn, mode,
                    mode == BnMode::train ? &cache.bn_cache[i] : nullptr);
                pre_act = &cache.norm_out[i];
            }
            cache.act_out[i] = relu_forward(*pre_act);
            if (spec_.pool_after.count(static_cast<int>(i))) {
                cache.pooled[i] = maxpool2_forward(cache.act_out[i], cache.pool_argmax[i]);
                cur = &cache.pooled[i];
            } else {
                cur = &cache.act_out[i];
            }
        }
    }

    Tensor<T>& conv_input(SampleBatch<T>& batch, Cache& cache, std::size_t i) {
        if (i == 0) return batch.images;
        const std::size_t prev = i - 1;
        if (spec_.pool_after.count(static_cast<int>(prev))) return cache.pooled[prev];
        return cache.act_out[prev];
    }

    void backward(SampleBatch<T>& batch, Cache& cache) {
        linear_backward(cache.fc_act[1], mlp_[2].w, mlp_[2].b, cache.fc_out[2]);
        relu_backward(cache.fc_out[1], cache.fc_act[1]);
        linear_backward(cache.fc_act[0], mlp_[1].w, mlp_[1].b, cache.fc_out[1]);
        relu_backward(cache.fc_out[0], cache.fc_act[0]);
        linear_backward(cache.hyper, mlp_[0].w, mlp_[0].b, cache.fc_out[0]);

        std::vector<Tensor<T>*> taps;
        std::vector<int> scales;
        for (int t : spec_.hypercolumn_taps) {
            taps.push_back(&cache.act_out[static_cast<std::size_t>(t)]);
            scales.push_back(spec_.tap_scale(t));
        }
        hypercolumn_backward(taps, scales, batch.coords, cache.hyper);

        for (std::size_t ii = blocks_.size(); ii-- > 0;) {
            auto& blk = blocks_[ii];
            if (spec_.pool_after.count(static_cast<int>(ii)))
                maxpool2_backward(cache.act_out[ii], cache.pool_argmax[ii], cache.pooled[ii]);
            Tensor<T>& pre_act = blk.has_bn ? cache.norm_out[ii] : cache.conv_out[ii];
            relu_backward(pre_act, cache.act_out[ii]);
            if (blk.has_bn)
                batchnorm_backward(cache.conv_out[ii], blk.bn, cache.bn_cache[ii],
                                   cache.norm_out[ii]);
            conv2d_backward(conv_input(batch, cache, ii), blk.w, blk.b, cache.conv_out[ii]);
        }
    }

    [[noreturn]] void throw_non_finite(const SampleBatch<T>& batch, const Cache& cache) {
        auto scan = [](const Tensor<T>& t) {
            for (const T v : t.v)
                if (!std::isfinite(static_cast<double>(v))) return true;
            return false;
        };
        std::string name = "loss";
        if (scan(batch.images)) name = "input images";
        for (std::size_t i = 0; i < blocks_.size() && name == "loss"; ++i) {
            if (scan(cache.conv_out[i])) name = concat("block", i, "/conv_out");
            else if (blocks_[i].has_bn && scan(cache.norm_out[i])) name = concat("block", i, "/bn_out");
        }
        if (name == "loss" && scan(cache.hyper)) name = "hypercolumn";
        for (std::size_t l = 0; l < 3 && name == "loss"; ++l)
            if (scan(cache.fc_out[l])) name = concat("mlp", l, "/out");
        throw value_error(concat("non-finite loss; first non-finite tensor: ", name));
    }

    NetSpec spec_;
    std::vector<std::string> modalities_;
    std::vector<Block> blocks_;
    std::array<Fc, 3> mlp_;
};

} // namespace gliomkit::net
