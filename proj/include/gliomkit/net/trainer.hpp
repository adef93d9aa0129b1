#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/net/network.hpp"
#include "gliomkit/net/sampler.hpp"
#include "gliomkit/rng.hpp"
#include "gliomkit/volume.hpp"

namespace gliomkit::net {

// Axial training slices: per-volume normalized modalities, raw labels, brain
// mask. Blank slices (empty mask) are dropped.
struct SliceDataset {
    struct Slice {
        std::vector<Grid2<float>> channels;
        Grid2<std::uint8_t> labels;
        Grid2<std::uint8_t> mask;
    };
    std::vector<Slice> slices;
    std::int64_t height = 0, width = 0;
    int channels = 0;
};

inline void append_subject_slices(SliceDataset& out, const ModalityStack& stack,
                                  const LabelVolume& labels,
                                  const std::vector<std::string>& modalities) {
    if (!(labels.dims == stack.dims()))
        throw shape_error("slice dataset: labels and stack dims differ");
    const MaskVolume mask = brain_mask(stack);
    std::vector<Volume3D> norm;
    norm.reserve(modalities.size());
    for (const auto& m : modalities)
        norm.push_back(normalize_zero_mean_unit_std(stack.modality(m), mask));

    const Dims3 d = stack.dims();
    if (out.slices.empty()) {
        out.height = d.ny;
        out.width = d.nx;
        out.channels = static_cast<int>(modalities.size());
    } else if (out.height != d.ny || out.width != d.nx ||
               out.channels != static_cast<int>(modalities.size())) {
        throw shape_error("slice dataset: mixed slice geometries");
    }

    for (std::int64_t z = 0; z < d.nz; ++z) {
        auto mask_slice = extract_slice(mask, z);
        bool any = false;
        for (auto v : mask_slice.v) any |= (v != 0);
        if (!any) continue;
        SliceDataset::Slice s;
        for (const auto& nv : norm) s.channels.push_back(extract_slice(nv, z));
        s.labels = extract_slice(labels, z);
        s.mask = std::move(mask_slice);
        out.slices.push_back(std::move(s));
    }
}

struct SegTrainConfig {
    NetSpec net;
    OptimizerConfig optimizer;
    int pixels_per_image = 2000;
    int batch = 10;
    int epochs = 10;
    std::uint64_t seed = 0;
    bool augment_flip = true;
};

namespace detail {

template <typename T>
void fill_image(Tensor<T>& images, std::int64_t image_idx,
                const SliceDataset::Slice& slice, bool flip) {
    const std::int64_t C = images.dim(1), H = images.dim(2), W = images.dim(3);
    for (std::int64_t c = 0; c < C; ++c) {
        const auto& g = slice.channels[static_cast<std::size_t>(c)];
        T* dst = images.data() + ((image_idx * C + c) * H) * W;
        for (std::int64_t r = 0; r < H; ++r)
            for (std::int64_t col = 0; col < W; ++col)
                dst[r * W + col] = static_cast<T>(g.at(r, flip ? W - 1 - col : col));
    }
}

} // namespace detail

// Assembles one training batch: per slice an optional left-right flip, then a
// fresh uniform pixel sample from the (flipped) brain mask.
template <typename T>
SampleBatch<T> make_training_batch(const SliceDataset& data,
                                   const std::vector<std::size_t>& slice_ids,
                                   const SegTrainConfig& cfg, Rng& rng) {
    const std::int64_t B = static_cast<std::int64_t>(slice_ids.size());
    SampleBatch<T> batch;
    batch.images = Tensor<T>({B, data.channels, data.height, data.width});
    for (std::int64_t bi = 0; bi < B; ++bi) {
        const auto& slice = data.slices[slice_ids[static_cast<std::size_t>(bi)]];
        const bool flip = cfg.augment_flip && rng.uniform() < 0.5;
        detail::fill_image(batch.images, bi, slice, flip);
        Grid2<std::uint8_t> mask = slice.mask;
        Grid2<std::uint8_t> labels = slice.labels;
        if (flip) {
            for (std::int64_t r = 0; r < mask.rows; ++r)
                for (std::int64_t c = 0; c < mask.cols / 2; ++c) {
                    std::swap(mask.at(r, c), mask.at(r, mask.cols - 1 - c));
                    std::swap(labels.at(r, c), labels.at(r, mask.cols - 1 - c));
                }
        }
        const auto pixels = sample_training_pixels(mask, cfg.pixels_per_image, rng);
        for (const auto& [row, col] : pixels) {
            batch.coords.push_back({static_cast<std::int32_t>(bi), row, col});
            batch.labels.push_back(label_to_class(labels.at(row, col)));
        }
    }
    return batch;
}

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
};

// Trains a fresh network on the dataset. The callback runs after every epoch;
// returning false stops training early. Fully deterministic under cfg.seed.
template <typename T>
Network<T> train_segmenter(const SliceDataset& data, const SegTrainConfig& cfg,
                           const std::function<bool(const EpochStats&, Network<T>&)>& per_epoch = {}) {
    if (data.slices.empty()) throw value_error("train_segmenter: empty slice dataset");
    Network<T> net(cfg.net);
    net.init_params(cfg.seed);
    Optimizer<T> opt(cfg.optimizer, net.trainable_parameters());
    Rng rng(Rng(cfg.seed).fork(0x7261696e).next_u64());

    std::vector<std::size_t> order(data.slices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::int64_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
            std::vector<std::size_t> ids(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
            SampleBatch<T> batch = make_training_batch<T>(data, ids, cfg, rng);
            loss_sum += static_cast<double>(net.train_step(batch, opt));
            ++n_batches;
        }
        EpochStats stats{epoch, loss_sum / static_cast<double>(n_batches)};
        if (per_epoch && !per_epoch(stats, net)) break;
    }
    return net;
}

// Binary Dice of one raw label value between two label maps.
inline double label_dice(const LabelVolume& pred, const LabelVolume& truth, std::uint8_t label) {
    std::int64_t p = 0, t = 0, both = 0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const bool a = pred.data[i] == label, b = truth.data[i] == label;
        p += a;
        t += b;
        both += (a && b);
    }
    if (p + t == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(p + t);
}

} // namespace gliomkit::net
