#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gliomkit/common.hpp"

namespace gliomkit {

struct Dims3 {
    std::int64_t nx = 0, ny = 0, nz = 0;

    std::int64_t count() const { return nx * ny * nz; }
    bool operator==(const Dims3&) const = default;
};

struct Spacing3 {
    double sx = 1.0, sy = 1.0, sz = 1.0;

    double voxel_volume() const { return sx * sy * sz; }
    bool operator==(const Spacing3&) const = default;
};

// Regular 3D grid, x-fastest storage: index = x + nx*(y + ny*z).
template <typename T>
struct Volume3 {
    Dims3 dims;
    Spacing3 spacing;
    std::vector<T> data;

    Volume3() = default;
    Volume3(Dims3 d, Spacing3 s, T fill = T{})
        : dims(d), spacing(s), data(static_cast<std::size_t>(d.count()), fill) {
        if (d.nx < 1 || d.ny < 1 || d.nz < 1)
            throw shape_error(concat("volume dims must be >= 1, got ", d.nx, "x", d.ny, "x", d.nz));
        if (!(s.sx > 0 && s.sy > 0 && s.sz > 0))
            throw value_error("voxel spacing must be positive");
    }

    std::int64_t index(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return x + dims.nx * (y + dims.ny * z);
    }
    T& at(std::int64_t x, std::int64_t y, std::int64_t z) { return data[static_cast<std::size_t>(index(x, y, z))]; }
    const T& at(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return data[static_cast<std::size_t>(index(x, y, z))];
    }
    std::size_t size() const { return data.size(); }
};

using Volume3D = Volume3<float>;
using LabelVolume = Volume3<std::uint8_t>;
using MaskVolume = Volume3<std::uint8_t>; // 0 = out, 1 = in

inline bool is_brats_label(std::uint32_t v) { return v == 0 || v == 1 || v == 2 || v == 4; }

// Reject anything outside {0,1,2,4} and report the first offending voxel.
inline void validate_labels(const LabelVolume& labels) {
    for (std::size_t i = 0; i < labels.data.size(); ++i) {
        if (!is_brats_label(labels.data[i])) {
            const std::int64_t x = static_cast<std::int64_t>(i) % labels.dims.nx;
            const std::int64_t y = (static_cast<std::int64_t>(i) / labels.dims.nx) % labels.dims.ny;
            const std::int64_t z = static_cast<std::int64_t>(i) / (labels.dims.nx * labels.dims.ny);
            throw value_error(concat("invalid label ", int(labels.data[i]), " at voxel (", x, ",", y,
                                     ",", z, "); allowed labels are {0,1,2,4}"));
        }
    }
}

struct ModalityStack {
    std::string subject_id;
    std::map<std::string, Volume3D> volumes; // keys in {flair, t1, t1c, t2}

    static const std::array<const char*, 4>& modality_names() {
        static const std::array<const char*, 4> names = {"flair", "t1", "t1c", "t2"};
        return names;
    }

    void add(const std::string& modality, Volume3D vol) {
        bool known = false;
        for (const char* m : modality_names())
            if (modality == m) known = true;
        if (!known) throw value_error(concat("unknown modality '", modality, "'"));
        if (!volumes.empty()) {
            const auto& ref = volumes.begin()->second;
            if (!(vol.dims == ref.dims))
                throw shape_error(concat("modality ", modality, " dims differ from stack"));
            if (!(vol.spacing == ref.spacing))
                throw shape_error(concat("modality ", modality, " spacing differs from stack"));
        }
        volumes.emplace(modality, std::move(vol));
    }

    bool empty() const { return volumes.empty(); }
    Dims3 dims() const { return volumes.begin()->second.dims; }
    Spacing3 spacing() const { return volumes.begin()->second.spacing; }

    const Volume3D& modality(const std::string& name) const {
        auto it = volumes.find(name);
        if (it == volumes.end()) throw value_error(concat("modality '", name, "' missing from stack"));
        return it->second;
    }
};

// Voxel is brain iff any modality is nonzero there (inputs are skull-stripped,
// background exactly 0).
inline MaskVolume brain_mask(const ModalityStack& stack) {
    if (stack.empty()) throw value_error("brain_mask: empty modality stack");
    MaskVolume mask(stack.dims(), stack.spacing(), 0);
    for (const auto& [name, vol] : stack.volumes) {
        (void)name;
        for (std::size_t i = 0; i < vol.data.size(); ++i)
            if (vol.data[i] != 0.0f) mask.data[i] = 1;
    }
    return mask;
}

inline std::int64_t mask_count(const MaskVolume& mask) {
    std::int64_t n = 0;
    for (auto v : mask.data) n += (v != 0);
    return n;
}

// Zero mean / unit variance over the masked voxels (population std); voxels
// outside the mask are set to 0.
inline Volume3D normalize_zero_mean_unit_std(const Volume3D& vol, const MaskVolume& mask) {
    if (!(vol.dims == mask.dims)) throw shape_error("normalize: volume and mask dims differ");
    double sum = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
        if (mask.data[i]) {
            sum += vol.data[i];
            ++n;
        }
    }
    if (n < 2) throw value_error("normalize: mask must contain at least 2 voxels");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
        if (mask.data[i]) {
            const double d = vol.data[i] - mean;
            ss += d * d;
        }
    }
    const double std_dev = std::sqrt(ss / static_cast<double>(n));
    if (std_dev == 0.0) throw value_error("normalize: masked intensities are constant (std = 0)");
    Volume3D out(vol.dims, vol.spacing, 0.0f);
    for (std::size_t i = 0; i < vol.data.size(); ++i)
        if (mask.data[i]) out.data[i] = static_cast<float>((vol.data[i] - mean) / std_dev);
    return out;
}

// Reverse the x axis (fastest-varying dimension).
template <typename T>
Volume3<T> flip_lr(const Volume3<T>& vol) {
    Volume3<T> out(vol.dims, vol.spacing);
    const std::int64_t nx = vol.dims.nx;
    for (std::int64_t z = 0; z < vol.dims.nz; ++z)
        for (std::int64_t y = 0; y < vol.dims.ny; ++y)
            for (std::int64_t x = 0; x < nx; ++x) out.at(nx - 1 - x, y, z) = vol.at(x, y, z);
    return out;
}

} // namespace gliomkit
