#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/rng.hpp"
#include "gliomkit/volume.hpp"

namespace gliomkit::phantom {

// Synthetic concentric-structure subjects: an elliptical "brain" of healthy
// tissue containing a three-shell tumor (edema around necrotic core around
// enhancing center), rendered into four pseudo-modalities with
// class-dependent intensities plus Gaussian noise. Background is exact 0.
struct PhantomConfig {
    Dims3 dims{32, 32, 8};
    int n_subjects = 40;
    std::uint64_t seed = 0;
    double noise_std = 0.06;
    // Fraction of subjects rendered without a necrotic (label 1) region and
    // fraction without edema (label 2); exercises the empty-region paths.
    double missing_ncr_fraction = 0.0;
    double missing_ed_fraction = 0.0;
};

struct PhantomSubject {
    ModalityStack stack;
    LabelVolume labels;
    double age = 0.0;
    double survival_days = 0.0;
};

namespace detail {

// class order: healthy(0), ncr(1), ed(2), et(4)
inline const std::array<std::array<double, 4>, 4>& modality_means() {
    static const std::array<std::array<double, 4>, 4> m = {{
        {0.35, 0.65, 0.95, 0.55}, // flair
        {0.70, 0.30, 0.45, 0.55}, // t1
        {0.55, 0.30, 0.50, 1.00}, // t1c
        {0.40, 0.70, 0.90, 0.60}, // t2
    }};
    return m;
}

inline int class_index(std::uint8_t label) {
    switch (label) {
        case 0: return 0;
        case 1: return 1;
        case 2: return 2;
        default: return 3; // 4
    }
}

} // namespace detail

inline PhantomSubject make_phantom(const PhantomConfig& cfg, int index) {
    Rng rng(Rng(cfg.seed).fork(static_cast<std::uint64_t>(index)).next_u64());
    const Dims3 d = cfg.dims;
    PhantomSubject subj;
    subj.labels = LabelVolume(d, Spacing3{}, 0);

    const double cx = 0.5 * d.nx + rng.uniform(-1.0, 1.0);
    const double cy = 0.5 * d.ny + rng.uniform(-1.0, 1.0);
    const double cz = 0.5 * d.nz + rng.uniform(-0.3, 0.3);
    const double brx = 0.42 * d.nx * rng.uniform(0.95, 1.05);
    const double bry = 0.42 * d.ny * rng.uniform(0.95, 1.05);
    const double brz = 0.42 * d.nz * rng.uniform(0.95, 1.05);

    // tumor center well inside the brain
    const double tx = cx + rng.uniform(-0.25, 0.25) * brx;
    const double ty = cy + rng.uniform(-0.25, 0.25) * bry;
    const double tz = cz + rng.uniform(-0.15, 0.15) * brz;
    const double tax = rng.uniform(0.24, 0.30) * d.nx;
    const double tay = rng.uniform(0.22, 0.30) * d.ny;
    const double taz = rng.uniform(0.30, 0.40) * d.nz;

    const int missing_ncr_count =
        static_cast<int>(std::round(cfg.missing_ncr_fraction * cfg.n_subjects));
    const int missing_ed_count =
        static_cast<int>(std::round(cfg.missing_ed_fraction * cfg.n_subjects));
    const bool no_ncr = index < missing_ncr_count;
    const bool no_ed = !no_ncr && index < missing_ncr_count + missing_ed_count;

    std::vector<std::uint8_t> tissue(static_cast<std::size_t>(d.count()), 255); // 255 = background
    for (std::int64_t z = 0; z < d.nz; ++z)
        for (std::int64_t y = 0; y < d.ny; ++y)
            for (std::int64_t x = 0; x < d.nx; ++x) {
                const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5,
                             pz = static_cast<double>(z) + 0.5;
                const double br = std::sqrt(((px - cx) / brx) * ((px - cx) / brx) +
                                            ((py - cy) / bry) * ((py - cy) / bry) +
                                            ((pz - cz) / brz) * ((pz - cz) / brz));
                if (br > 1.0) continue;
                const double tr = std::sqrt(((px - tx) / tax) * ((px - tx) / tax) +
                                            ((py - ty) / tay) * ((py - ty) / tay) +
                                            ((pz - tz) / taz) * ((pz - tz) / taz));
                std::uint8_t label = 0;
                if (tr <= 1.0) {
                    if (no_ncr) label = tr > 0.55 ? 2 : 4;
                    else if (no_ed) label = tr > 0.55 ? 1 : 4;
                    else if (tr > 0.72) label = 2;
                    else if (tr > 0.45) label = 1;
                    else label = 4;
                }
                const std::size_t i = static_cast<std::size_t>(subj.labels.index(x, y, z));
                subj.labels.data[i] = label;
                tissue[i] = label;
            }

    std::int64_t wt_voxels = 0;
    for (const auto v : subj.labels.data) wt_voxels += (v != 0);

    const auto& means = detail::modality_means();
    const auto& names = ModalityStack::modality_names();
    subj.stack.subject_id = concat("phantom", index < 10 ? "0" : "", index);
    for (std::size_t m = 0; m < names.size(); ++m) {
        const double gain = rng.uniform(0.9, 1.1);
        Volume3D vol(d, Spacing3{}, 0.0f);
        for (std::size_t i = 0; i < vol.data.size(); ++i) {
            if (tissue[i] == 255) continue; // outside brain stays exactly 0
            const double mean = gain * means[m][static_cast<std::size_t>(detail::class_index(tissue[i]))];
            double v = mean + rng.normal(0.0, cfg.noise_std);
            if (v <= 0.0) v = 1e-4; // keep in-brain voxels nonzero so the mask survives
            vol.data[i] = static_cast<float>(v);
        }
        subj.stack.add(names[m], std::move(vol));
    }

    subj.age = std::floor(rng.uniform(35.0, 82.0));
    // survival loosely decreasing in tumor burden, floored at one month
    const double burden = static_cast<double>(wt_voxels) / static_cast<double>(d.count());
    subj.survival_days = std::max(30.0, 900.0 - 2200.0 * burden + rng.normal(0.0, 60.0));
    subj.survival_days = std::round(subj.survival_days);
    return subj;
}

inline std::vector<PhantomSubject> make_cohort(const PhantomConfig& cfg) {
    std::vector<PhantomSubject> out;
    out.reserve(static_cast<std::size_t>(cfg.n_subjects));
    for (int i = 0; i < cfg.n_subjects; ++i) out.push_back(make_phantom(cfg, i));
    return out;
}

} // namespace gliomkit::phantom
