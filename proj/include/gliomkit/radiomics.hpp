#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/volume.hpp"

namespace gliomkit::radiomics {

namespace detail {

// Cyclic Jacobi rotations for a symmetric 3x3 matrix. Returns eigenvalues in
// eigval and matching unit eigenvectors in the rows of eigvec, unsorted.
inline void jacobi_eigen_3x3(std::array<std::array<double, 3>, 3> a, std::array<double, 3>& eigval,
                             std::array<std::array<double, 3>, 3>& eigvec) {
    std::array<std::array<double, 3>, 3> v = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
        if (off < 1e-300) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    for (int i = 0; i < 3; ++i) {
        eigval[static_cast<std::size_t>(i)] = a[i][i];
        for (int k = 0; k < 3; ++k) eigvec[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = v[k][i];
    }
}

// Deterministic sign: the component of largest magnitude is made positive.
inline void fix_sign(std::array<double, 3>& vec) {
    int arg = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(vec[static_cast<std::size_t>(k)]) > std::abs(vec[static_cast<std::size_t>(arg)])) arg = k;
    if (vec[static_cast<std::size_t>(arg)] < 0)
        for (auto& c : vec) c = -c;
}

} // namespace detail

struct RegionGeometry {
    std::array<double, 3> centroid_mm{};
    std::array<double, 3> eigenvalues{};              // descending, mm^2
    std::array<std::array<double, 3>, 3> axes{};      // unit eigenvectors, axes[0] = first axis
    std::array<double, 3> axis_lengths{};             // 2*sqrt(5*lambda), mm
    double meridional_ecc = 0.0;                      // sqrt(1 - c^2/a^2)
    double equatorial_ecc = 0.0;                      // sqrt(1 - b^2/a^2)
    double volume_mm3 = 0.0;
    double volume_ratio = 0.0;                        // region volume / brain volume
    std::int64_t voxel_count = 0;
};

// Principal-axis geometry of a voxel region. Voxel centers are (index+0.5) *
// spacing; the covariance is the population covariance of those centers, and
// axis lengths use the solid-ellipsoid equivalence L_i = 2*sqrt(5*lambda_i).
inline RegionGeometry region_geometry(const MaskVolume& mask, const MaskVolume& brain) {
    RegionGeometry g;
    const Dims3 d = mask.dims;
    const Spacing3 sp = mask.spacing;

    double sum[3] = {0, 0, 0};
    std::int64_t n = 0;
    for (std::int64_t z = 0; z < d.nz; ++z)
        for (std::int64_t y = 0; y < d.ny; ++y)
            for (std::int64_t x = 0; x < d.nx; ++x) {
                if (!mask.at(x, y, z)) continue;
                sum[0] += (static_cast<double>(x) + 0.5) * sp.sx;
                sum[1] += (static_cast<double>(y) + 0.5) * sp.sy;
                sum[2] += (static_cast<double>(z) + 0.5) * sp.sz;
                ++n;
            }
    if (n == 0) throw value_error("region_geometry: empty region mask");
    g.voxel_count = n;
    for (int k = 0; k < 3; ++k) g.centroid_mm[static_cast<std::size_t>(k)] = sum[k] / static_cast<double>(n);

    std::array<std::array<double, 3>, 3> cov{};
    for (std::int64_t z = 0; z < d.nz; ++z)
        for (std::int64_t y = 0; y < d.ny; ++y)
            for (std::int64_t x = 0; x < d.nx; ++x) {
                if (!mask.at(x, y, z)) continue;
                const double p[3] = {(static_cast<double>(x) + 0.5) * sp.sx - g.centroid_mm[0],
                                     (static_cast<double>(y) + 0.5) * sp.sy - g.centroid_mm[1],
                                     (static_cast<double>(z) + 0.5) * sp.sz - g.centroid_mm[2]};
                for (int i = 0; i < 3; ++i)
                    for (int j = i; j < 3; ++j) cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += p[i] * p[j];
            }
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] /= static_cast<double>(n);
            cov[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }

    std::array<double, 3> ev;
    std::array<std::array<double, 3>, 3> vec;
    detail::jacobi_eigen_3x3(cov, ev, vec);
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return ev[static_cast<std::size_t>(a)] > ev[static_cast<std::size_t>(b)]; });
    for (int i = 0; i < 3; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        g.eigenvalues[ii] = std::max(0.0, ev[static_cast<std::size_t>(order[ii])]);
        g.axes[ii] = vec[static_cast<std::size_t>(order[ii])];
        detail::fix_sign(g.axes[ii]);
        g.axis_lengths[ii] = 2.0 * std::sqrt(5.0 * g.eigenvalues[ii]);
    }

    const double a = g.axis_lengths[0] / 2.0, b = g.axis_lengths[1] / 2.0,
                 c = g.axis_lengths[2] / 2.0;
    if (a > 0.0) {
        g.equatorial_ecc = std::sqrt(std::max(0.0, 1.0 - (b * b) / (a * a)));
        g.meridional_ecc = std::sqrt(std::max(0.0, 1.0 - (c * c) / (a * a)));
    }
    g.volume_mm3 = static_cast<double>(n) * sp.voxel_volume();
    const std::int64_t brain_n = mask_count(brain);
    g.volume_ratio = brain_n > 0 ? static_cast<double>(n) / static_cast<double>(brain_n) : 0.0;
    return g;
}

struct IntensityStats {
    double mean = 0.0, variance = 0.0, std_dev = 0.0;
    double skewness = 0.0;      // m3 / m2^1.5, 0 for constant regions
    double kurtosis = 0.0;      // Pearson m4 / m2^2 (Gaussian -> 3), 0 for constant regions
    double entropy_bits = 0.0;  // over nonempty histogram bins
    std::vector<std::int64_t> histogram;
    double histogram_mode_intensity = 0.0; // center of the fullest bin, lowest index on ties
};

inline IntensityStats intensity_stats(const Volume3D& vol, const MaskVolume& mask, int bins = 32) {
    if (!(vol.dims == mask.dims)) throw shape_error("intensity_stats: volume and mask dims differ");
    if (bins < 1) throw value_error("intensity_stats: bins must be >= 1");
    std::vector<double> values;
    for (std::size_t i = 0; i < vol.data.size(); ++i)
        if (mask.data[i]) values.push_back(vol.data[i]);
    if (values.empty()) throw value_error("intensity_stats: empty region mask");

    IntensityStats s;
    const double n = static_cast<double>(values.size());
    for (double v : values) s.mean += v;
    s.mean /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : values) {
        const double d = v - s.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    s.variance = m2;
    s.std_dev = std::sqrt(m2);
    if (m2 > 0.0) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.kurtosis = m4 / (m2 * m2);
    }

    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    s.histogram.assign(static_cast<std::size_t>(bins), 0);
    if (hi == lo) {
        s.histogram[0] = static_cast<std::int64_t>(values.size());
        s.histogram_mode_intensity = lo;
        s.entropy_bits = 0.0;
        return s;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        auto idx = static_cast<std::int64_t>((v - lo) / width);
        idx = std::clamp<std::int64_t>(idx, 0, bins - 1);
        ++s.histogram[static_cast<std::size_t>(idx)];
    }
    double entropy = 0.0;
    std::size_t mode = 0;
    for (std::size_t k = 0; k < s.histogram.size(); ++k) {
        if (s.histogram[k] > s.histogram[mode]) mode = k;
        if (s.histogram[k] > 0) {
            const double p = static_cast<double>(s.histogram[k]) / n;
            entropy -= p * std::log2(p);
        }
    }
    s.entropy_bits = entropy;
    s.histogram_mode_intensity = lo + (static_cast<double>(mode) + 0.5) * width;
    return s;
}

struct FractalResult {
    double fractal_dimension = 0.0;
    std::vector<std::int64_t> scales_used; // box edge lengths in voxels
    std::vector<std::int64_t> box_counts;  // N(s) per scale
    double fit_r2 = 1.0;
};

// Box-counting over the mask's bounding box, padded to the next power of two
// (at least 8 so there are >= 3 scales). N(s) counts occupied grid-aligned
// s^3 boxes; the dimension is the least-squares slope of log N vs log(1/s).
inline FractalResult box_counting_dimension(const MaskVolume& mask, int min_scales = 3) {
    const Dims3 d = mask.dims;
    std::int64_t lo[3] = {d.nx, d.ny, d.nz}, hi[3] = {-1, -1, -1};
    for (std::int64_t z = 0; z < d.nz; ++z)
        for (std::int64_t y = 0; y < d.ny; ++y)
            for (std::int64_t x = 0; x < d.nx; ++x) {
                if (!mask.at(x, y, z)) continue;
                lo[0] = std::min(lo[0], x);
                lo[1] = std::min(lo[1], y);
                lo[2] = std::min(lo[2], z);
                hi[0] = std::max(hi[0], x);
                hi[1] = std::max(hi[1], y);
                hi[2] = std::max(hi[2], z);
            }
    if (hi[0] < 0) throw value_error("box_counting_dimension: empty mask");

    const std::int64_t extent =
        std::max({hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1});
    std::int64_t padded = 8;
    while (padded < extent) padded *= 2;

    FractalResult res;
    for (std::int64_t s = 1; s <= padded / 2; s *= 2) {
        const std::int64_t grid = (padded + s - 1) / s;
        std::vector<std::uint8_t> occupied(static_cast<std::size_t>(grid * grid * grid), 0);
        std::int64_t count = 0;
        for (std::int64_t z = lo[2]; z <= hi[2]; ++z)
            for (std::int64_t y = lo[1]; y <= hi[1]; ++y)
                for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
                    if (!mask.at(x, y, z)) continue;
                    const std::int64_t bx = (x - lo[0]) / s, by = (y - lo[1]) / s,
                                       bz = (z - lo[2]) / s;
                    auto& cell = occupied[static_cast<std::size_t>(bx + grid * (by + grid * bz))];
                    if (!cell) {
                        cell = 1;
                        ++count;
                    }
                }
        res.scales_used.push_back(s);
        res.box_counts.push_back(count);
    }
    if (static_cast<int>(res.scales_used.size()) < min_scales)
        throw value_error(concat("box_counting_dimension: only ", res.scales_used.size(),
                                 " scales available, need ", min_scales,
                                 "; pad the mask to a larger extent"));

    // slope of ln N against ln(1/s)
    const std::size_t m = res.scales_used.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sx += -std::log(static_cast<double>(res.scales_used[i]));
        sy += std::log(static_cast<double>(res.box_counts[i]));
    }
    const double mx = sx / static_cast<double>(m), my = sy / static_cast<double>(m);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dx = -std::log(static_cast<double>(res.scales_used[i])) - mx;
        const double dy = std::log(static_cast<double>(res.box_counts[i])) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    res.fractal_dimension = sxx > 0 ? sxy / sxx : 0.0;
    res.fit_r2 = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return res;
}

} // namespace gliomkit::radiomics
