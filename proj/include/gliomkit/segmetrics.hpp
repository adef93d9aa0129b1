#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/volume.hpp"

namespace gliomkit::segmetrics {

enum class RegionMode {
    standard,     // TC = {1,4} (BraTS convention)
    strict_paper, // TC = {1,2} (the paper's literal text)
};

struct RegionMasks {
    MaskVolume wt, tc, et;
};

inline const std::array<const char*, 3>& region_names() {
    static const std::array<const char*, 3> names = {"WT", "TC", "ET"};
    return names;
}

// WT = {1,2,4}; ET = {4}; TC per mode.
inline RegionMasks merge_regions(const LabelVolume& labels,
                                 RegionMode mode = RegionMode::standard) {
    RegionMasks r{MaskVolume(labels.dims, labels.spacing, 0),
                  MaskVolume(labels.dims, labels.spacing, 0),
                  MaskVolume(labels.dims, labels.spacing, 0)};
    for (std::size_t i = 0; i < labels.data.size(); ++i) {
        const std::uint8_t v = labels.data[i];
        if (v == 0) continue;
        r.wt.data[i] = 1;
        if (v == 4) r.et.data[i] = 1;
        const bool tc = mode == RegionMode::standard ? (v == 1 || v == 4) : (v == 1 || v == 2);
        if (tc) r.tc.data[i] = 1;
    }
    return r;
}

namespace detail {

inline std::vector<std::array<int, 3>> neighbor_offsets(int connectivity) {
    if (connectivity != 6 && connectivity != 18 && connectivity != 26)
        throw value_error(concat("connectivity must be 6, 18 or 26, got ", connectivity));
    std::vector<std::array<int, 3>> out;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (manhattan == 0) continue;
                if (connectivity == 6 && manhattan > 1) continue;
                if (connectivity == 18 && manhattan > 2) continue;
                out.push_back({dx, dy, dz});
            }
    return out;
}

} // namespace detail

// Connected components of the binarized foreground (any nonzero label); only
// the largest component survives, labels inside it unchanged. Size ties go to
// the component with the smallest minimum linear voxel index.
inline LabelVolume largest_component_filter(const LabelVolume& labels, int connectivity = 26) {
    const auto offsets = detail::neighbor_offsets(connectivity);
    const Dims3 d = labels.dims;
    std::vector<std::int32_t> comp(labels.data.size(), -1);
    std::int64_t best_size = 0, best_first = -1;
    std::int32_t best_id = -1, next_id = 0;
    std::vector<std::int64_t> stack;

    for (std::size_t seed = 0; seed < labels.data.size(); ++seed) {
        if (labels.data[seed] == 0 || comp[seed] >= 0) continue;
        const std::int32_t id = next_id++;
        std::int64_t size = 0;
        const std::int64_t first = static_cast<std::int64_t>(seed);
        stack.clear();
        stack.push_back(first);
        comp[seed] = id;
        while (!stack.empty()) {
            const std::int64_t cur = stack.back();
            stack.pop_back();
            ++size;
            const std::int64_t x = cur % d.nx;
            const std::int64_t y = (cur / d.nx) % d.ny;
            const std::int64_t z = cur / (d.nx * d.ny);
            for (const auto& off : offsets) {
                const std::int64_t nx = x + off[0], ny = y + off[1], nz = z + off[2];
                if (nx < 0 || nx >= d.nx || ny < 0 || ny >= d.ny || nz < 0 || nz >= d.nz) continue;
                const std::int64_t ni = labels.index(nx, ny, nz);
                if (labels.data[static_cast<std::size_t>(ni)] == 0 ||
                    comp[static_cast<std::size_t>(ni)] >= 0)
                    continue;
                comp[static_cast<std::size_t>(ni)] = id;
                stack.push_back(ni);
            }
        }
        if (size > best_size || (size == best_size && first < best_first)) {
            best_size = size;
            best_first = first;
            best_id = id;
        }
    }

    LabelVolume out(labels.dims, labels.spacing, 0);
    if (best_id < 0) return out; // all-background input
    for (std::size_t i = 0; i < labels.data.size(); ++i)
        if (comp[i] == best_id) out.data[i] = labels.data[i];
    return out;
}

// 2|P∩T| / (|P|+|T|); both-empty -> 1, one-empty -> 0.
inline double dice(const MaskVolume& pred, const MaskVolume& truth) {
    if (!(pred.dims == truth.dims)) throw shape_error("dice: mask dims differ");
    std::int64_t p = 0, t = 0, both = 0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const bool a = pred.data[i] != 0, b = truth.data[i] != 0;
        p += a;
        t += b;
        both += (a && b);
    }
    if (p + t == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(p + t);
}

namespace detail {

// A boundary voxel is in-mask with a 6-neighbor outside the mask, or sits on
// the grid edge.
inline std::vector<std::int64_t> boundary_voxels(const MaskVolume& mask) {
    const Dims3 d = mask.dims;
    std::vector<std::int64_t> out;
    for (std::int64_t z = 0; z < d.nz; ++z)
        for (std::int64_t y = 0; y < d.ny; ++y)
            for (std::int64_t x = 0; x < d.nx; ++x) {
                if (!mask.at(x, y, z)) continue;
                bool exposed = x == 0 || x == d.nx - 1 || y == 0 || y == d.ny - 1 || z == 0 ||
                               z == d.nz - 1;
                if (!exposed)
                    exposed = !mask.at(x - 1, y, z) || !mask.at(x + 1, y, z) ||
                              !mask.at(x, y - 1, z) || !mask.at(x, y + 1, z) ||
                              !mask.at(x, y, z - 1) || !mask.at(x, y, z + 1);
                if (exposed) out.push_back(mask.index(x, y, z));
            }
    return out;
}

constexpr double edt_inf = 1e30;

// Felzenszwalb-Huttenlocher 1D squared-distance transform with sample pitch s.
inline void edt_1d(const double* f, double* dist, std::int64_t n, double s,
                   std::vector<std::int64_t>& v, std::vector<double>& z) {
    v.resize(static_cast<std::size_t>(n));
    z.resize(static_cast<std::size_t>(n + 1));
    const double s2 = s * s;
    int k = -1;
    for (std::int64_t q = 0; q < n; ++q) {
        if (f[q] >= edt_inf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -edt_inf;
            z[1] = edt_inf;
            continue;
        }
        double inter;
        while (true) {
            const std::int64_t p = v[static_cast<std::size_t>(k)];
            inter = ((f[q] - f[p]) / s2 + static_cast<double>(q * q - p * p)) /
                    (2.0 * static_cast<double>(q - p));
            if (inter <= z[static_cast<std::size_t>(k)]) {
                --k;
                if (k < 0) break;
            } else {
                break;
            }
        }
        ++k;
        v[static_cast<std::size_t>(k)] = q;
        z[static_cast<std::size_t>(k)] = k == 0 ? -edt_inf : inter;
        z[static_cast<std::size_t>(k + 1)] = edt_inf;
    }
    if (k < 0) {
        for (std::int64_t p = 0; p < n; ++p) dist[p] = edt_inf;
        return;
    }
    int j = 0;
    for (std::int64_t p = 0; p < n; ++p) {
        while (z[static_cast<std::size_t>(j + 1)] < static_cast<double>(p)) ++j;
        const double dq = static_cast<double>(p - v[static_cast<std::size_t>(j)]) * s;
        dist[p] = dq * dq + f[v[static_cast<std::size_t>(j)]];
    }
}

// Exact squared Euclidean distance (mm^2) from every voxel center to the
// nearest seed voxel center, separable over the three axes.
inline std::vector<double> edt_3d(const Dims3& d, const Spacing3& sp,
                                  const std::vector<std::int64_t>& seeds) {
    std::vector<double> dist(static_cast<std::size_t>(d.count()), edt_inf);
    for (const std::int64_t i : seeds) dist[static_cast<std::size_t>(i)] = 0.0;

    std::vector<double> line, out_line;
    std::vector<std::int64_t> hull_v;
    std::vector<double> hull_z;

    // x pass
    line.resize(static_cast<std::size_t>(d.nx));
    out_line.resize(static_cast<std::size_t>(d.nx));
    for (std::int64_t z = 0; z < d.nz; ++z)
        for (std::int64_t y = 0; y < d.ny; ++y) {
            const std::int64_t base = d.nx * (y + d.ny * z);
            for (std::int64_t x = 0; x < d.nx; ++x) line[static_cast<std::size_t>(x)] = dist[static_cast<std::size_t>(base + x)];
            edt_1d(line.data(), out_line.data(), d.nx, sp.sx, hull_v, hull_z);
            for (std::int64_t x = 0; x < d.nx; ++x) dist[static_cast<std::size_t>(base + x)] = out_line[static_cast<std::size_t>(x)];
        }

    // y pass
    line.resize(static_cast<std::size_t>(d.ny));
    out_line.resize(static_cast<std::size_t>(d.ny));
    for (std::int64_t z = 0; z < d.nz; ++z)
        for (std::int64_t x = 0; x < d.nx; ++x) {
            for (std::int64_t y = 0; y < d.ny; ++y)
                line[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(x + d.nx * (y + d.ny * z))];
            edt_1d(line.data(), out_line.data(), d.ny, sp.sy, hull_v, hull_z);
            for (std::int64_t y = 0; y < d.ny; ++y)
                dist[static_cast<std::size_t>(x + d.nx * (y + d.ny * z))] = out_line[static_cast<std::size_t>(y)];
        }

    // z pass
    line.resize(static_cast<std::size_t>(d.nz));
    out_line.resize(static_cast<std::size_t>(d.nz));
    for (std::int64_t y = 0; y < d.ny; ++y)
        for (std::int64_t x = 0; x < d.nx; ++x) {
            for (std::int64_t z = 0; z < d.nz; ++z)
                line[static_cast<std::size_t>(z)] = dist[static_cast<std::size_t>(x + d.nx * (y + d.ny * z))];
            edt_1d(line.data(), out_line.data(), d.nz, sp.sz, hull_v, hull_z);
            for (std::int64_t z = 0; z < d.nz; ++z)
                dist[static_cast<std::size_t>(x + d.nx * (y + d.ny * z))] = out_line[static_cast<std::size_t>(z)];
        }
    return dist;
}

// Percentile by linear interpolation between closest ranks; v is sorted.
inline double percentile_sorted(const std::vector<double>& v, double p) {
    if (v.empty()) throw value_error("percentile of empty set");
    if (v.size() == 1) return v[0];
    const double rank = p / 100.0 * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

} // namespace detail

// Symmetric Hausdorff over boundary voxels, Euclidean millimetre distances.
// percentile 95 applies to each directed distance set before the outer max.
inline double hausdorff(const MaskVolume& pred, const MaskVolume& truth, int percentile = 100) {
    if (!(pred.dims == truth.dims)) throw shape_error("hausdorff: mask dims differ");
    if (!(pred.spacing == truth.spacing)) throw shape_error("hausdorff: mask spacings differ");
    if (percentile != 100 && percentile != 95)
        throw value_error(concat("hausdorff percentile must be 100 or 95, got ", percentile));
    const auto pb = detail::boundary_voxels(pred);
    const auto tb = detail::boundary_voxels(truth);
    if (pb.empty() || tb.empty())
        throw value_error("hausdorff: both masks must be nonempty");

    const auto dist_to_truth = detail::edt_3d(pred.dims, pred.spacing, tb);
    const auto dist_to_pred = detail::edt_3d(pred.dims, pred.spacing, pb);

    auto directed = [&](const std::vector<std::int64_t>& from, const std::vector<double>& field) {
        std::vector<double> d;
        d.reserve(from.size());
        for (const std::int64_t i : from) d.push_back(std::sqrt(field[static_cast<std::size_t>(i)]));
        std::sort(d.begin(), d.end());
        return percentile == 100 ? d.back() : detail::percentile_sorted(d, 95.0);
    };
    return std::max(directed(pb, dist_to_truth), directed(tb, dist_to_pred));
}

struct CaseMetrics {
    std::string subject_id;
    // Index order follows region_names(): WT, TC, ET. Hausdorff entries are
    // NaN when either mask of the pair is empty (missing region).
    std::array<double, 3> dice{};
    std::array<double, 3> hd{};
    std::array<double, 3> hd95{};
};

inline CaseMetrics evaluate_case(const std::string& subject_id, const LabelVolume& pred,
                                 const LabelVolume& truth, RegionMode mode = RegionMode::standard) {
    if (!(pred.dims == truth.dims)) throw shape_error("evaluate_case: volume dims differ");
    CaseMetrics m;
    m.subject_id = subject_id;
    const RegionMasks pr = merge_regions(pred, mode);
    const RegionMasks tr = merge_regions(truth, mode);
    const MaskVolume* pm[3] = {&pr.wt, &pr.tc, &pr.et};
    const MaskVolume* tm[3] = {&tr.wt, &tr.tc, &tr.et};
    for (int r = 0; r < 3; ++r) {
        m.dice[static_cast<std::size_t>(r)] = dice(*pm[r], *tm[r]);
        try {
            m.hd[static_cast<std::size_t>(r)] = hausdorff(*pm[r], *tm[r], 100);
            m.hd95[static_cast<std::size_t>(r)] = hausdorff(*pm[r], *tm[r], 95);
        } catch (const value_error&) {
            m.hd[static_cast<std::size_t>(r)] = std::numeric_limits<double>::quiet_NaN();
            m.hd95[static_cast<std::size_t>(r)] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return m;
}

struct Summary {
    double mean = 0.0, stddev = 0.0, median = 0.0;
    std::int64_t count = 0;
};

// Mean / sample standard deviation / median; NaN entries are excluded and the
// surviving count reported. A single value has stddev 0 by convention.
inline Summary summarize(std::vector<double> values) {
    values.erase(std::remove_if(values.begin(), values.end(),
                                [](double v) { return std::isnan(v); }),
                 values.end());
    Summary s;
    s.count = static_cast<std::int64_t>(values.size());
    if (values.empty()) {
        s.mean = s.stddev = s.median = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    return s;
}

struct CohortReport {
    // [metric][region] with metrics dice, hd, hd95 and regions WT, TC, ET.
    std::array<std::array<Summary, 3>, 3> stats;
};

inline CohortReport aggregate(const std::vector<CaseMetrics>& cases) {
    if (cases.empty()) throw value_error("aggregate: no cases");
    CohortReport rep;
    for (int r = 0; r < 3; ++r) {
        std::vector<double> d, h, h95;
        for (const auto& c : cases) {
            d.push_back(c.dice[static_cast<std::size_t>(r)]);
            h.push_back(c.hd[static_cast<std::size_t>(r)]);
            h95.push_back(c.hd95[static_cast<std::size_t>(r)]);
        }
        rep.stats[0][static_cast<std::size_t>(r)] = summarize(std::move(d));
        rep.stats[1][static_cast<std::size_t>(r)] = summarize(std::move(h));
        rep.stats[2][static_cast<std::size_t>(r)] = summarize(std::move(h95));
    }
    return rep;
}

} // namespace gliomkit::segmetrics
