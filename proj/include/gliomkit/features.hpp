#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/radiomics.hpp"
#include "gliomkit/volume.hpp"

namespace gliomkit::radiomics {

// Feature regions carved out of a label map:
//   ncr     = label 1 (necrotic / non-enhancing core)
//   ed      = label 2 (peritumoral edema)
//   wt_noet = labels {1,2} (whole tumor without the enhancing part)
//   et      = label 4
//   wt      = labels {1,2,4}
inline const std::array<const char*, 5>& feature_region_names() {
    static const std::array<const char*, 5> names = {"ncr", "ed", "wt_noet", "et", "wt"};
    return names;
}

inline MaskVolume feature_region_mask(const LabelVolume& labels, const std::string& region) {
    MaskVolume m(labels.dims, labels.spacing, 0);
    for (std::size_t i = 0; i < labels.data.size(); ++i) {
        const std::uint8_t v = labels.data[i];
        bool in = false;
        if (region == "ncr") in = v == 1;
        else if (region == "ed") in = v == 2;
        else if (region == "wt_noet") in = v == 1 || v == 2;
        else if (region == "et") in = v == 4;
        else if (region == "wt") in = v != 0;
        else throw value_error(concat("unknown feature region '", region, "'"));
        m.data[i] = in;
    }
    return m;
}

struct FeatureSpec {
    std::string name;
    std::vector<std::string> feature_names;

    std::size_t size() const { return feature_names.size(); }
};

namespace detail {

inline void push_geometry_names(std::vector<std::string>& out, const std::string& r,
                                bool extended) {
    for (int a = 1; a <= 3; ++a)
        for (const char* c : {"x", "y", "z"})
            out.push_back(concat(r, "_axis", a, "_", c));
    for (int a = 1; a <= 3; ++a) out.push_back(concat(r, "_len", a));
    for (const char* c : {"x", "y", "z"}) out.push_back(concat(r, "_centroid_", c));
    if (extended) {
        for (int a = 1; a <= 3; ++a) out.push_back(concat(r, "_eig", a));
        out.push_back(concat(r, "_meridional_ecc"));
        out.push_back(concat(r, "_equatorial_ecc"));
        out.push_back(concat(r, "_volume_mm3"));
        out.push_back(concat(r, "_volume_ratio"));
    }
}

} // namespace detail

// The selected 50-feature set: 15 geometry values for each of ncr, ed and
// wt_noet, then kurtosis / entropy / histogram-mode intensity of T1c over the
// whole tumor, the necrotic fractal dimension, and age.
inline FeatureSpec paper50_spec() {
    FeatureSpec spec;
    spec.name = "paper50";
    for (const char* r : {"ncr", "ed", "wt_noet"})
        detail::push_geometry_names(spec.feature_names, r, false);
    spec.feature_names.push_back("wt_t1c_kurtosis");
    spec.feature_names.push_back("wt_t1c_entropy");
    spec.feature_names.push_back("wt_t1c_hist_mode");
    spec.feature_names.push_back("ncr_fractal_dimension");
    spec.feature_names.push_back("age");
    return spec;
}

// Every extracted feature with stable names; alternative specs are slices of
// this set.
inline FeatureSpec all_spec() {
    FeatureSpec spec;
    spec.name = "all";
    for (const char* r : feature_region_names())
        detail::push_geometry_names(spec.feature_names, r, true);
    for (const char* f : {"mean", "variance", "std", "skewness", "kurtosis", "entropy", "hist_mode"})
        spec.feature_names.push_back(concat("wt_t1c_", f));
    spec.feature_names.push_back("ncr_fractal_dimension");
    spec.feature_names.push_back("wt_fractal_dimension");
    spec.feature_names.push_back("fractal_ratio");
    spec.feature_names.push_back("age");
    return spec;
}

inline FeatureSpec feature_spec(const std::string& name) {
    if (name == "paper50") return paper50_spec();
    if (name == "all") return all_spec();
    throw value_error(concat("unknown feature spec '", name, "'; available: paper50, all"));
}

struct FeatureVector {
    std::string subject_id;
    std::vector<std::string> names;
    std::vector<double> values;
    double age = 0.0;
    std::vector<std::string> missing_regions; // empty regions zero-filled
};

namespace detail {

struct NamedValues {
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<std::string> missing;

    void push(const std::string& name, double v) {
        names.push_back(name);
        values.push_back(v);
    }
};

inline void push_geometry_values(NamedValues& out, const std::string& r, const RegionGeometry* g,
                                 bool extended) {
    auto value = [&](auto getter) { return g ? getter(*g) : 0.0; };
    for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c)
            out.push(concat(r, "_axis", a + 1, "_", "xyz"[c]),
                     value([&](const RegionGeometry& gg) { return gg.axes[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)]; }));
    for (int a = 0; a < 3; ++a)
        out.push(concat(r, "_len", a + 1),
                 value([&](const RegionGeometry& gg) { return gg.axis_lengths[static_cast<std::size_t>(a)]; }));
    for (int c = 0; c < 3; ++c)
        out.push(concat(r, "_centroid_", "xyz"[c]),
                 value([&](const RegionGeometry& gg) { return gg.centroid_mm[static_cast<std::size_t>(c)]; }));
    if (extended) {
        for (int a = 0; a < 3; ++a)
            out.push(concat(r, "_eig", a + 1),
                     value([&](const RegionGeometry& gg) { return gg.eigenvalues[static_cast<std::size_t>(a)]; }));
        out.push(concat(r, "_meridional_ecc"),
                 value([&](const RegionGeometry& gg) { return gg.meridional_ecc; }));
        out.push(concat(r, "_equatorial_ecc"),
                 value([&](const RegionGeometry& gg) { return gg.equatorial_ecc; }));
        out.push(concat(r, "_volume_mm3"), value([&](const RegionGeometry& gg) { return gg.volume_mm3; }));
        out.push(concat(r, "_volume_ratio"), value([&](const RegionGeometry& gg) { return gg.volume_ratio; }));
    }
}

// Computes the full feature superset once; specs are sliced from it by name.
inline NamedValues extract_all(const LabelVolume& labels, const ModalityStack& stack, double age,
                               int bins) {
    if (!(labels.dims == stack.dims()))
        throw shape_error("features: label map and modality stack dims differ");
    const Volume3D& t1c = stack.modality("t1c");
    const MaskVolume brain = brain_mask(stack);

    NamedValues out;
    double ncr_fd = 0.0, wt_fd = 0.0;
    for (const char* rname : feature_region_names()) {
        const MaskVolume rmask = feature_region_mask(labels, rname);
        const bool empty = mask_count(rmask) == 0;
        RegionGeometry g;
        if (!empty) g = region_geometry(rmask, brain);
        else out.missing.push_back(rname);
        push_geometry_values(out, rname, empty ? nullptr : &g, true);
        if (!empty && std::string(rname) == "ncr")
            ncr_fd = box_counting_dimension(rmask).fractal_dimension;
        if (!empty && std::string(rname) == "wt")
            wt_fd = box_counting_dimension(rmask).fractal_dimension;
    }

    const MaskVolume wt = feature_region_mask(labels, "wt");
    IntensityStats ist;
    if (mask_count(wt) > 0) ist = intensity_stats(t1c, wt, bins);
    out.push("wt_t1c_mean", ist.mean);
    out.push("wt_t1c_variance", ist.variance);
    out.push("wt_t1c_std", ist.std_dev);
    out.push("wt_t1c_skewness", ist.skewness);
    out.push("wt_t1c_kurtosis", ist.kurtosis);
    out.push("wt_t1c_entropy", ist.entropy_bits);
    out.push("wt_t1c_hist_mode", ist.histogram_mode_intensity);
    out.push("ncr_fractal_dimension", ncr_fd);
    out.push("wt_fractal_dimension", wt_fd);
    out.push("fractal_ratio", wt_fd > 0.0 ? ncr_fd / wt_fd : 0.0);
    out.push("age", age);
    return out;
}

} // namespace detail

// Assembles the spec's features for one subject. Empty regions contribute
// zeros for their block and a missing-region flag in the metadata.
inline FeatureVector assemble_features(const LabelVolume& labels, const ModalityStack& stack,
                                       double age, const FeatureSpec& spec, int bins = 32) {
    const detail::NamedValues all = detail::extract_all(labels, stack, age, bins);
    FeatureVector fv;
    fv.subject_id = stack.subject_id;
    fv.age = age;
    fv.missing_regions = all.missing;
    fv.names = spec.feature_names;
    fv.values.reserve(spec.feature_names.size());
    for (const auto& name : spec.feature_names) {
        bool found = false;
        for (std::size_t i = 0; i < all.names.size(); ++i) {
            if (all.names[i] == name) {
                fv.values.push_back(all.values[i]);
                found = true;
                break;
            }
        }
        if (!found) throw value_error(concat("feature '", name, "' is not extracted"));
    }
    for (double v : fv.values)
        if (!std::isfinite(v)) throw value_error("features: non-finite value in feature vector");
    return fv;
}

inline FeatureVector full_feature_dump(const LabelVolume& labels, const ModalityStack& stack,
                                       double age, int bins = 32) {
    return assemble_features(labels, stack, age, all_spec(), bins);
}

} // namespace gliomkit::radiomics
