#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/rng.hpp"
#include "gliomkit/volume.hpp"

namespace gliomkit::net {

// Row-major 2D slice; row = y, col = x of the parent volume.
template <typename T>
struct Grid2 {
    std::int64_t rows = 0, cols = 0;
    std::vector<T> v;

    Grid2() = default;
    Grid2(std::int64_t r, std::int64_t c, T fill = T{})
        : rows(r), cols(c), v(static_cast<std::size_t>(r * c), fill) {}

    T& at(std::int64_t r, std::int64_t c) { return v[static_cast<std::size_t>(r * cols + c)]; }
    const T& at(std::int64_t r, std::int64_t c) const {
        return v[static_cast<std::size_t>(r * cols + c)];
    }
};

template <typename T>
Grid2<T> extract_slice(const Volume3<T>& vol, std::int64_t z) {
    Grid2<T> s(vol.dims.ny, vol.dims.nx);
    for (std::int64_t y = 0; y < vol.dims.ny; ++y)
        for (std::int64_t x = 0; x < vol.dims.nx; ++x) s.at(y, x) = vol.at(x, y, z);
    return s;
}

enum class SampleMode {
    uniform_auto,        // without replacement when the mask is large enough
    with_replacement,
    without_replacement, // errors when mask has fewer than n pixels
};

// Uniform draw of n (row, col) pixels from the in-mask region of one slice.
// Deterministic for a fixed rng state.
inline std::vector<std::pair<std::int32_t, std::int32_t>> sample_training_pixels(
    const Grid2<std::uint8_t>& mask, std::int64_t n, Rng& rng,
    SampleMode mode = SampleMode::uniform_auto) {
    std::vector<std::pair<std::int32_t, std::int32_t>> candidates;
    for (std::int64_t r = 0; r < mask.rows; ++r)
        for (std::int64_t c = 0; c < mask.cols; ++c)
            if (mask.at(r, c))
                candidates.emplace_back(static_cast<std::int32_t>(r), static_cast<std::int32_t>(c));
    if (candidates.empty()) throw value_error("sample_training_pixels: brain mask is empty");

    const std::int64_t m = static_cast<std::int64_t>(candidates.size());
    bool replace;
    switch (mode) {
        case SampleMode::with_replacement: replace = true; break;
        case SampleMode::without_replacement:
            if (m < n)
                throw value_error(concat("sample_training_pixels: mask has ", m,
                                         " pixels, cannot draw ", n, " without replacement"));
            replace = false;
            break;
        default: replace = m < n; break;
    }

    std::vector<std::pair<std::int32_t, std::int32_t>> out;
    out.reserve(static_cast<std::size_t>(n));
    if (replace) {
        for (std::int64_t i = 0; i < n; ++i)
            out.push_back(candidates[static_cast<std::size_t>(
                rng.uniform_index(static_cast<std::uint64_t>(m)))]);
    } else {
        // partial Fisher-Yates: first n entries are a uniform sample
        for (std::int64_t i = 0; i < n; ++i) {
            const std::int64_t j =
                i + static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(m - i)));
            std::swap(candidates[static_cast<std::size_t>(i)], candidates[static_cast<std::size_t>(j)]);
            out.push_back(candidates[static_cast<std::size_t>(i)]);
        }
    }
    return out;
}

} // namespace gliomkit::net
