#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "gliomkit/common.hpp"
#include "gliomkit/volume.hpp"

namespace gliomkit::nifti {

// NIfTI-1 single-file header, 348 bytes, field offsets per the published
// layout (nifti1.h). Only the fields the toolkit consumes are interpreted;
// the rest are preserved as zeros on write.
struct Header {
    std::int32_t sizeof_hdr;    //   0
    char data_type[10];         //   4
    char db_name[18];           //  14
    std::int32_t extents;       //  32
    std::int16_t session_error; //  36
    char regular;               //  38
    char dim_info;              //  39
    std::int16_t dim[8];        //  40
    float intent_p1;            //  56
    float intent_p2;            //  60
    float intent_p3;            //  64
    std::int16_t intent_code;   //  68
    std::int16_t datatype;      //  70
    std::int16_t bitpix;        //  72
    std::int16_t slice_start;   //  74
    float pixdim[8];            //  76
    float vox_offset;           // 108
    float scl_slope;            // 112
    float scl_inter;            // 116
    std::int16_t slice_end;     // 120
    char slice_code;            // 122
    char xyzt_units;            // 123
    float cal_max;              // 124
    float cal_min;              // 128
    float slice_duration;       // 132
    float toffset;              // 136
    std::int32_t glmax;         // 140
    std::int32_t glmin;         // 144
    char descrip[80];           // 148
    char aux_file[24];          // 228
    std::int16_t qform_code;    // 252
    std::int16_t sform_code;    // 254
    float quatern_b;            // 256
    float quatern_c;            // 260
    float quatern_d;            // 264
    float qoffset_x;            // 268
    float qoffset_y;            // 272
    float qoffset_z;            // 276
    float srow_x[4];            // 280
    float srow_y[4];            // 296
    float srow_z[4];            // 312
    char intent_name[16];       // 328
    char magic[4];              // 344
};
static_assert(sizeof(Header) == 348, "NIfTI-1 header must be exactly 348 bytes");

enum DataType : std::int16_t {
    DT_UINT8 = 2,
    DT_INT16 = 4,
    DT_FLOAT32 = 16,
    DT_FLOAT64 = 64,
    DT_UINT16 = 512,
};

namespace detail {

inline void swap_bytes(void* p, std::size_t elem_size) {
    auto* b = static_cast<unsigned char*>(p);
    for (std::size_t i = 0; i < elem_size / 2; ++i) std::swap(b[i], b[elem_size - 1 - i]);
}

template <typename T>
void swap_value(T& v) {
    swap_bytes(&v, sizeof(T));
}

inline void swap_header(Header& h) {
    swap_value(h.sizeof_hdr);
    swap_value(h.extents);
    swap_value(h.session_error);
    for (auto& d : h.dim) swap_value(d);
    swap_value(h.intent_p1);
    swap_value(h.intent_p2);
    swap_value(h.intent_p3);
    swap_value(h.intent_code);
    swap_value(h.datatype);
    swap_value(h.bitpix);
    swap_value(h.slice_start);
    for (auto& p : h.pixdim) swap_value(p);
    swap_value(h.vox_offset);
    swap_value(h.scl_slope);
    swap_value(h.scl_inter);
    swap_value(h.slice_end);
    swap_value(h.cal_max);
    swap_value(h.cal_min);
    swap_value(h.slice_duration);
    swap_value(h.toffset);
    swap_value(h.glmax);
    swap_value(h.glmin);
    swap_value(h.qform_code);
    swap_value(h.sform_code);
    swap_value(h.quatern_b);
    swap_value(h.quatern_c);
    swap_value(h.quatern_d);
    swap_value(h.qoffset_x);
    swap_value(h.qoffset_y);
    swap_value(h.qoffset_z);
    for (auto& v : h.srow_x) swap_value(v);
    for (auto& v : h.srow_y) swap_value(v);
    for (auto& v : h.srow_z) swap_value(v);
}

// gzread handles both gzip-compressed and plain files.
class GzReader {
public:
    explicit GzReader(const std::string& path) : file_(gzopen(path.c_str(), "rb")) {
        if (!file_) throw io_error(concat("cannot open ", path));
    }
    ~GzReader() {
        if (file_) gzclose(file_);
    }
    GzReader(const GzReader&) = delete;
    GzReader& operator=(const GzReader&) = delete;

    void read(void* dst, std::size_t n, const std::string& what) {
        const int got = gzread(file_, dst, static_cast<unsigned>(n));
        if (got < 0 || static_cast<std::size_t>(got) != n)
            throw format_error(concat("truncated NIfTI file while reading ", what));
    }

    void skip(std::size_t n) {
        std::vector<char> sink(std::min<std::size_t>(n, 65536));
        while (n > 0) {
            const std::size_t chunk = std::min(n, sink.size());
            read(sink.data(), chunk, "padding before voxel data");
            n -= chunk;
        }
    }

private:
    gzFile file_;
};

template <typename Raw>
void convert_voxels(GzReader& in, std::size_t count, bool swap, float slope, float inter,
                    std::vector<float>& out) {
    std::vector<Raw> raw(count);
    in.read(raw.data(), count * sizeof(Raw), "voxel data");
    if (swap && sizeof(Raw) > 1)
        for (auto& v : raw) swap_value(v);
    out.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = static_cast<float>(raw[i]) * slope + inter;
}

} // namespace detail

inline Volume3D read_volume(const std::string& path) {
    if (!std::filesystem::exists(path)) throw io_error(concat("file does not exist: ", path));
    detail::GzReader in(path);

    Header h{};
    in.read(&h, sizeof(Header), "header");

    bool swap = false;
    if (h.sizeof_hdr != 348) {
        auto swapped = h.sizeof_hdr;
        detail::swap_value(swapped);
        if (swapped != 348)
            throw format_error(concat("malformed NIfTI header: sizeof_hdr = ", h.sizeof_hdr,
                                      ", expected 348"));
        swap = true;
        detail::swap_header(h);
    }

    if (std::memcmp(h.magic, "n+1", 4) != 0 && std::memcmp(h.magic, "ni1", 4) != 0)
        throw format_error("malformed NIfTI header: magic is not \"n+1\" or \"ni1\"");
    if (std::memcmp(h.magic, "ni1", 4) == 0)
        throw format_error("two-file NIfTI (.hdr/.img, magic \"ni1\") is not supported");

    if (h.dim[0] < 1 || h.dim[0] > 7)
        throw format_error(concat("malformed NIfTI header: dim[0] = ", h.dim[0]));
    for (int i = 1; i <= 3 && i <= h.dim[0]; ++i)
        if (h.dim[i] < 1)
            throw format_error(concat("malformed NIfTI header: dim[", i, "] = ", h.dim[i]));
    for (int i = 4; i <= h.dim[0]; ++i)
        if (h.dim[i] > 1)
            throw format_error(concat("NIfTI file has ", h.dim[i], " volumes along dim ", i,
                                      "; only 3D volumes are supported"));

    Dims3 dims{h.dim[0] >= 1 ? h.dim[1] : 1, h.dim[0] >= 2 ? h.dim[2] : 1,
               h.dim[0] >= 3 ? h.dim[3] : 1};
    Spacing3 spacing{h.dim[0] >= 1 && h.pixdim[1] > 0 ? h.pixdim[1] : 1.0,
                     h.dim[0] >= 2 && h.pixdim[2] > 0 ? h.pixdim[2] : 1.0,
                     h.dim[0] >= 3 && h.pixdim[3] > 0 ? h.pixdim[3] : 1.0};

    const float slope = h.scl_slope != 0.0f ? h.scl_slope : 1.0f;
    const float inter = h.scl_slope != 0.0f ? h.scl_inter : 0.0f;

    const std::size_t count = static_cast<std::size_t>(dims.count());
    std::int64_t offset = static_cast<std::int64_t>(h.vox_offset);
    if (offset < static_cast<std::int64_t>(sizeof(Header)))
        throw format_error(concat("malformed NIfTI header: vox_offset = ", h.vox_offset));
    in.skip(static_cast<std::size_t>(offset) - sizeof(Header));

    Volume3D vol(dims, spacing);
    switch (h.datatype) {
        case DT_UINT8:
            detail::convert_voxels<std::uint8_t>(in, count, swap, slope, inter, vol.data);
            break;
        case DT_INT16:
            detail::convert_voxels<std::int16_t>(in, count, swap, slope, inter, vol.data);
            break;
        case DT_UINT16:
            detail::convert_voxels<std::uint16_t>(in, count, swap, slope, inter, vol.data);
            break;
        case DT_FLOAT32:
            detail::convert_voxels<float>(in, count, swap, slope, inter, vol.data);
            break;
        case DT_FLOAT64:
            detail::convert_voxels<double>(in, count, swap, slope, inter, vol.data);
            break;
        default:
            throw format_error(concat("unsupported NIfTI datatype code ", h.datatype,
                                      "; supported: uint8, int16, uint16, float32, float64"));
    }
    return vol;
}

inline LabelVolume read_labels(const std::string& path) {
    const Volume3D raw = read_volume(path);
    LabelVolume labels(raw.dims, raw.spacing);
    for (std::size_t i = 0; i < raw.data.size(); ++i) {
        const float v = raw.data[i];
        const float r = std::nearbyint(v);
        if (v != r || !is_brats_label(static_cast<std::uint32_t>(r))) {
            const std::int64_t x = static_cast<std::int64_t>(i) % raw.dims.nx;
            const std::int64_t y = (static_cast<std::int64_t>(i) / raw.dims.nx) % raw.dims.ny;
            const std::int64_t z = static_cast<std::int64_t>(i) / (raw.dims.nx * raw.dims.ny);
            throw value_error(concat(path, ": invalid label value ", v, " at voxel (", x, ",", y,
                                     ",", z, "); allowed labels are {0,1,2,4}"));
        }
        labels.data[i] = static_cast<std::uint8_t>(r);
    }
    return labels;
}

namespace detail {

inline Header make_header(Dims3 dims, Spacing3 spacing, std::int16_t datatype,
                          std::int16_t bitpix) {
    Header h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    h.dim[1] = static_cast<std::int16_t>(dims.nx);
    h.dim[2] = static_cast<std::int16_t>(dims.ny);
    h.dim[3] = static_cast<std::int16_t>(dims.nz);
    for (int i = 4; i < 8; ++i) h.dim[i] = 1;
    h.datatype = datatype;
    h.bitpix = bitpix;
    h.pixdim[0] = 1.0f;
    h.pixdim[1] = static_cast<float>(spacing.sx);
    h.pixdim[2] = static_cast<float>(spacing.sy);
    h.pixdim[3] = static_cast<float>(spacing.sz);
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    h.xyzt_units = 2; // mm
    std::memcpy(h.magic, "n+1", 4);
    return h;
}

inline bool has_gz_suffix(const std::string& path) {
    return path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

inline void write_blob(const std::string& path, const void* header, const void* voxels,
                       std::size_t voxel_bytes) {
    static const char extender[4] = {0, 0, 0, 0};
    if (has_gz_suffix(path)) {
        gzFile f = gzopen(path.c_str(), "wb6");
        if (!f) throw io_error(concat("cannot open for writing: ", path));
        bool ok = gzwrite(f, header, sizeof(Header)) == static_cast<int>(sizeof(Header));
        ok = ok && gzwrite(f, extender, 4) == 4;
        ok = ok && (voxel_bytes == 0 ||
                    gzwrite(f, voxels, static_cast<unsigned>(voxel_bytes)) ==
                        static_cast<int>(voxel_bytes));
        ok = (gzclose(f) == Z_OK) && ok;
        if (!ok) throw io_error(concat("failed writing ", path));
    } else {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw io_error(concat("cannot open for writing: ", path));
        out.write(static_cast<const char*>(header), sizeof(Header));
        out.write(extender, 4);
        out.write(static_cast<const char*>(voxels), static_cast<std::streamsize>(voxel_bytes));
        out.close();
        if (!out) throw io_error(concat("failed writing ", path));
    }
}

} // namespace detail

inline void write_volume(const Volume3D& vol, const std::string& path) {
    const Header h = detail::make_header(vol.dims, vol.spacing, DT_FLOAT32, 32);
    detail::write_blob(path, &h, vol.data.data(), vol.data.size() * sizeof(float));
}

inline void write_labels(const LabelVolume& labels, const std::string& path) {
    validate_labels(labels);
    const Header h = detail::make_header(labels.dims, labels.spacing, DT_UINT8, 8);
    detail::write_blob(path, &h, labels.data.data(), labels.data.size());
}

} // namespace gliomkit::nifti
