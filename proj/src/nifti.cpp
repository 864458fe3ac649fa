#include "musev/nifti.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace musev::nifti {
namespace {

// NIFTI-1 header field offsets (348-byte header).
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;       // short dim[8]
constexpr std::size_t kOffDatatype = 70;  // short
constexpr std::size_t kOffBitpix = 72;    // short
constexpr std::size_t kOffPixdim = 76;    // float pixdim[8]
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffSrowX = 280;  // float[4] each
constexpr std::size_t kOffSrowY = 296;
constexpr std::size_t kOffSrowZ = 312;
constexpr std::size_t kOffMagic = 344;
constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kVoxOffset = 352;

std::uint16_t load_u16(const std::uint8_t* p, bool big_endian) {
    if (big_endian) return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t load_u32(const std::uint8_t* p, bool big_endian) {
    if (big_endian)
        return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
               (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

std::int16_t load_i16(const std::uint8_t* p, bool be) { return std::bit_cast<std::int16_t>(load_u16(p, be)); }
std::int32_t load_i32(const std::uint8_t* p, bool be) { return std::bit_cast<std::int32_t>(load_u32(p, be)); }
float load_f32(const std::uint8_t* p, bool be) { return std::bit_cast<float>(load_u32(p, be)); }

void store_u16(std::uint8_t* p, std::uint16_t v) {
    p[0] = static_cast<std::uint8_t>(v & 0xff);
    p[1] = static_cast<std::uint8_t>(v >> 8);
}

void store_u32(std::uint8_t* p, std::uint32_t v) {
    p[0] = static_cast<std::uint8_t>(v & 0xff);
    p[1] = static_cast<std::uint8_t>((v >> 8) & 0xff);
    p[2] = static_cast<std::uint8_t>((v >> 16) & 0xff);
    p[3] = static_cast<std::uint8_t>((v >> 24) & 0xff);
}

void store_i16(std::uint8_t* p, std::int16_t v) { store_u16(p, std::bit_cast<std::uint16_t>(v)); }
void store_i32(std::uint8_t* p, std::int32_t v) { store_u32(p, std::bit_cast<std::uint32_t>(v)); }
void store_f32(std::uint8_t* p, float v) { store_u32(p, std::bit_cast<std::uint32_t>(v)); }

int dtype_byte_size(int dtype) {
    switch (dtype) {
        case kDtypeUint8: return 1;
        case kDtypeInt16: return 2;
        case kDtypeFloat32: return 4;
        default: return 0;
    }
}

std::vector<std::uint8_t> write_impl(const VolumeGeometry& geo, std::span<const float> values,
                                     int dtype) {
    const int bsize = dtype_byte_size(dtype);
    if (bsize == 0) throw InvalidDtype("unsupported output datatype code " + std::to_string(dtype));
    geo.validate();
    for (int a = 0; a < 3; ++a)
        if (geo.dims[a] > 32767)
            throw Error("dim " + std::to_string(geo.dims[a]) + " does not fit the NIFTI-1 header");

    std::vector<std::uint8_t> out(kVoxOffset + values.size() * static_cast<std::size_t>(bsize), 0);
    std::uint8_t* h = out.data();

    store_i32(h + kOffSizeofHdr, 348);
    store_i16(h + kOffDim, 3);
    for (int a = 0; a < 3; ++a) store_i16(h + kOffDim + 2 * (a + 1), static_cast<std::int16_t>(geo.dims[a]));
    for (int a = 4; a < 8; ++a) store_i16(h + kOffDim + 2 * a, 1);
    store_i16(h + kOffDatatype, static_cast<std::int16_t>(dtype));
    store_i16(h + kOffBitpix, static_cast<std::int16_t>(8 * bsize));
    store_f32(h + kOffPixdim, 1.0f);  // qfac
    for (int a = 0; a < 3; ++a)
        store_f32(h + kOffPixdim + 4 * (a + 1), static_cast<float>(geo.spacing[a]));
    store_f32(h + kOffVoxOffset, static_cast<float>(kVoxOffset));
    store_f32(h + kOffSclSlope, 1.0f);
    store_f32(h + kOffSclInter, 0.0f);
    h[kOffXyztUnits] = 2;  // NIFTI_UNITS_MM
    store_i16(h + kOffQformCode, 0);
    store_i16(h + kOffSformCode, 1);
    const std::size_t srow_off[3] = {kOffSrowX, kOffSrowY, kOffSrowZ};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c)
            store_f32(h + srow_off[r] + 4 * c, static_cast<float>(geo.affine[4 * r + c]));
    h[kOffMagic + 0] = 'n';
    h[kOffMagic + 1] = '+';
    h[kOffMagic + 2] = '1';
    h[kOffMagic + 3] = 0;

    std::uint8_t* d = out.data() + kVoxOffset;
    switch (dtype) {
        case kDtypeUint8:
            for (std::size_t i = 0; i < values.size(); ++i) {
                const long long q = std::llround(static_cast<double>(values[i]));
                if (q < 0 || q > 255)
                    throw RangeOverflow("value " + std::to_string(values[i]) +
                                        " does not fit unsigned 8-bit output");
                d[i] = static_cast<std::uint8_t>(q);
            }
            break;
        case kDtypeInt16:
            for (std::size_t i = 0; i < values.size(); ++i) {
                const long long q = std::llround(static_cast<double>(values[i]));
                if (q < -32768 || q > 32767)
                    throw RangeOverflow("value " + std::to_string(values[i]) +
                                        " does not fit signed 16-bit output");
                store_i16(d + 2 * i, static_cast<std::int16_t>(q));
            }
            break;
        case kDtypeFloat32:
            for (std::size_t i = 0; i < values.size(); ++i) store_f32(d + 4 * i, values[i]);
            break;
    }
    return out;
}

}  // namespace

ScalarVolume read(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize)
        throw Truncated("payload smaller than the 348-byte NIFTI-1 header");
    const std::uint8_t* h = bytes.data();

    if (!(h[kOffMagic] == 'n' && h[kOffMagic + 1] == '+' && h[kOffMagic + 2] == '1' &&
          h[kOffMagic + 3] == 0))
        throw BadMagic("magic is not \"n+1\\0\"");

    bool big_endian;
    if (load_i32(h + kOffSizeofHdr, false) == 348)
        big_endian = false;
    else if (load_i32(h + kOffSizeofHdr, true) == 348)
        big_endian = true;
    else
        throw BadMagic("sizeof_hdr does not decode to 348 in either byte order");

    const int ndim = load_i16(h + kOffDim, big_endian);
    if (ndim < 2 || ndim > 3)
        throw UnsupportedDims("dim[0] = " + std::to_string(ndim) + "; only 2D and 3D supported");
    int dims[3] = {load_i16(h + kOffDim + 2, big_endian), load_i16(h + kOffDim + 4, big_endian),
                   ndim == 3 ? load_i16(h + kOffDim + 6, big_endian) : 1};
    for (int a = 0; a < 3; ++a)
        if (dims[a] < 1)
            throw UnsupportedDims("dim[" + std::to_string(a + 1) + "] = " + std::to_string(dims[a]));

    const int dtype = load_i16(h + kOffDatatype, big_endian);
    const int bsize = dtype_byte_size(dtype);
    if (bsize == 0)
        throw UnsupportedDatatype("datatype code " + std::to_string(dtype) +
                                  "; supported codes are 2, 4, 16");

    const float vox_offset_f = load_f32(h + kOffVoxOffset, big_endian);
    if (!std::isfinite(vox_offset_f) || vox_offset_f < static_cast<float>(kHeaderSize))
        throw BadMagic("vox_offset " + std::to_string(vox_offset_f) +
                       " is not a valid single-file offset");
    const std::size_t data_offset = static_cast<std::size_t>(std::llround(vox_offset_f));

    VolumeGeometry geo;
    geo.dims = {dims[0], dims[1], dims[2]};
    for (int a = 0; a < 3; ++a) {
        const float pd = load_f32(h + kOffPixdim + 4 * (a + 1), big_endian);
        geo.spacing[a] = (std::isfinite(pd) && pd > 0.0f) ? static_cast<double>(pd) : 1.0;
    }
    const int sform_code = load_i16(h + kOffSformCode, big_endian);
    if (sform_code > 0) {
        const std::size_t srow_off[3] = {kOffSrowX, kOffSrowY, kOffSrowZ};
        geo.affine = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c)
                geo.affine[4 * r + c] = static_cast<double>(load_f32(h + srow_off[r] + 4 * c, big_endian));
    } else {
        geo = VolumeGeometry::diagonal(geo.dims, geo.spacing);
    }
    geo.validate();

    const std::size_t count = geo.voxel_count();
    if (bytes.size() < data_offset + count * static_cast<std::size_t>(bsize))
        throw Truncated("data section holds fewer bytes than dims and datatype imply");

    float slope = load_f32(h + kOffSclSlope, big_endian);
    float inter = load_f32(h + kOffSclInter, big_endian);
    if (slope == 0.0f) slope = 1.0f;

    ScalarVolume v;
    v.geometry = geo;
    v.values.resize(count);
    const std::uint8_t* d = bytes.data() + data_offset;
    for (std::size_t i = 0; i < count; ++i) {
        double raw;
        switch (dtype) {
            case kDtypeUint8: raw = d[i]; break;
            case kDtypeInt16: raw = load_i16(d + 2 * i, big_endian); break;
            default: raw = load_f32(d + 4 * i, big_endian); break;
        }
        const double scaled = raw * static_cast<double>(slope) + static_cast<double>(inter);
        if (!std::isfinite(scaled))
            throw NonFinite("decoded voxel " + std::to_string(i) + " is not finite");
        v.values[i] = static_cast<float>(scaled);
    }
    return v;
}

std::vector<std::uint8_t> write(const ScalarVolume& v, int dtype) {
    v.validate();
    return write_impl(v.geometry, v.values, dtype);
}

std::vector<std::uint8_t> write(const BinaryMask& m, int dtype) {
    m.validate();
    std::vector<float> vals(m.labels.begin(), m.labels.end());
    return write_impl(m.geometry, vals, dtype);
}

std::vector<std::uint8_t> write(const ProbabilityVolume& p, int dtype) {
    p.validate();
    return write_impl(p.geometry, p.values, dtype);
}

ScalarVolume read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return read(bytes);
}

namespace {
void dump(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + path.string());
}
}  // namespace

void write_file(const std::filesystem::path& path, const ScalarVolume& v, int dtype) {
    dump(path, write(v, dtype));
}
void write_file(const std::filesystem::path& path, const BinaryMask& m) { dump(path, write(m)); }
void write_file(const std::filesystem::path& path, const ProbabilityVolume& p) { dump(path, write(p)); }

}  // namespace musev::nifti
