#include <doctest.h>

#include <cstring>
#include <random>

#include "musev/nifti.hpp"
#include "musev/volume.hpp"
#include "test_support.hpp"

using namespace musev;
namespace mt = musev::test;

namespace {

void patch_f32(std::vector<std::uint8_t>& bytes, std::size_t off, float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    bytes[off] = u & 0xff;
    bytes[off + 1] = (u >> 8) & 0xff;
    bytes[off + 2] = (u >> 16) & 0xff;
    bytes[off + 3] = (u >> 24) & 0xff;
}

void patch_i16(std::vector<std::uint8_t>& bytes, std::size_t off, std::int16_t v) {
    bytes[off] = static_cast<std::uint8_t>(v & 0xff);
    bytes[off + 1] = static_cast<std::uint8_t>((v >> 8) & 0xff);
}

}  // namespace

TEST_CASE("geometry validation") {
    VolumeGeometry g = mt::grid(4, 4, 2, 1.0, 1.5, 3.0);
    CHECK_NOTHROW(g.validate());

    VolumeGeometry bad_dims = g;
    bad_dims.dims[1] = 0;
    CHECK_THROWS_AS(bad_dims.validate(), InvalidGeometry);

    VolumeGeometry bad_spacing = g;
    bad_spacing.spacing[0] = -1.0;
    CHECK_THROWS_AS(bad_spacing.validate(), InvalidGeometry);

    VolumeGeometry bad_row = g;
    bad_row.affine[15] = 2.0;
    CHECK_THROWS_AS(bad_row.validate(), InvalidGeometry);

    VolumeGeometry bad_norm = g;
    bad_norm.affine[0] = 1.5;  // column norm no longer matches spacing[0] = 1
    CHECK_THROWS_AS(bad_norm.validate(), InvalidGeometry);
}

TEST_CASE("float roundtrip is bit-exact") {
    std::mt19937 rng(7);
    for (int it = 0; it < 50; ++it) {
        std::uniform_int_distribution<int> dim(1, 9);
        std::uniform_real_distribution<float> sp(0.25f, 4.0f);
        ScalarVolume v = mt::random_scalar(rng, dim(rng), dim(rng), dim(rng));
        v.geometry = mt::grid(v.geometry.dims[0], v.geometry.dims[1], v.geometry.dims[2],
                              sp(rng), sp(rng), sp(rng));
        const ScalarVolume back = nifti::read(nifti::write(v, nifti::kDtypeFloat32));
        REQUIRE(back.geometry.dims == v.geometry.dims);
        REQUIRE(back.geometry.spacing == v.geometry.spacing);
        REQUIRE(back.geometry.affine == v.geometry.affine);
        REQUIRE(back.values.size() == v.values.size());
        for (std::size_t i = 0; i < v.values.size(); ++i) {
            REQUIRE(std::bit_cast<std::uint32_t>(back.values[i]) ==
                    std::bit_cast<std::uint32_t>(v.values[i]));
        }
    }
}

TEST_CASE("integer datatypes roundtrip value-exact") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> u8(0, 255);
    std::uniform_int_distribution<int> i16(-32768, 32767);
    ScalarVolume v;
    v.geometry = mt::grid(5, 3, 4);
    v.values.resize(v.geometry.voxel_count());

    for (float& x : v.values) x = static_cast<float>(u8(rng));
    CHECK(nifti::read(nifti::write(v, nifti::kDtypeUint8)).values == v.values);

    for (float& x : v.values) x = static_cast<float>(i16(rng));
    CHECK(nifti::read(nifti::write(v, nifti::kDtypeInt16)).values == v.values);
}

TEST_CASE("big-endian twin decodes identically") {
    std::mt19937 rng(13);
    for (int dtype : {nifti::kDtypeUint8, nifti::kDtypeInt16, nifti::kDtypeFloat32}) {
        ScalarVolume v;
        v.geometry = mt::grid(4, 5, 3, 0.5, 2.0, 1.25);
        v.values.resize(v.geometry.voxel_count());
        std::uniform_int_distribution<int> val(0, 200);
        for (float& x : v.values) x = static_cast<float>(val(rng));

        const std::vector<std::uint8_t> le = nifti::write(v, dtype);
        const std::vector<std::uint8_t> be = mt::to_big_endian_nifti(le, dtype);
        const ScalarVolume from_le = nifti::read(le);
        const ScalarVolume from_be = nifti::read(be);
        CHECK(from_le.values == from_be.values);
        CHECK(from_le.geometry.spacing == from_be.geometry.spacing);
        CHECK(from_le.geometry.affine == from_be.geometry.affine);
    }
}

TEST_CASE("scl slope and intercept are applied") {
    ScalarVolume v;
    v.geometry = mt::grid(2, 2, 1);
    v.values = {0.0f, 1.0f, 2.0f, 3.0f};
    std::vector<std::uint8_t> bytes = nifti::write(v, nifti::kDtypeUint8);
    patch_f32(bytes, 112, 2.0f);  // scl_slope
    patch_f32(bytes, 116, 1.0f);  // scl_inter
    const ScalarVolume back = nifti::read(bytes);
    CHECK(back.values == std::vector<float>{1.0f, 3.0f, 5.0f, 7.0f});
}

TEST_CASE("scl slope of zero is treated as one") {
    ScalarVolume v;
    v.geometry = mt::grid(2, 1, 1);
    v.values = {5.0f, 9.0f};
    std::vector<std::uint8_t> bytes = nifti::write(v, nifti::kDtypeUint8);
    patch_f32(bytes, 112, 0.0f);
    CHECK(nifti::read(bytes).values == v.values);
}

TEST_CASE("typed parse errors") {
    ScalarVolume v;
    v.geometry = mt::grid(2, 2, 2);
    v.values.assign(8, 1.0f);
    const std::vector<std::uint8_t> good = nifti::write(v, nifti::kDtypeFloat32);

    SUBCASE("bad magic") {
        std::vector<std::uint8_t> bytes = good;
        bytes[344] = 'x';
        CHECK_THROWS_AS(nifti::read(bytes), BadMagic);
    }
    SUBCASE("bad sizeof_hdr") {
        std::vector<std::uint8_t> bytes = good;
        bytes[0] = 0x11;
        bytes[1] = 0x22;
        CHECK_THROWS_AS(nifti::read(bytes), BadMagic);
    }
    SUBCASE("unsupported datatype") {
        std::vector<std::uint8_t> bytes = good;
        patch_i16(bytes, 70, 8);  // int32
        CHECK_THROWS_AS(nifti::read(bytes), UnsupportedDatatype);
    }
    SUBCASE("unsupported dim count") {
        std::vector<std::uint8_t> bytes = good;
        patch_i16(bytes, 40, 4);
        CHECK_THROWS_AS(nifti::read(bytes), UnsupportedDims);
    }
    SUBCASE("truncated data") {
        std::vector<std::uint8_t> bytes = good;
        bytes.resize(bytes.size() - 5);
        CHECK_THROWS_AS(nifti::read(bytes), Truncated);
    }
    SUBCASE("truncated header") {
        std::vector<std::uint8_t> bytes(100, 0);
        CHECK_THROWS_AS(nifti::read(bytes), Truncated);
    }
    SUBCASE("non-finite voxel") {
        std::vector<std::uint8_t> bytes = good;
        patch_f32(bytes, 352, std::numeric_limits<float>::quiet_NaN());
        CHECK_THROWS_AS(nifti::read(bytes), NonFinite);
    }
    SUBCASE("corrupt srow fails geometry validation") {
        std::vector<std::uint8_t> bytes = good;
        patch_f32(bytes, 280, 9.0f);  // srow_x[0] no longer matches pixdim[1]
        CHECK_THROWS_AS(nifti::read(bytes), InvalidGeometry);
    }
}

TEST_CASE("2D payloads decode with nz = 1") {
    ScalarVolume v;
    v.geometry = mt::grid(3, 4, 1);
    v.values.assign(12, 2.5f);
    std::vector<std::uint8_t> bytes = nifti::write(v, nifti::kDtypeFloat32);
    patch_i16(bytes, 40, 2);  // dim[0] = 2
    const ScalarVolume back = nifti::read(bytes);
    CHECK(back.geometry.dims == std::array<int, 3>{3, 4, 1});
    CHECK(back.values == v.values);
}

TEST_CASE("vox_offset beyond 352 skips padding") {
    ScalarVolume v;
    v.geometry = mt::grid(2, 1, 1);
    v.values = {4.0f, 8.0f};
    std::vector<std::uint8_t> bytes = nifti::write(v, nifti::kDtypeUint8);
    bytes.insert(bytes.begin() + 352, 16, 0xAB);
    patch_f32(bytes, 108, 368.0f);
    CHECK(nifti::read(bytes).values == v.values);
}

TEST_CASE("writer errors") {
    ScalarVolume v;
    v.geometry = mt::grid(1, 1, 1);
    v.values = {300.0f};
    CHECK_THROWS_AS(nifti::write(v, nifti::kDtypeUint8), RangeOverflow);
    v.values = {-1.0f};
    CHECK_THROWS_AS(nifti::write(v, nifti::kDtypeUint8), RangeOverflow);
    v.values = {40000.0f};
    CHECK_THROWS_AS(nifti::write(v, nifti::kDtypeInt16), RangeOverflow);
    v.values = {1.0f};
    CHECK_THROWS_AS(nifti::write(v, 64), InvalidDtype);
}

TEST_CASE("all-zero mask payload layout") {
    BinaryMask m;
    m.geometry = mt::grid(3, 2, 2);
    m.labels.assign(12, 0);
    const std::vector<std::uint8_t> bytes = nifti::write(m);
    REQUIRE(bytes.size() == 352 + 12);
    for (std::size_t i = 352; i < bytes.size(); ++i) CHECK(bytes[i] == 0);
}

TEST_CASE("mask and probability conversions are strict") {
    ScalarVolume v;
    v.geometry = mt::grid(2, 1, 1);
    v.values = {0.0f, 1.0f};
    CHECK_NOTHROW(mask_from_scalar(v));
    v.values = {0.0f, 0.5f};
    CHECK_THROWS_AS(mask_from_scalar(v), Error);
    CHECK_NOTHROW(probability_from_scalar(v));
    v.values = {0.0f, 1.5f};
    CHECK_THROWS_AS(probability_from_scalar(v), Error);
}
