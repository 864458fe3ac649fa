#ifndef MUSEV_NIFTI_HPP
#define MUSEV_NIFTI_HPP

// Strict single-file NIFTI-1 (.nii) codec for the datatypes this pipeline
// needs: uint8 (2), int16 (4), float32 (16). No .hdr/.img pairs, no NIFTI-2,
// no compression. The writer always emits little-endian; the reader accepts
// either byte order, detected from sizeof_hdr.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "musev/volume.hpp"

namespace musev::nifti {

inline constexpr int kDtypeUint8 = 2;
inline constexpr int kDtypeInt16 = 4;
inline constexpr int kDtypeFloat32 = 16;

// Decodes a complete in-memory .nii payload. scl_slope/scl_inter are applied
// (slope 0 treated as 1); spacing comes from pixdim[1..3]; the affine comes
// from the srow fields when sform_code > 0, otherwise it is diagonal from
// spacing. dim[0] == 2 is accepted and treated as nz = 1.
ScalarVolume read(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> write(const ScalarVolume& v, int dtype);
std::vector<std::uint8_t> write(const BinaryMask& m, int dtype = kDtypeUint8);
std::vector<std::uint8_t> write(const ProbabilityVolume& p, int dtype = kDtypeFloat32);

ScalarVolume read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const ScalarVolume& v, int dtype);
void write_file(const std::filesystem::path& path, const BinaryMask& m);
void write_file(const std::filesystem::path& path, const ProbabilityVolume& p);

}  // namespace musev::nifti

#endif
