#ifndef MUSEV_VOLUME_HPP
#define MUSEV_VOLUME_HPP

// Shared voxel-grid geometry and the three volume value types used across
// the pipeline: raw intensities, {0,1} masks, and [0,1] probability maps.
// Voxels are stored x-fastest (index = x + nx*(y + ny*z)).

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "musev/errors.hpp"

namespace musev {

struct VolumeGeometry {
    std::array<int, 3> dims{1, 1, 1};            // (nx, ny, nz)
    std::array<double, 3> spacing{1.0, 1.0, 1.0};  // millimeters
    std::array<double, 16> affine{                 // 4x4 voxel-to-world, row-major
        1, 0, 0, 0,
        0, 1, 0, 0,
        0, 0, 1, 0,
        0, 0, 0, 1};

    static VolumeGeometry diagonal(std::array<int, 3> dims, std::array<double, 3> spacing);

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }
    double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }

    // Throws InvalidGeometry when dims/spacing are out of range, the last
    // affine row is not (0,0,0,1), or the affine column norms disagree with
    // the spacing by more than relative 1e-3.
    void validate() const;

    bool operator==(const VolumeGeometry&) const = default;
};

inline std::size_t linear_index(const VolumeGeometry& g, int x, int y, int z) {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(g.dims[0]) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(g.dims[1]) * static_cast<std::size_t>(z));
}

// dims identical and spacing within the given relative tolerance
bool same_grid(const VolumeGeometry& a, const VolumeGeometry& b, double spacing_rel_tol = 1e-3);

struct ScalarVolume {
    VolumeGeometry geometry;
    std::vector<float> values;

    float at(int x, int y, int z) const { return values[linear_index(geometry, x, y, z)]; }
    float& at(int x, int y, int z) { return values[linear_index(geometry, x, y, z)]; }

    void validate() const;  // finite values, count == nx*ny*nz
};

struct BinaryMask {
    VolumeGeometry geometry;
    std::vector<std::uint8_t> labels;

    std::uint8_t at(int x, int y, int z) const { return labels[linear_index(geometry, x, y, z)]; }
    std::uint8_t& at(int x, int y, int z) { return labels[linear_index(geometry, x, y, z)]; }
    std::size_t foreground_count() const;

    void validate() const;  // labels in {0,1}, count == nx*ny*nz
};

struct ProbabilityVolume {
    VolumeGeometry geometry;
    std::vector<float> values;

    float at(int x, int y, int z) const { return values[linear_index(geometry, x, y, z)]; }
    float& at(int x, int y, int z) { return values[linear_index(geometry, x, y, z)]; }

    void validate() const;  // values in [0,1] and finite
};

// Strict conversions; throw Error when the value constraints do not hold.
BinaryMask mask_from_scalar(const ScalarVolume& v);
ProbabilityVolume probability_from_scalar(const ScalarVolume& v);
ScalarVolume scalar_from_mask(const BinaryMask& m);
ScalarVolume scalar_from_probability(const ProbabilityVolume& p);

}  // namespace musev

#endif
