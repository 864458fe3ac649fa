#ifndef MUSEV_PHANTOM_HPP
#define MUSEV_PHANTOM_HPP

// Deterministic synthetic cohort generation: procedural MRI-like volumes
// with analytic ground-truth muscle masks, simulated model probability maps,
// and a classical intensity-band segmenter for end-to-end runs.

#include <array>
#include <cstdint>

#include "musev/curation.hpp"
#include "musev/volume.hpp"

namespace musev {

enum class ContrastProfile { t1_like, t2fs_like };

std::string to_string(ContrastProfile p);
ContrastProfile contrast_profile_from_string(std::string_view s);

struct PhantomConfig {
    std::array<int, 3> dims{64, 64, 64};          // >= 16 per axis
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    int n_muscle_lobes{3};
    double noise_sigma{0.05};                     // fraction of dynamic range, in [0, 0.5]
    ContrastProfile profile{ContrastProfile::t1_like};
    std::uint64_t seed{0};
};

// Axis-aligned ellipsoid in voxel coordinates.
struct Ellipsoid {
    std::array<double, 3> center;
    std::array<double, 3> semi_axes;
    double volume_voxels() const;  // 4/3 * pi * a * b * c
};

// Analytic muscle compartments for a config; the ground-truth mask is the
// union of these (voxel centers inside the surfaces).
std::vector<Ellipsoid> muscle_lobes(const PhantomConfig& config);

struct PhantomCase {
    ScalarVolume volume;
    BinaryMask mask;
    SeriesMetadata metadata;
};

PhantomCase generate_phantom(const PhantomConfig& config);

// Corrupts a ground-truth mask into a model-like probability map:
// blur_iters passes of 3x3x3 box smoothing, then voxelwise Gaussian noise
// of the given sigma, clamped to [0, 1]. Deterministic per seed.
ProbabilityVolume simulate_probability_map(const BinaryMask& gt, int blur_iters,
                                           double noise_sigma, std::uint64_t seed);

// Classical reference segmenter: per-slice min-max normalization followed by
// a logistic intensity-band membership around the profile's muscle band.
ProbabilityVolume reference_segment(const ScalarVolume& volume, ContrastProfile profile);

}  // namespace musev

#endif
