#ifndef MUSEV_PREPROCESS_HPP
#define MUSEV_PREPROCESS_HPP

// Slice extraction, per-slice min-max normalization to [0,255], resize with
// pixel-center alignment, and back-projection of model-space predictions
// into the native volume grid.

#include <string>
#include <string_view>
#include <vector>

#include "musev/volume.hpp"

namespace musev {

enum class SliceAxis { first, second, third };

struct SliceProvenance {
    std::string volume_id;
    SliceAxis axis{SliceAxis::third};
    int index{0};
};

struct Slice2D {
    int height{0};
    int width{0};
    std::vector<float> values;  // row-major
    SliceProvenance provenance;

    float at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
    float& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
};

enum class ResizeMode { bilinear, nearest };

// In-plane (height, width) of a slice taken along the given axis.
std::pair<int, int> slice_plane_dims(const VolumeGeometry& geometry, SliceAxis axis);

// Returns dims[axis] slices in ascending index order; stacking them along
// the axis reproduces the volume exactly.
std::vector<Slice2D> extract_slices(const ScalarVolume& volume, SliceAxis axis = SliceAxis::third,
                                    std::string_view volume_id = {});

// Inverse of extract_slices; slices must match the geometry's plane dims.
ScalarVolume stack_slices(const std::vector<Slice2D>& slices, const VolumeGeometry& geometry,
                          SliceAxis axis = SliceAxis::third);

// v' = (v - min) / (max - min) * 255; constant slices map to all zeros.
Slice2D minmax_normalize(const Slice2D& slice);

// Pixel-center alignment: src = (dst + 0.5) * (in / out) - 0.5, clamped to
// [0, in - 1] per axis. Nearest mode rounds halves toward the smaller index.
Slice2D resize(const Slice2D& slice, int out_h, int out_w, ResizeMode mode);

// extract_slices -> per-slice minmax_normalize -> bilinear resize to
// model_size x model_size. Slices keep provenance for back-projection.
std::vector<Slice2D> to_model_space(const ScalarVolume& volume, SliceAxis axis = SliceAxis::third,
                                    std::string_view volume_id = {}, int model_size = 1024);

// Bilinearly resizes each prediction slice (values in [0,1]) back to the
// target in-plane dims and restacks along the axis.
ProbabilityVolume from_model_space(const std::vector<Slice2D>& pred_slices,
                                   const VolumeGeometry& target_geometry,
                                   SliceAxis axis = SliceAxis::third);

}  // namespace musev

#endif
