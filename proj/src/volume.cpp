#include "musev/volume.hpp"

#include <cmath>
#include <string>

namespace musev {

VolumeGeometry VolumeGeometry::diagonal(std::array<int, 3> dims, std::array<double, 3> spacing) {
    VolumeGeometry g;
    g.dims = dims;
    g.spacing = spacing;
    g.affine = {spacing[0], 0, 0, 0,
                0, spacing[1], 0, 0,
                0, 0, spacing[2], 0,
                0, 0, 0, 1};
    return g;
}

void VolumeGeometry::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < 1)
            throw InvalidGeometry("dims must be >= 1 per axis, got " + std::to_string(dims[a]) +
                                  " on axis " + std::to_string(a));
        if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
            throw InvalidGeometry("spacing must be positive and finite on axis " + std::to_string(a));
    }
    const double last[4] = {affine[12], affine[13], affine[14], affine[15]};
    if (last[0] != 0.0 || last[1] != 0.0 || last[2] != 0.0 || last[3] != 1.0)
        throw InvalidGeometry("last affine row must be (0, 0, 0, 1)");
    for (int c = 0; c < 3; ++c) {
        double norm = 0.0;
        for (int r = 0; r < 3; ++r) norm += affine[4 * r + c] * affine[4 * r + c];
        norm = std::sqrt(norm);
        if (std::abs(norm - spacing[c]) > 1e-3 * spacing[c])
            throw InvalidGeometry("affine column " + std::to_string(c) +
                                  " norm disagrees with spacing");
    }
}

bool same_grid(const VolumeGeometry& a, const VolumeGeometry& b, double spacing_rel_tol) {
    if (a.dims != b.dims) return false;
    for (int i = 0; i < 3; ++i) {
        double ref = std::max(std::abs(a.spacing[i]), std::abs(b.spacing[i]));
        if (std::abs(a.spacing[i] - b.spacing[i]) > spacing_rel_tol * ref) return false;
    }
    return true;
}

void ScalarVolume::validate() const {
    geometry.validate();
    if (values.size() != geometry.voxel_count())
        throw Error("scalar volume voxel count does not match geometry");
    for (float v : values)
        if (!std::isfinite(v)) throw NonFinite("scalar volume contains a non-finite value");
}

std::size_t BinaryMask::foreground_count() const {
    std::size_t n = 0;
    for (std::uint8_t l : labels) n += l;
    return n;
}

void BinaryMask::validate() const {
    geometry.validate();
    if (labels.size() != geometry.voxel_count())
        throw Error("mask voxel count does not match geometry");
    for (std::uint8_t l : labels)
        if (l > 1) throw Error("mask label outside {0, 1}");
}

void ProbabilityVolume::validate() const {
    geometry.validate();
    if (values.size() != geometry.voxel_count())
        throw Error("probability volume voxel count does not match geometry");
    for (float v : values)
        if (!(v >= 0.0f && v <= 1.0f)) throw Error("probability value outside [0, 1]");
}

BinaryMask mask_from_scalar(const ScalarVolume& v) {
    BinaryMask m;
    m.geometry = v.geometry;
    m.labels.resize(v.values.size());
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        if (v.values[i] == 0.0f)
            m.labels[i] = 0;
        else if (v.values[i] == 1.0f)
            m.labels[i] = 1;
        else
            throw Error("volume is not a binary mask: value " + std::to_string(v.values[i]));
    }
    return m;
}

ProbabilityVolume probability_from_scalar(const ScalarVolume& v) {
    ProbabilityVolume p;
    p.geometry = v.geometry;
    p.values = v.values;
    p.validate();
    return p;
}

ScalarVolume scalar_from_mask(const BinaryMask& m) {
    ScalarVolume v;
    v.geometry = m.geometry;
    v.values.assign(m.labels.begin(), m.labels.end());
    return v;
}

ScalarVolume scalar_from_probability(const ProbabilityVolume& p) {
    ScalarVolume v;
    v.geometry = p.geometry;
    v.values = p.values;
    return v;
}

}  // namespace musev
