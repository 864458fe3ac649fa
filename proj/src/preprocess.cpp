#include "musev/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace musev {
namespace {

int axis_index(SliceAxis axis) {
    switch (axis) {
        case SliceAxis::first: return 0;
        case SliceAxis::second: return 1;
        default: return 2;
    }
}

// Voxel coordinate for (slice index k, row r, col c) along the given axis.
// The in-plane column maps to the faster-varying remaining voxel axis.
void plane_to_voxel(SliceAxis axis, int k, int r, int c, int& x, int& y, int& z) {
    switch (axis) {
        case SliceAxis::first: x = k; y = c; z = r; break;
        case SliceAxis::second: x = c; y = k; z = r; break;
        default: x = c; y = r; z = k; break;
    }
}

struct AxisMap {
    std::vector<int> lo, hi;
    std::vector<double> frac;
};

AxisMap build_axis_map(int in, int out) {
    AxisMap m;
    m.lo.resize(out);
    m.hi.resize(out);
    m.frac.resize(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (int d = 0; d < out; ++d) {
        double s = (d + 0.5) * scale - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(in - 1));
        const int lo = static_cast<int>(std::floor(s));
        m.lo[d] = lo;
        m.hi[d] = std::min(lo + 1, in - 1);
        m.frac[d] = s - lo;
    }
    return m;
}

int nearest_index(double s, int in) {
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    // round half down: 0.5 goes to index 0
    return static_cast<int>(std::ceil(s - 0.5));
}

}  // namespace

std::pair<int, int> slice_plane_dims(const VolumeGeometry& g, SliceAxis axis) {
    switch (axis) {
        case SliceAxis::first: return {g.dims[2], g.dims[1]};
        case SliceAxis::second: return {g.dims[2], g.dims[0]};
        default: return {g.dims[1], g.dims[0]};
    }
}

std::vector<Slice2D> extract_slices(const ScalarVolume& volume, SliceAxis axis,
                                    std::string_view volume_id) {
    const auto [h, w] = slice_plane_dims(volume.geometry, axis);
    const int n = volume.geometry.dims[axis_index(axis)];
    std::vector<Slice2D> slices;
    slices.reserve(n);
    for (int k = 0; k < n; ++k) {
        Slice2D s;
        s.height = h;
        s.width = w;
        s.values.resize(static_cast<std::size_t>(h) * w);
        s.provenance = {std::string(volume_id), axis, k};
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                int x, y, z;
                plane_to_voxel(axis, k, r, c, x, y, z);
                s.at(r, c) = volume.at(x, y, z);
            }
        slices.push_back(std::move(s));
    }
    return slices;
}

ScalarVolume stack_slices(const std::vector<Slice2D>& slices, const VolumeGeometry& geometry,
                          SliceAxis axis) {
    const auto [h, w] = slice_plane_dims(geometry, axis);
    const int n = geometry.dims[axis_index(axis)];
    if (static_cast<int>(slices.size()) != n)
        throw SliceCountMismatch("expected " + std::to_string(n) + " slices, got " +
                                 std::to_string(slices.size()));
    ScalarVolume v;
    v.geometry = geometry;
    v.values.resize(geometry.voxel_count());
    for (int k = 0; k < n; ++k) {
        const Slice2D& s = slices[k];
        if (s.height != h || s.width != w)
            throw SliceCountMismatch("slice " + std::to_string(k) + " plane dims do not match geometry");
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                int x, y, z;
                plane_to_voxel(axis, k, r, c, x, y, z);
                v.at(x, y, z) = s.at(r, c);
            }
    }
    return v;
}

Slice2D minmax_normalize(const Slice2D& slice) {
    Slice2D out = slice;
    if (slice.values.empty()) return out;
    float lo = slice.values[0], hi = slice.values[0];
    for (float v : slice.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo == hi) {
        std::fill(out.values.begin(), out.values.end(), 0.0f);
        return out;
    }
    const double range = static_cast<double>(hi) - static_cast<double>(lo);
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = static_cast<float>(
            (static_cast<double>(slice.values[i]) - static_cast<double>(lo)) / range * 255.0);
    return out;
}

Slice2D resize(const Slice2D& slice, int out_h, int out_w, ResizeMode mode) {
    if (out_h < 1 || out_w < 1)
        throw InvalidSize("resize target must be at least 1x1");
    if (out_h == slice.height && out_w == slice.width) return slice;

    Slice2D out;
    out.height = out_h;
    out.width = out_w;
    out.values.resize(static_cast<std::size_t>(out_h) * out_w);
    out.provenance = slice.provenance;

    if (mode == ResizeMode::bilinear) {
        const AxisMap rows = build_axis_map(slice.height, out_h);
        const AxisMap cols = build_axis_map(slice.width, out_w);
        for (int r = 0; r < out_h; ++r) {
            const double fr = rows.frac[r];
            for (int c = 0; c < out_w; ++c) {
                const double fc = cols.frac[c];
                const double top = (1.0 - fc) * slice.at(rows.lo[r], cols.lo[c]) +
                                   fc * slice.at(rows.lo[r], cols.hi[c]);
                const double bot = (1.0 - fc) * slice.at(rows.hi[r], cols.lo[c]) +
                                   fc * slice.at(rows.hi[r], cols.hi[c]);
                out.at(r, c) = static_cast<float>((1.0 - fr) * top + fr * bot);
            }
        }
    } else {
        const double rscale = static_cast<double>(slice.height) / out_h;
        const double cscale = static_cast<double>(slice.width) / out_w;
        for (int r = 0; r < out_h; ++r) {
            const int sr = nearest_index((r + 0.5) * rscale - 0.5, slice.height);
            for (int c = 0; c < out_w; ++c) {
                const int sc = nearest_index((c + 0.5) * cscale - 0.5, slice.width);
                out.at(r, c) = slice.at(sr, sc);
            }
        }
    }
    return out;
}

std::vector<Slice2D> to_model_space(const ScalarVolume& volume, SliceAxis axis,
                                    std::string_view volume_id, int model_size) {
    std::vector<Slice2D> out = extract_slices(volume, axis, volume_id);
    for (Slice2D& s : out) {
        const SliceProvenance prov = s.provenance;
        s = resize(minmax_normalize(s), model_size, model_size, ResizeMode::bilinear);
        s.provenance = prov;
    }
    return out;
}

ProbabilityVolume from_model_space(const std::vector<Slice2D>& pred_slices,
                                   const VolumeGeometry& target_geometry, SliceAxis axis) {
    const int n = target_geometry.dims[axis_index(axis)];
    if (static_cast<int>(pred_slices.size()) != n)
        throw SliceCountMismatch("expected " + std::to_string(n) + " prediction slices, got " +
                                 std::to_string(pred_slices.size()));
    const auto [h, w] = slice_plane_dims(target_geometry, axis);
    std::vector<Slice2D> native;
    native.reserve(pred_slices.size());
    for (const Slice2D& s : pred_slices) native.push_back(resize(s, h, w, ResizeMode::bilinear));

    ScalarVolume stacked = stack_slices(native, target_geometry, axis);
    ProbabilityVolume out;
    out.geometry = target_geometry;
    out.values.resize(stacked.values.size());
    for (std::size_t i = 0; i < stacked.values.size(); ++i)
        out.values[i] = std::clamp(stacked.values[i], 0.0f, 1.0f);
    return out;
}

}  // namespace musev
