#ifndef MUSEV_TEST_SUPPORT_HPP
#define MUSEV_TEST_SUPPORT_HPP

// Shared helpers for the test suites: random volume generators, an
// independent brute-force scorer, an independent Wilcoxon enumeration
// oracle, and a byte-swapper that forges big-endian NIFTI twins. The
// oracles are deliberately written without reusing library internals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "musev/volume.hpp"

namespace musev::test {

inline VolumeGeometry grid(int nx, int ny, int nz, double sx = 1.0, double sy = 1.0,
                           double sz = 1.0) {
    return VolumeGeometry::diagonal({nx, ny, nz}, {sx, sy, sz});
}

inline ScalarVolume random_scalar(std::mt19937& rng, int nx, int ny, int nz, float lo = -100.0f,
                                  float hi = 100.0f) {
    ScalarVolume v;
    v.geometry = grid(nx, ny, nz);
    v.values.resize(v.geometry.voxel_count());
    std::uniform_real_distribution<float> dist(lo, hi);
    for (float& x : v.values) x = dist(rng);
    return v;
}

inline BinaryMask random_mask(std::mt19937& rng, int nx, int ny, int nz, double p = 0.5) {
    BinaryMask m;
    m.geometry = grid(nx, ny, nz);
    m.labels.resize(m.geometry.voxel_count());
    std::bernoulli_distribution dist(p);
    for (auto& l : m.labels) l = dist(rng) ? 1 : 0;
    return m;
}

// ---- independent per-voxel scorer -------------------------------------

struct BruteCounts {
    long long tp{0}, fp{0}, fn{0}, tn{0};
};

inline BruteCounts brute_force_counts(const BinaryMask& pred, const BinaryMask& gt) {
    BruteCounts c;
    const auto& d = gt.geometry.dims;
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const int p = pred.at(x, y, z);
                const int g = gt.at(x, y, z);
                if (p == 1 && g == 1) c.tp++;
                if (p == 1 && g == 0) c.fp++;
                if (p == 0 && g == 1) c.fn++;
                if (p == 0 && g == 0) c.tn++;
            }
    return c;
}

inline double brute_force_dice(const BruteCounts& c) {
    const double denom = 2.0 * c.tp + c.fp + c.fn;
    return denom == 0.0 ? 1.0 : 2.0 * c.tp / denom;
}

inline double dice_between(const BinaryMask& a, const BinaryMask& b) {
    return brute_force_dice(brute_force_counts(a, b));
}

// ---- independent Wilcoxon oracle ---------------------------------------

// Mid-ranks by explicit pairwise counting: rank = 1 + #smaller + #equal/2.
inline std::vector<double> oracle_midranks(const std::vector<double>& abs_vals) {
    const std::size_t m = abs_vals.size();
    std::vector<double> ranks(m);
    for (std::size_t i = 0; i < m; ++i) {
        int smaller = 0, equal = 0;
        for (std::size_t j = 0; j < m; ++j) {
            if (abs_vals[j] < abs_vals[i]) ++smaller;
            if (abs_vals[j] == abs_vals[i]) ++equal;
        }
        ranks[i] = smaller + (equal + 1) / 2.0;
    }
    return ranks;
}

struct OracleTails {
    double w_plus{0.0};
    double p_greater{1.0}, p_less{1.0}, p_two_sided{1.0};
};

// Full enumeration of all 2^m sign vectors with per-mask rank sums.
inline OracleTails wilcoxon_oracle(const std::vector<double>& diffs) {
    std::vector<double> kept;
    for (double d : diffs)
        if (d != 0.0) kept.push_back(d);
    const std::size_t m = kept.size();
    std::vector<double> abs_vals(m);
    for (std::size_t i = 0; i < m; ++i) abs_vals[i] = std::fabs(kept[i]);
    const std::vector<double> ranks = oracle_midranks(abs_vals);

    OracleTails res;
    for (std::size_t i = 0; i < m; ++i)
        if (kept[i] > 0.0) res.w_plus += ranks[i];

    const std::uint64_t total = 1ULL << m;
    std::uint64_t ge = 0, le = 0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            if (mask & (1ULL << i)) w += ranks[i];
        if (w >= res.w_plus - 1e-12) ++ge;
        if (w <= res.w_plus + 1e-12) ++le;
    }
    res.p_greater = static_cast<double>(ge) / static_cast<double>(total);
    res.p_less = static_cast<double>(le) / static_cast<double>(total);
    res.p_two_sided = std::min(1.0, 2.0 * std::min(res.p_greater, res.p_less));
    return res;
}

// ---- big-endian NIFTI forgery -------------------------------------------

inline std::vector<std::uint8_t> to_big_endian_nifti(std::vector<std::uint8_t> bytes, int dtype) {
    auto swap = [&](std::size_t off, std::size_t size, std::size_t count) {
        for (std::size_t k = 0; k < count; ++k)
            std::reverse(bytes.begin() + off + k * size, bytes.begin() + off + (k + 1) * size);
    };
    swap(0, 4, 1);      // sizeof_hdr
    swap(32, 4, 1);     // extents
    swap(36, 2, 1);     // session_error
    swap(40, 2, 8);     // dim
    swap(56, 4, 3);     // intent_p1..p3
    swap(68, 2, 3);     // intent_code, datatype, bitpix
    swap(74, 2, 1);     // slice_start
    swap(76, 4, 8);     // pixdim
    swap(108, 4, 3);    // vox_offset, scl_slope, scl_inter
    swap(120, 2, 1);    // slice_end
    swap(124, 4, 4);    // cal_max, cal_min, slice_duration, toffset
    swap(140, 4, 2);    // glmax, glmin
    swap(252, 2, 2);    // qform_code, sform_code
    swap(256, 4, 6);    // quatern_b..qoffset_z
    swap(280, 4, 12);   // srow_x/y/z
    const std::size_t esize = dtype == 2 ? 1 : dtype == 4 ? 2 : 4;
    if (esize > 1)
        for (std::size_t p = 352; p + esize <= bytes.size(); p += esize)
            std::reverse(bytes.begin() + p, bytes.begin() + p + esize);
    return bytes;
}

}  // namespace musev::test

#endif
