#include "musev/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "musev/preprocess.hpp"
#include "musev/rng.hpp"

namespace musev {

std::string to_string(ContrastProfile p) {
    return p == ContrastProfile::t1_like ? "t1-like" : "t2fs-like";
}

ContrastProfile contrast_profile_from_string(std::string_view s) {
    if (s == "t1-like" || s == "t1") return ContrastProfile::t1_like;
    if (s == "t2fs-like" || s == "t2fs" || s == "t2-fs") return ContrastProfile::t2fs_like;
    throw InvalidConfig("unknown contrast profile: " + std::string(s));
}

double Ellipsoid::volume_voxels() const {
    return 4.0 / 3.0 * std::numbers::pi * semi_axes[0] * semi_axes[1] * semi_axes[2];
}

namespace {

// rng stream ids, one per independent draw family
constexpr std::uint64_t kStreamLobes = 1;
constexpr std::uint64_t kStreamNoise = 2;
constexpr std::uint64_t kStreamMeta = 3;
constexpr std::uint64_t kStreamSimNoise = 4;

// clean tissue intensities per profile, on a nominal 0..1000 scale
struct TissueLevels {
    double background, soft, fat, bone, muscle;
};

TissueLevels levels_for(ContrastProfile p) {
    if (p == ContrastProfile::t1_like) return {20.0, 700.0, 950.0, 100.0, 450.0};
    return {20.0, 350.0, 80.0, 100.0, 600.0};  // fat-suppressed
}

void check_config(const PhantomConfig& cfg) {
    for (int a = 0; a < 3; ++a) {
        if (cfg.dims[a] < 16) throw InvalidConfig("phantom dims must be >= 16 per axis");
        if (!(cfg.spacing[a] > 0.0)) throw InvalidConfig("phantom spacing must be positive");
    }
    if (cfg.n_muscle_lobes < 0) throw InvalidConfig("n_muscle_lobes must be >= 0");
    if (!(cfg.noise_sigma >= 0.0 && cfg.noise_sigma <= 0.5))
        throw InvalidConfig("noise_sigma must lie in [0, 0.5]");
}

}  // namespace

std::vector<Ellipsoid> muscle_lobes(const PhantomConfig& cfg) {
    check_config(cfg);
    const int k = cfg.n_muscle_lobes;
    if (k == 0) return {};

    const double nx = cfg.dims[0], ny = cfg.dims[1], nz = cfg.dims[2];
    const double cx = (nx - 1.0) / 2.0, cy = (ny - 1.0) / 2.0, cz = (nz - 1.0) / 2.0;
    const double rx = 0.46 * nx, ry = 0.46 * ny;

    CounterRng rng{cfg.seed};
    const double ring = 0.52;
    // neighbor spacing bounds the in-plane size; single lobes get the cap
    const double base = k == 1 ? 0.28
                               : std::min(0.28, 0.85 * ring * std::sin(std::numbers::pi / k));
    const double phase = rng.uniform01(kStreamLobes, 0) * 2.0 * std::numbers::pi;
    const double cohort_scale = 0.75 + 0.35 * rng.uniform01(kStreamLobes, 1);

    std::vector<Ellipsoid> lobes;
    lobes.reserve(k);
    for (int i = 0; i < k; ++i) {
        const double theta = phase + 2.0 * std::numbers::pi * i / k;
        const double jitter = 0.90 + 0.20 * rng.uniform01(kStreamLobes, 10 + 2 * i);
        const double zjitter = 0.85 + 0.30 * rng.uniform01(kStreamLobes, 11 + 2 * i);
        Ellipsoid e;
        e.center = {cx + ring * rx * std::cos(theta), cy + ring * ry * std::sin(theta), cz};
        e.semi_axes = {base * rx * cohort_scale * jitter, base * ry * cohort_scale * jitter,
                       0.35 * nz * cohort_scale * zjitter};
        lobes.push_back(e);
    }
    return lobes;
}

PhantomCase generate_phantom(const PhantomConfig& cfg) {
    check_config(cfg);
    const std::vector<Ellipsoid> lobes = muscle_lobes(cfg);
    const TissueLevels lv = levels_for(cfg.profile);
    const CounterRng rng{cfg.seed};

    const int nx = cfg.dims[0], ny = cfg.dims[1], nz = cfg.dims[2];
    const double cx = (nx - 1.0) / 2.0, cy = (ny - 1.0) / 2.0;
    const double rx = 0.46 * nx, ry = 0.46 * ny;
    const double bone_r = 0.09 * std::min(nx, ny);

    PhantomCase out;
    out.volume.geometry = VolumeGeometry::diagonal(cfg.dims, cfg.spacing);
    out.volume.values.resize(out.volume.geometry.voxel_count());
    out.mask.geometry = out.volume.geometry;
    out.mask.labels.assign(out.volume.geometry.voxel_count(), 0);

    const double clean_range = std::max({lv.soft, lv.fat, lv.bone, lv.muscle}) - lv.background;
    const double sigma = cfg.noise_sigma * clean_range;

    std::size_t idx = 0;
    for (int z = 0; z < nz; ++z) {
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x, ++idx) {
                const double dx = (x - cx) / rx, dy = (y - cy) / ry;
                const double rho2 = dx * dx + dy * dy;

                double value = lv.background;
                if (rho2 <= 1.0) {
                    value = rho2 > 0.85 * 0.85 ? lv.fat : lv.soft;
                    const double bx = x - cx, by = y - cy;
                    if (bx * bx + by * by <= bone_r * bone_r) value = lv.bone;
                }
                bool muscle = false;
                for (const Ellipsoid& e : lobes) {
                    const double u = (x - e.center[0]) / e.semi_axes[0];
                    const double v = (y - e.center[1]) / e.semi_axes[1];
                    const double w = (z - e.center[2]) / e.semi_axes[2];
                    if (u * u + v * v + w * w <= 1.0) {
                        muscle = true;
                        break;
                    }
                }
                if (muscle) {
                    value = lv.muscle;  // lobes occlude bone and fat
                    out.mask.labels[idx] = 1;
                }
                if (sigma > 0.0) value += sigma * rng.normal(kStreamNoise, idx);
                out.volume.values[idx] = static_cast<float>(value);
            }
        }
    }

    // plausible synthetic demographics, fully determined by the seed
    SeriesMetadata& meta = out.metadata;
    const auto pick = [&](std::uint64_t counter, std::uint64_t n) {
        return rng.uniform_below(kStreamMeta, counter, n);
    };
    char buf[32];
    std::snprintf(buf, sizeof buf, "P%04llu", static_cast<unsigned long long>(pick(0, 10000)));
    meta.patient_id = buf;
    std::snprintf(buf, sizeof buf, "E%06llu", static_cast<unsigned long long>(cfg.seed % 1000000));
    meta.exam_id = buf;
    std::snprintf(buf, sizeof buf, "S%06llu", static_cast<unsigned long long>(cfg.seed % 1000000));
    meta.series_id = buf;
    meta.view = View::axial;
    meta.age = static_cast<double>(18 + pick(1, 70));
    meta.sex = pick(2, 2) == 0 ? Sex::female : Sex::male;
    const std::uint64_t race_roll = pick(3, 100);
    meta.race = race_roll < 55 ? "white"
                : race_roll < 80 ? "black"
                : race_roll < 88 ? "asian"
                : race_roll < 94 ? "other"
                                 : "unknown";
    meta.height_m = std::round((1.50 + 0.45 * rng.uniform01(kStreamMeta, 4)) * 100.0) / 100.0;
    meta.year = static_cast<int>(2016 + pick(5, 5));

    static const char* kSites[] = {"thigh", "hip", "shoulder", "knee",
                                   "abdomen", "lumbar spine", "chest", "wrist"};
    const std::string site = kSites[pick(6, std::size(kSites))];
    meta.protocol_description = "MRI " + site + " without contrast";
    meta.series_description = cfg.profile == ContrastProfile::t1_like ? "AX T1" : "AX T2 FS";
    return out;
}

namespace {

// One pass of count-normalized 3-tap box averaging along an axis; applying
// it along x, y, z realizes the 3x3x3 box with clamped borders.
void box_pass(std::vector<float>& data, const VolumeGeometry& g, int axis) {
    const int n[3] = {g.dims[0], g.dims[1], g.dims[2]};
    std::vector<float> src = data;
    const std::size_t stride = axis == 0 ? 1
                             : axis == 1 ? static_cast<std::size_t>(n[0])
                                         : static_cast<std::size_t>(n[0]) * n[1];
    for (int z = 0; z < n[2]; ++z)
        for (int y = 0; y < n[1]; ++y)
            for (int x = 0; x < n[0]; ++x) {
                const int coord[3] = {x, y, z};
                const std::size_t i = linear_index(g, x, y, z);
                double sum = src[i];
                int cnt = 1;
                if (coord[axis] > 0) {
                    sum += src[i - stride];
                    ++cnt;
                }
                if (coord[axis] + 1 < n[axis]) {
                    sum += src[i + stride];
                    ++cnt;
                }
                data[i] = static_cast<float>(sum / cnt);
            }
}

}  // namespace

ProbabilityVolume simulate_probability_map(const BinaryMask& gt, int blur_iters,
                                           double noise_sigma, std::uint64_t seed) {
    if (blur_iters < 0) throw InvalidConfig("blur_iters must be >= 0");
    if (noise_sigma < 0.0) throw InvalidConfig("noise_sigma must be >= 0");

    ProbabilityVolume out;
    out.geometry = gt.geometry;
    out.values.assign(gt.labels.begin(), gt.labels.end());
    for (int it = 0; it < blur_iters; ++it)
        for (int axis = 0; axis < 3; ++axis) box_pass(out.values, out.geometry, axis);

    if (noise_sigma > 0.0) {
        const CounterRng rng{seed};
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            const double v = out.values[i] + noise_sigma * rng.normal(kStreamSimNoise, i);
            out.values[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

ProbabilityVolume reference_segment(const ScalarVolume& volume, ContrastProfile profile) {
    const TissueLevels lv = levels_for(profile);
    const double top = std::max({lv.soft, lv.fat, lv.bone, lv.muscle});
    // where the muscle band lands after per-slice min-max normalization
    const double center = (lv.muscle - lv.background) / (top - lv.background) * 255.0;
    const double half_width = 34.0;
    const double softness = 9.0;

    std::vector<Slice2D> slices = extract_slices(volume, SliceAxis::third);
    ProbabilityVolume out;
    out.geometry = volume.geometry;
    out.values.resize(volume.geometry.voxel_count());
    for (Slice2D& s : slices) {
        const Slice2D norm = minmax_normalize(s);
        const int k = s.provenance.index;
        for (int r = 0; r < norm.height; ++r)
            for (int c = 0; c < norm.width; ++c) {
                const double d = std::abs(static_cast<double>(norm.at(r, c)) - center);
                const double p = 1.0 / (1.0 + std::exp(-(half_width - d) / softness));
                out.values[linear_index(out.geometry, c, r, k)] = static_cast<float>(p);
            }
    }
    return out;
}

}  // namespace musev
