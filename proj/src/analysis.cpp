#include "musev/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace musev {

ProbabilityVolume ensemble_mean(const std::vector<ProbabilityVolume>& maps) {
    if (maps.size() < 2) throw TooFewMaps("ensemble needs at least two probability maps");
    for (std::size_t k = 1; k < maps.size(); ++k)
        if (!same_grid(maps[0].geometry, maps[k].geometry))
            throw GeometryMismatch("probability map " + std::to_string(k) +
                                   " is not on the shared grid");
    ProbabilityVolume out;
    out.geometry = maps[0].geometry;
    const std::size_t n = maps[0].values.size();
    out.values.resize(n);
    const double inv = 1.0 / static_cast<double>(maps.size());
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const ProbabilityVolume& m : maps) sum += m.values[i];
        out.values[i] = static_cast<float>(std::clamp(sum * inv, 0.0, 1.0));
    }
    return out;
}

BinaryMask binarize(const ProbabilityVolume& map, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw InvalidThreshold("threshold must lie strictly inside (0, 1)");
    BinaryMask m;
    m.geometry = map.geometry;
    m.labels.resize(map.values.size());
    for (std::size_t i = 0; i < map.values.size(); ++i)
        m.labels[i] = static_cast<double>(map.values[i]) >= threshold ? 1 : 0;
    return m;
}

double compute_smv_ml(const BinaryMask& mask) {
    return static_cast<double>(mask.foreground_count()) * mask.geometry.voxel_volume_mm3() / 1000.0;
}

double compute_smi(double smv_ml, double height_m, bool height_squared) {
    if (!(height_m > 0.0)) throw NonPositiveHeight("height must be positive");
    return smv_ml / (height_squared ? height_m * height_m : height_m);
}

namespace {

double incomplete_beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

constexpr double kMinP = 1e-300;

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                               a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * incomplete_beta_cf(a, b, x) / a;
    return 1.0 - bt * incomplete_beta_cf(b, a, 1.0 - x) / b;
}

PearsonResult pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error("pearson: unequal sequence lengths");
    const int n = static_cast<int>(xs.size());
    if (n < 3) throw TooFewPoints("pearson needs at least 3 pairs");

    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ConstantInput("pearson requires non-constant input");

    PearsonResult res;
    res.n = n;
    res.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    if (std::fabs(res.r) >= 1.0) {
        res.p_two_sided = 0.0;
        return res;
    }
    const double df = n - 2;
    const double t2 = res.r * res.r * df / (1.0 - res.r * res.r);
    res.p_two_sided = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t2));
    return res;
}

namespace {

struct RankedDiffs {
    std::vector<double> ranks;   // mid-ranks of |d|, aligned with kept diffs
    std::vector<double> kept;    // non-zero differences
    double w_plus{0.0};
    double tie_correction{0.0};  // sum of (t^3 - t) over tie groups
};

RankedDiffs rank_differences(std::span<const double> diffs) {
    RankedDiffs rd;
    for (double d : diffs)
        if (d != 0.0) rd.kept.push_back(d);
    const std::size_t m = rd.kept.size();
    if (m == 0) return rd;

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::fabs(rd.kept[a]) < std::fabs(rd.kept[b]);
    });

    rd.ranks.resize(m);
    std::size_t i = 0;
    while (i < m) {
        std::size_t j = i;
        while (j + 1 < m && std::fabs(rd.kept[order[j + 1]]) == std::fabs(rd.kept[order[i]])) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j + 1);  // average of ranks i+1..j+1
        const double t = static_cast<double>(j - i + 1);
        rd.tie_correction += t * t * t - t;
        for (std::size_t k = i; k <= j; ++k) rd.ranks[order[k]] = mid;
        i = j + 1;
    }
    for (std::size_t k = 0; k < m; ++k)
        if (rd.kept[k] > 0.0) rd.w_plus += rd.ranks[k];
    return rd;
}

// Exact tail masses of W+ over all 2^m sign assignments, using doubled
// integer ranks so the comparisons stay exact. Gray-code order keeps the
// running sum update O(1) per assignment.
void exact_tails(const std::vector<double>& ranks, double w_plus, double& p_ge, double& p_le) {
    const int m = static_cast<int>(ranks.size());
    std::vector<long long> r2(m);
    for (int i = 0; i < m; ++i) r2[i] = std::llround(2.0 * ranks[i]);
    const long long w2 = std::llround(2.0 * w_plus);

    const std::uint64_t total = 1ULL << m;
    std::uint64_t count_ge = 0, count_le = 0;
    long long sum = 0;
    std::uint64_t gray = 0;
    for (std::uint64_t k = 0;; ++k) {
        if (sum >= w2) ++count_ge;
        if (sum <= w2) ++count_le;
        if (k + 1 == total) break;
        const std::uint64_t next_gray = (k + 1) ^ ((k + 1) >> 1);
        const std::uint64_t flipped = gray ^ next_gray;
        const int bit = std::countr_zero(flipped);
        sum += (next_gray & flipped) ? r2[bit] : -r2[bit];
        gray = next_gray;
    }
    p_ge = static_cast<double>(count_ge) / static_cast<double>(total);
    p_le = static_cast<double>(count_le) / static_cast<double>(total);
}

}  // namespace

TestResult wilcoxon_signed_rank(std::span<const double> diffs, Alternative alternative,
                                TestMethod method) {
    if (diffs.empty()) throw EmptyInput("wilcoxon needs at least one difference");
    const RankedDiffs rd = rank_differences(diffs);
    const int m = static_cast<int>(rd.kept.size());
    if (m == 0) throw AllZeroDifferences("all differences are zero");

    TestResult res;
    res.statistic = rd.w_plus;
    res.n_effective = m;

    if (method == TestMethod::automatic)
        method = m <= 20 ? TestMethod::exact : TestMethod::normal_approximation;

    double p_greater, p_less;
    if (method == TestMethod::exact) {
        if (m > 25)
            throw Error("exact enumeration limited to 25 differences; use the normal approximation");
        res.method = "exact";
        exact_tails(rd.ranks, rd.w_plus, p_greater, p_less);
    } else {
        res.method = "normal-approximation";
        const double md = m;
        const double mean = md * (md + 1.0) / 4.0;
        const double var = md * (md + 1.0) * (2.0 * md + 1.0) / 24.0 - rd.tie_correction / 48.0;
        const double sd = std::sqrt(var);
        p_greater = 1.0 - normal_cdf((rd.w_plus - 0.5 - mean) / sd);
        p_less = normal_cdf((rd.w_plus + 0.5 - mean) / sd);
    }

    switch (alternative) {
        case Alternative::greater: res.p_value = p_greater; break;
        case Alternative::less: res.p_value = p_less; break;
        default: res.p_value = std::min(1.0, 2.0 * std::min(p_greater, p_less)); break;
    }
    res.p_value = std::clamp(res.p_value, kMinP, 1.0);
    return res;
}

}  // namespace musev
