#ifndef MUSEV_ANALYSIS_HPP
#define MUSEV_ANALYSIS_HPP

// Probability-map ensembling, binarization, skeletal-muscle biomarkers, and
// the rank/correlation tests used by the evaluation reports.

#include <span>
#include <string>
#include <vector>

#include "musev/volume.hpp"

namespace musev {

// Voxelwise arithmetic mean of two or more probability maps on one grid.
ProbabilityVolume ensemble_mean(const std::vector<ProbabilityVolume>& maps);

// voxel >= threshold -> foreground (exact-threshold values are foreground)
BinaryMask binarize(const ProbabilityVolume& map, double threshold = 0.5);

// foreground voxel count * voxel volume, in milliliters
double compute_smv_ml(const BinaryMask& mask);

// SMV divided by height in meters (the linear form). The conventional
// height-squared normalization is available behind the flag and is never
// the default. Height must be > 0.
double compute_smi(double smv_ml, double height_m, bool height_squared = false);

struct PearsonResult {
    double r{0.0};
    double p_two_sided{1.0};
    int n{0};
};

// Sample correlation with a Student-t two-sided p (n - 2 degrees of
// freedom); |r| = 1 is reported with p = 0.
PearsonResult pearson(std::span<const double> xs, std::span<const double> ys);

enum class Alternative { greater, less, two_sided };
enum class TestMethod { automatic, exact, normal_approximation };

struct TestResult {
    double statistic{0.0};  // W+ = rank sum of positive differences
    double p_value{1.0};
    std::string method;     // "exact" or "normal-approximation"
    int n_effective{0};     // differences retained after dropping zeros
};

// Wilcoxon signed-rank test on paired differences. Zeros are dropped,
// absolute values are ranked with mid-ranks for ties; the p-value is exact
// (all 2^m sign assignments) for m <= 20 and a tie-corrected normal
// approximation with 0.5 continuity correction otherwise.
TestResult wilcoxon_signed_rank(std::span<const double> diffs, Alternative alternative,
                                TestMethod method = TestMethod::automatic);

// Regularized incomplete beta I_x(a, b); exposed for the t distribution.
double regularized_incomplete_beta(double a, double b, double x);

}  // namespace musev

#endif
