#ifndef MUSEV_METRICS_HPP
#define MUSEV_METRICS_HPP

// Voxelwise confusion counts, DSC / sensitivity / specificity / HSS, and
// subgroup aggregation of per-case evaluation records.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "musev/volume.hpp"

namespace musev {

struct ConfusionCounts {
    std::uint64_t tp{0}, fp{0}, fn{0}, tn{0};
    std::uint64_t total() const { return tp + fp + fn + tn; }
    bool operator==(const ConfusionCounts&) const = default;
};

struct CaseMetrics {
    // dsc is always defined under the empty-empty convention (dsc = 1 when
    // both masks are empty); se/sp/hss may be undefined and are then absent.
    std::optional<double> dsc, sensitivity, specificity, hss;
    bool gt_empty{false};
    bool pred_empty{false};
};

ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt);
CaseMetrics compute_metrics(const ConfusionCounts& c);

enum class ScoreMode { volume, per_slice };

struct EvaluationRecord {
    std::string case_id;
    std::string location;
    std::string sequence;
    std::string view;
    std::string sex;
    std::optional<double> age;
    std::string race;
    ConfusionCounts counts;
    CaseMetrics metrics;
    double smv_ml{0.0};            // predicted skeletal muscle volume
    std::optional<double> smi;     // smv / height, when height is known
};

// Binarizes the prediction at the threshold (>= threshold is foreground),
// tallies counts over the whole volume (or averages metrics per slice along
// the third axis in per_slice mode), and fills metrics plus predicted SMV.
EvaluationRecord evaluate_case(const ProbabilityVolume& pred, const BinaryMask& gt,
                               double threshold = 0.5, ScoreMode mode = ScoreMode::volume);

enum class SubgroupKey { location, sequence, sex, age_bin, race };

std::string to_string(SubgroupKey key);
std::optional<SubgroupKey> subgroup_key_from_string(const std::string& s);
std::string age_bin_name(double age);  // <18, 18-39, 40-59, 60+

struct SubgroupStat {
    std::string group;
    int n{0};
    std::optional<double> mean_dsc, mean_hss;
    int excluded_dsc{0};
    int excluded_hss{0};
};

// Groups records by the key and reports group size and mean DSC/HSS,
// excluding undefined values from the means. Output sorted by group name.
std::vector<SubgroupStat> subgroup_summary(const std::vector<EvaluationRecord>& records,
                                           SubgroupKey key);

}  // namespace musev

#endif
