#ifndef MUSEV_CURATION_HPP
#define MUSEV_CURATION_HPP

// Cohort curation: keyword classifiers for MRI sequence and body location,
// frequency tables over (location, sequence, view), Test-A/Test-B split
// construction, and the annotation-transfer alignment gate.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "musev/volume.hpp"

namespace musev {

enum class View { axial, coronal, sagittal, unknown };
enum class Sex { female, male, unknown };

std::string to_string(View v);
std::string to_string(Sex s);
View view_from_string(std::string_view s);
Sex sex_from_string(std::string_view s);

struct SeriesMetadata {
    std::string patient_id, exam_id, series_id;
    std::string series_description;
    std::string protocol_description;
    View view{View::unknown};
    double age{0.0};  // clamped to 90 on ingest
    Sex sex{Sex::unknown};
    std::string race;
    std::optional<double> height_m;
    int year{0};
};

enum class SequenceBase { t1, t2, pd, stir, tirm, dixon_t1, dixon, vibe_group, se_group, mra, unknown };
enum class Phase { none, water, fat, in_phase, out_phase };

std::string to_string(SequenceBase b);
std::string to_string(Phase p);

struct SequenceLabel {
    SequenceBase base{SequenceBase::unknown};
    bool fat_sat{false};
    Phase phase{Phase::none};
    bool contrast{false};
    bool excluded{false};
    std::string exclusion_reason;
};

struct BodyLocation {
    enum class Category {
        chest, abdomen, thoracic_spine, lumbar_spine, shoulder, humerus,
        hip, thigh, knee, lower_leg, misc, excluded
    };
    Category category{Category::excluded};
    std::string exclusion_reason;  // head-face | multi-area | unrecognized
};

std::string to_string(BodyLocation::Category c);

// Case-insensitive keyword classification of a DICOM-style series
// description. Never fails; unknown is a valid outcome.
SequenceLabel classify_sequence(std::string_view series_description);

// Case-insensitive keyword classification of a protocol description into
// the 11 body-location categories or a typed exclusion.
BodyLocation classify_body_location(std::string_view protocol_description);

// Reporting key: base plus fat-sat/contrast modifiers, e.g. "t1 fs+c".
std::string sequence_category_key(const SequenceLabel& label);
// Frequency key: category key plus the Dixon phase, e.g. "dixon-t1-water".
std::string sequence_variant_key(const SequenceLabel& label);

struct CohortRow {
    SeriesMetadata meta;
    SequenceLabel sequence;
    BodyLocation location;
};

struct ExcludedRow {
    std::string series_id;
    std::string reason;
};

struct CohortTable {
    std::vector<CohortRow> rows;          // classified, non-excluded
    std::vector<ExcludedRow> excluded;
    // (location, sequence variant, view) -> series count
    std::map<std::tuple<std::string, std::string, View>, int> frequency;

    int count(const std::string& location, const std::string& variant, View view) const;
};

CohortTable build_cohort(const std::vector<SeriesMetadata>& rows);

struct SplitSelection {
    std::string series_id;
    std::string location;
    std::string sequence;  // variant key
    View view{View::unknown};
    std::string note;
};

struct SplitOverrides {
    std::vector<std::string> force_a, force_b;  // judgment-driven additions
};

struct SplitPlan {
    std::vector<SplitSelection> test_a, test_b;
};

// Frequency-driven Test-A/Test-B construction. Test A takes, per location,
// every series of the most frequent sequence variant (for the abdomen: the
// most frequent axial variant and the most frequent coronal variant). Test B
// takes the next three variants per location, one series per distinct
// variant, preferring the most frequent view and the candidate location with
// the most patients. Ties break by variant name, then smallest series id.
SplitPlan construct_test_splits(const CohortTable& cohort, const SplitOverrides& overrides = {});

struct AlignmentTolerances {
    double spacing_rel{1e-3};
    double affine_abs{1e-2};
    double ncc_min{0.30};
};

struct AlignmentResult {
    bool aligned{false};
    std::string reason;  // empty when aligned; else dims | spacing | affine | ncc
    double ncc{0.0};
};

// Geometric identity plus normalized cross-correlation gate for reusing a
// reference mask on a candidate series.
AlignmentResult verify_pair_alignment(const ScalarVolume& reference, const ScalarVolume& candidate,
                                      const AlignmentTolerances& tol = {});

// Cohort metadata I/O. CSV header:
// patient_id,exam_id,series_id,series_description,protocol_description,view,age,sex,race,height_m,year
std::vector<SeriesMetadata> read_cohort_csv(std::istream& in);
std::vector<SeriesMetadata> read_cohort_json(std::istream& in);
std::vector<SeriesMetadata> read_cohort_file(const std::filesystem::path& path);
void write_cohort_csv(std::ostream& out, const std::vector<SeriesMetadata>& rows);

}  // namespace musev

#endif
