#ifndef MUSEV_PIPELINE_HPP
#define MUSEV_PIPELINE_HPP

// Evaluation-run orchestration: config parsing, per-case loading and
// scoring (optionally in parallel), and deterministic report emission
// (per-case CSV, subgroup JSON, statistics JSON).

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "musev/curation.hpp"
#include "musev/metrics.hpp"

namespace musev {

enum class SplitArm { all, test_a, test_b };

// Restricts an evaluation run to one split arm, taken either from a stored
// plan file or constructed from the cohort at run start.
struct SplitSpec {
    SplitArm arm{SplitArm::all};
    std::filesystem::path plan_path;  // load a stored SplitPlan JSON
    bool construct{false};            // or build the plan from the cohort
};

struct RunConfig {
    std::filesystem::path cohort_path;
    std::string ground_truth_template;  // "{case}" expands to the series id
    std::vector<std::pair<std::string, std::string>> model_maps;  // name -> path template
    std::vector<std::string> ensemble;  // model names averaged into the prediction
    SplitSpec split;
    double threshold{0.5};
    std::vector<SubgroupKey> subgroup_keys{SubgroupKey::location, SubgroupKey::sequence,
                                           SubgroupKey::sex, SubgroupKey::age_bin,
                                           SubgroupKey::race};
    std::filesystem::path output_dir;
    std::uint64_t seed{0};
    int jobs{1};
    ScoreMode score_mode{ScoreMode::volume};
};

// Throws ConfigError on malformed or unresolvable configuration.
RunConfig parse_run_config(const nlohmann::json& doc,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

struct RunReport {
    std::vector<EvaluationRecord> cases;  // sorted by case id
    nlohmann::json subgroups;
    nlohmann::json statistics;
    std::vector<std::string> case_errors;
    int exit_code{0};  // 0 ok, 3 some cases failed, 4 all cases failed
    std::vector<std::filesystem::path> written;
};

RunReport run_evaluate(const RunConfig& config);

// Report primitives (also used by the report subcommand).
double round6(double v);
std::string format_fixed6(double v);
void write_cases_csv(std::ostream& out, const std::vector<EvaluationRecord>& records);
std::vector<EvaluationRecord> read_cases_csv(std::istream& in);
nlohmann::json subgroups_json(const std::vector<EvaluationRecord>& records,
                              const std::vector<SubgroupKey>& keys);
nlohmann::json split_plan_json(const SplitPlan& plan);
SplitPlan split_plan_from_json(const nlohmann::json& doc);
std::string expand_case_template(const std::string& templ, const std::string& case_id);

}  // namespace musev

#endif
