// musev - command-line front end for the muscle-segmentation evaluation
// engine: cohort curation, preprocessing, ensembling, metrics, biomarkers,
// statistics, and synthetic phantom generation.
//
// Exit codes: 0 success, 2 usage/config error, 3 case files missing or
// unreadable, 4 every case failed.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "musev/analysis.hpp"
#include "musev/curation.hpp"
#include "musev/metrics.hpp"
#include "musev/nifti.hpp"
#include "musev/phantom.hpp"
#include "musev/pipeline.hpp"
#include "musev/preprocess.hpp"

namespace {

using nlohmann::json;

json sequence_label_json(const musev::SequenceLabel& label) {
    json j;
    j["base"] = musev::to_string(label.base);
    j["fat_sat"] = label.fat_sat;
    j["phase"] = musev::to_string(label.phase);
    j["contrast"] = label.contrast;
    j["excluded"] = label.excluded;
    if (label.excluded) j["exclusion_reason"] = label.exclusion_reason;
    j["category"] = musev::sequence_category_key(label);
    j["variant"] = musev::sequence_variant_key(label);
    return j;
}

json body_location_json(const musev::BodyLocation& loc) {
    json j;
    j["category"] = musev::to_string(loc.category);
    if (loc.category == musev::BodyLocation::Category::excluded)
        j["exclusion_reason"] = loc.exclusion_reason;
    return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw musev::Error("cannot write " + path.string());
    out << text;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text << "\n";
    else
        write_text(out_path, text + "\n");
}

std::optional<std::string> env_value(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

int run_classify(const std::string& series_desc, const std::string& protocol_desc,
                 const std::string& out_path) {
    json j;
    if (!series_desc.empty()) j["sequence"] = sequence_label_json(musev::classify_sequence(series_desc));
    if (!protocol_desc.empty())
        j["location"] = body_location_json(musev::classify_body_location(protocol_desc));
    emit(j.dump(2), out_path);
    return 0;
}

int run_cohort(const std::string& input, const std::string& out_path) {
    const musev::CohortTable table = musev::build_cohort(musev::read_cohort_file(input));
    json j;
    j["n_rows"] = static_cast<int>(table.rows.size());
    json excluded = json::array();
    for (const musev::ExcludedRow& e : table.excluded)
        excluded.push_back({{"series_id", e.series_id}, {"reason", e.reason}});
    j["excluded"] = std::move(excluded);
    json freq = json::array();
    for (const auto& [key, count] : table.frequency)
        freq.push_back({{"location", std::get<0>(key)},
                        {"sequence", std::get<1>(key)},
                        {"view", musev::to_string(std::get<2>(key))},
                        {"count", count}});
    j["frequencies"] = std::move(freq);
    emit(j.dump(2), out_path);
    return 0;
}

int run_split(const std::string& input, const musev::SplitOverrides& overrides,
              const std::string& out_path) {
    const musev::CohortTable table = musev::build_cohort(musev::read_cohort_file(input));
    const musev::SplitPlan plan = musev::construct_test_splits(table, overrides);
    emit(musev::split_plan_json(plan).dump(2), out_path);
    return 0;
}

int run_preprocess(const std::string& volume_path, const std::string& out_path,
                   const std::string& axis_name, int model_size) {
    musev::SliceAxis axis = musev::SliceAxis::third;
    if (axis_name == "first") axis = musev::SliceAxis::first;
    else if (axis_name == "second") axis = musev::SliceAxis::second;
    else if (axis_name != "third") throw musev::ConfigError("unknown axis " + axis_name);

    const musev::ScalarVolume vol = musev::nifti::read_file(volume_path);
    const std::vector<musev::Slice2D> slices =
        musev::to_model_space(vol, axis, volume_path, model_size);

    // stack normalized slices as a float volume, spacing scaled to keep the
    // physical extent of the plane
    const auto [h, w] = musev::slice_plane_dims(vol.geometry, axis);
    musev::VolumeGeometry geo = musev::VolumeGeometry::diagonal(
        {model_size, model_size, static_cast<int>(slices.size())},
        {vol.geometry.spacing[0] * w / model_size, vol.geometry.spacing[1] * h / model_size,
         vol.geometry.spacing[2]});
    musev::ScalarVolume out;
    out.geometry = geo;
    out.values.reserve(geo.voxel_count());
    for (const musev::Slice2D& s : slices)
        out.values.insert(out.values.end(), s.values.begin(), s.values.end());
    musev::nifti::write_file(out_path, out, musev::nifti::kDtypeFloat32);
    return 0;
}

int run_ensemble(const std::vector<std::string>& inputs, const std::string& out_path) {
    std::vector<musev::ProbabilityVolume> maps;
    maps.reserve(inputs.size());
    for (const std::string& p : inputs)
        maps.push_back(musev::probability_from_scalar(musev::nifti::read_file(p)));
    musev::nifti::write_file(out_path, musev::ensemble_mean(maps));
    return 0;
}

int run_quantify(const std::string& mask_path, double height_m, bool height_squared,
                 const std::string& out_path) {
    const musev::BinaryMask mask = musev::mask_from_scalar(musev::nifti::read_file(mask_path));
    const double smv = musev::compute_smv_ml(mask);
    json j;
    j["foreground_voxels"] = static_cast<std::uint64_t>(mask.foreground_count());
    j["smv_ml"] = musev::round6(smv);
    if (height_m > 0.0) {
        const char* key = height_squared ? "smi_ml_per_m2" : "smi_ml_per_m";
        j[key] = musev::round6(musev::compute_smi(smv, height_m, height_squared));
    }
    emit(j.dump(2), out_path);
    return 0;
}

struct PhantomGenOptions {
    std::string out_dir;
    int count{1};
    std::uint64_t seed{0};
    int dim{64};
    int lobes{3};
    double noise{0.05};
    std::string profile{"t1-like"};
    int sim_maps{0};
    int blur{1};
    double map_noise{0.15};
    bool reference{false};
};

int run_phantom_generate(const PhantomGenOptions& opt) {
    namespace fs = std::filesystem;
    fs::create_directories(opt.out_dir);
    std::vector<musev::SeriesMetadata> cohort;
    for (int i = 0; i < opt.count; ++i) {
        musev::PhantomConfig cfg;
        cfg.dims = {opt.dim, opt.dim, opt.dim};
        cfg.n_muscle_lobes = opt.lobes;
        cfg.noise_sigma = opt.noise;
        cfg.profile = musev::contrast_profile_from_string(opt.profile);
        cfg.seed = opt.seed + static_cast<std::uint64_t>(i);

        musev::PhantomCase pc = musev::generate_phantom(cfg);
        const std::string id = pc.metadata.series_id;
        musev::nifti::write_file(fs::path(opt.out_dir) / (id + ".nii"), pc.volume,
                                 musev::nifti::kDtypeFloat32);
        musev::nifti::write_file(fs::path(opt.out_dir) / (id + "_mask.nii"), pc.mask);
        for (int m = 0; m < opt.sim_maps; ++m) {
            const musev::ProbabilityVolume map = musev::simulate_probability_map(
                pc.mask, opt.blur, opt.map_noise, cfg.seed + 1000ULL * (m + 1));
            musev::nifti::write_file(
                fs::path(opt.out_dir) / (id + "_map" + std::to_string(m) + ".nii"), map);
        }
        if (opt.reference) {
            const musev::ProbabilityVolume ref = musev::reference_segment(pc.volume, cfg.profile);
            musev::nifti::write_file(fs::path(opt.out_dir) / (id + "_ref.nii"), ref);
        }
        cohort.push_back(pc.metadata);
    }
    std::ostringstream csv;
    musev::write_cohort_csv(csv, cohort);
    write_text(fs::path(opt.out_dir) / "cohort.csv", csv.str());

    // a ready-to-run evaluation config when simulated maps were emitted
    if (opt.sim_maps > 0) {
        json cfg;
        cfg["cohort"] = "cohort.csv";
        cfg["ground_truth"] = "{case}_mask.nii";
        json maps = json::object();
        std::vector<std::string> names;
        for (int m = 0; m < opt.sim_maps; ++m) {
            const std::string name = "model" + std::to_string(m);
            maps[name] = "{case}_map" + std::to_string(m) + ".nii";
            names.push_back(name);
        }
        cfg["probability_maps"] = std::move(maps);
        if (opt.sim_maps > 1) cfg["ensemble"] = names;
        cfg["threshold"] = 0.5;
        cfg["output_dir"] = "report";
        write_text(fs::path(opt.out_dir) / "run.json", cfg.dump(2) + "\n");
    }
    return 0;
}

int run_phantom_segment(const std::string& volume_path, const std::string& profile,
                        const std::string& out_path) {
    const musev::ScalarVolume vol = musev::nifti::read_file(volume_path);
    const musev::ProbabilityVolume prob =
        musev::reference_segment(vol, musev::contrast_profile_from_string(profile));
    musev::nifti::write_file(out_path, prob);
    return 0;
}

int run_report(const std::string& cases_path, const std::vector<std::string>& key_names,
               const std::string& out_dir) {
    std::ifstream in(cases_path);
    if (!in) throw musev::ConfigError("cannot open cases CSV " + cases_path);
    const std::vector<musev::EvaluationRecord> records = musev::read_cases_csv(in);
    std::vector<musev::SubgroupKey> keys;
    for (const std::string& k : key_names) {
        const auto key = musev::subgroup_key_from_string(k);
        if (!key) throw musev::ConfigError("unknown subgroup key " + k);
        keys.push_back(*key);
    }
    const json j = musev::subgroups_json(records, keys);
    if (out_dir.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::filesystem::create_directories(out_dir);
        write_text(std::filesystem::path(out_dir) / "subgroups.json", j.dump(2) + "\n");
    }
    return 0;
}

int run_evaluate_cmd(const std::string& config_path, const std::string& out_dir_flag,
                     int jobs_flag, double threshold_flag, bool per_slice,
                     const std::string& split_arm, const std::string& split_plan,
                     bool split_construct) {
    musev::RunConfig cfg = musev::load_run_config(config_path);
    // precedence: flag > environment > config file
    if (const auto env = env_value("MUSEV_OUTPUT_DIR")) cfg.output_dir = *env;
    if (const auto env = env_value("MUSEV_JOBS")) cfg.jobs = std::stoi(*env);
    if (!out_dir_flag.empty()) cfg.output_dir = out_dir_flag;
    if (jobs_flag > 0) cfg.jobs = jobs_flag;
    if (threshold_flag > 0.0) cfg.threshold = threshold_flag;
    if (per_slice) cfg.score_mode = musev::ScoreMode::per_slice;
    if (!split_arm.empty()) {
        if (split_arm == "test_a")
            cfg.split.arm = musev::SplitArm::test_a;
        else if (split_arm == "test_b")
            cfg.split.arm = musev::SplitArm::test_b;
        else
            throw musev::ConfigError("--split-arm must be test_a or test_b");
        if (!split_plan.empty()) cfg.split.plan_path = split_plan;
        if (split_construct) cfg.split.construct = true;
        if (cfg.split.construct == !cfg.split.plan_path.empty())
            throw musev::ConfigError(
                "a split arm needs exactly one of --split-plan or --split-construct");
    }
    if (cfg.jobs < 1) throw musev::ConfigError("jobs must be >= 1");
    if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0))
        throw musev::ConfigError("threshold must lie strictly inside (0, 1)");

    const musev::RunReport report = musev::run_evaluate(cfg);
    for (const std::string& err : report.case_errors) std::cerr << "error: " << err << "\n";
    if (report.exit_code == 0) {
        for (const auto& path : report.written) std::cout << "wrote " << path.string() << "\n";
        std::cout << report.cases.size() << " cases evaluated\n";
    } else {
        std::cerr << report.case_errors.size() << " of "
                  << report.case_errors.size() + report.cases.size() << " cases failed\n";
    }
    return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"muscle segmentation evaluation engine"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // classify
    std::string series_desc, protocol_desc, out_path;
    CLI::App* classify = app.add_subcommand("classify", "classify sequence/body-location text");
    classify->add_option("--series-description", series_desc, "series description text");
    classify->add_option("--protocol-description", protocol_desc, "protocol description text");
    classify->add_option("--out", out_path, "write JSON here instead of stdout");

    // cohort
    std::string cohort_input;
    CLI::App* cohort = app.add_subcommand("cohort", "build a cohort frequency table");
    cohort->add_option("--input", cohort_input, "cohort CSV or JSON")->required();
    cohort->add_option("--out", out_path, "write JSON here instead of stdout");

    // split
    musev::SplitOverrides overrides;
    CLI::App* split = app.add_subcommand("split", "construct Test-A/Test-B split plan");
    split->add_option("--input", cohort_input, "cohort CSV or JSON")->required();
    split->add_option("--force-a", overrides.force_a, "series id forced into Test A");
    split->add_option("--force-b", overrides.force_b, "series id forced into Test B");
    split->add_option("--out", out_path, "write JSON here instead of stdout");

    // preprocess
    std::string volume_path, axis_name = "third";
    int model_size = 1024;
    CLI::App* preprocess = app.add_subcommand("preprocess", "normalize and resize to model space");
    preprocess->add_option("--volume", volume_path, "input NIFTI volume")->required();
    preprocess->add_option("--out", out_path, "output NIFTI path")->required();
    preprocess->add_option("--axis", axis_name, "slice axis: first|second|third");
    preprocess->add_option("--size", model_size, "model-space size (default 1024)");

    // evaluate
    std::string config_path, eval_out_dir, split_arm, split_plan;
    int jobs_flag = 0;
    double threshold_flag = 0.0;
    bool per_slice = false, split_construct = false;
    CLI::App* evaluate = app.add_subcommand("evaluate", "run the evaluation pipeline");
    evaluate->add_option("--config", config_path, "run configuration JSON")->required();
    evaluate->add_option("--out", eval_out_dir, "override output directory");
    evaluate->add_option("--jobs", jobs_flag, "parallel case workers");
    evaluate->add_option("--threshold", threshold_flag, "binarization threshold");
    evaluate->add_flag("--per-slice", per_slice, "average metrics per slice instead of per volume");
    evaluate->add_option("--split-arm", split_arm, "evaluate one split arm: test_a | test_b");
    evaluate->add_option("--split-plan", split_plan, "split plan JSON for --split-arm");
    evaluate->add_flag("--split-construct", split_construct,
                       "construct the split from the cohort for --split-arm");

    // ensemble
    std::vector<std::string> ensemble_inputs;
    CLI::App* ensemble = app.add_subcommand("ensemble", "average probability maps");
    ensemble->add_option("--out", out_path, "output NIFTI path")->required();
    ensemble->add_option("inputs", ensemble_inputs, "probability map NIFTI files")
        ->expected(2, -1)
        ->required();

    // quantify
    std::string mask_path;
    double height_m = 0.0;
    bool height_squared = false;
    CLI::App* quantify = app.add_subcommand("quantify", "skeletal muscle volume/index from a mask");
    quantify->add_option("--mask", mask_path, "binary mask NIFTI")->required();
    quantify->add_option("--height", height_m, "patient height in meters (enables SMI)");
    quantify->add_flag("--height-squared", height_squared,
                       "normalize by height squared instead of height");
    quantify->add_option("--out", out_path, "write JSON here instead of stdout");

    // phantom
    CLI::App* phantom = app.add_subcommand("phantom", "synthetic phantom utilities");
    phantom->require_subcommand(1);
    PhantomGenOptions gen;
    CLI::App* generate = phantom->add_subcommand("generate", "generate a phantom cohort");
    generate->add_option("--out", gen.out_dir, "output directory")->required();
    generate->add_option("--count", gen.count, "number of cases");
    generate->add_option("--seed", gen.seed, "base seed (case i uses seed + i)");
    generate->add_option("--dim", gen.dim, "cubic volume size");
    generate->add_option("--lobes", gen.lobes, "muscle lobes per phantom");
    generate->add_option("--noise", gen.noise, "image noise fraction [0, 0.5]");
    generate->add_option("--profile", gen.profile, "t1-like | t2fs-like");
    generate->add_option("--sim-maps", gen.sim_maps, "simulated model maps per case");
    generate->add_option("--blur", gen.blur, "box blur passes for simulated maps");
    generate->add_option("--map-noise", gen.map_noise, "noise sigma for simulated maps");
    generate->add_flag("--reference", gen.reference, "also emit reference-segmenter maps");

    std::string seg_profile = "t1-like";
    CLI::App* segment = phantom->add_subcommand("segment", "classical reference segmentation");
    segment->add_option("--volume", volume_path, "input NIFTI volume")->required();
    segment->add_option("--profile", seg_profile, "t1-like | t2fs-like");
    segment->add_option("--out", out_path, "output probability NIFTI")->required();

    // report
    std::string cases_path, report_out;
    std::vector<std::string> key_names = {"location", "sequence", "sex", "age-bin", "race"};
    CLI::App* report = app.add_subcommand("report", "subgroup summaries from a cases CSV");
    report->add_option("--cases", cases_path, "per-case CSV from evaluate")->required();
    report->add_option("--keys", key_names, "subgroup keys");
    report->add_option("--out", report_out, "output directory (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(classify))
            return run_classify(series_desc, protocol_desc, out_path);
        if (app.got_subcommand(cohort)) return run_cohort(cohort_input, out_path);
        if (app.got_subcommand(split)) return run_split(cohort_input, overrides, out_path);
        if (app.got_subcommand(preprocess))
            return run_preprocess(volume_path, out_path, axis_name, model_size);
        if (app.got_subcommand(evaluate))
            return run_evaluate_cmd(config_path, eval_out_dir, jobs_flag, threshold_flag,
                                    per_slice, split_arm, split_plan, split_construct);
        if (app.got_subcommand(ensemble)) return run_ensemble(ensemble_inputs, out_path);
        if (app.got_subcommand(quantify))
            return run_quantify(mask_path, height_m, height_squared, out_path);
        if (app.got_subcommand(phantom)) {
            if (phantom->got_subcommand(generate)) return run_phantom_generate(gen);
            return run_phantom_segment(volume_path, seg_profile, out_path);
        }
        if (app.got_subcommand(report)) return run_report(cases_path, key_names, report_out);
    } catch (const musev::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const musev::CaseLoadError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
