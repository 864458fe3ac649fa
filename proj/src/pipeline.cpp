#include "musev/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "musev/analysis.hpp"
#include "musev/csv.hpp"
#include "musev/nifti.hpp"

namespace musev {

double round6(double v) { return std::round(v * 1e6) / 1e6; }

std::string format_fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string expand_case_template(const std::string& templ, const std::string& case_id) {
    std::string out = templ;
    const std::string key = "{case}";
    for (std::size_t pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos))
        out.replace(pos, key.size(), case_id);
    return out;
}

RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
    RunConfig cfg;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        return path;
    };
    try {
        if (!doc.contains("cohort")) throw ConfigError("run config is missing \"cohort\"");
        cfg.cohort_path = resolve(doc.at("cohort").get<std::string>());
        if (!doc.contains("ground_truth"))
            throw ConfigError("run config is missing \"ground_truth\"");
        cfg.ground_truth_template = resolve(doc.at("ground_truth").get<std::string>()).string();

        if (doc.contains("probability_maps")) {
            const auto& maps = doc.at("probability_maps");
            if (!maps.is_object()) throw ConfigError("\"probability_maps\" must be an object");
            for (const auto& [name, templ] : maps.items())
                cfg.model_maps.emplace_back(name, resolve(templ.get<std::string>()).string());
            std::sort(cfg.model_maps.begin(), cfg.model_maps.end());
        }
        if (doc.contains("ensemble")) cfg.ensemble = doc.at("ensemble").get<std::vector<std::string>>();
        if (doc.contains("split")) {
            const auto& split = doc.at("split");
            if (!split.is_object()) throw ConfigError("\"split\" must be an object");
            const std::string arm = split.value("arm", "");
            if (arm == "test_a")
                cfg.split.arm = SplitArm::test_a;
            else if (arm == "test_b")
                cfg.split.arm = SplitArm::test_b;
            else
                throw ConfigError("split.arm must be \"test_a\" or \"test_b\"");
            if (split.contains("plan"))
                cfg.split.plan_path = resolve(split.at("plan").get<std::string>());
            cfg.split.construct = split.value("construct", false);
            if (cfg.split.construct == !cfg.split.plan_path.empty())
                throw ConfigError("split needs exactly one of \"plan\" or \"construct\": true");
            if (!cfg.split.plan_path.empty() && !std::filesystem::exists(cfg.split.plan_path))
                throw ConfigError("split plan does not exist: " + cfg.split.plan_path.string());
        }
        if (doc.contains("threshold")) cfg.threshold = doc.at("threshold").get<double>();
        if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("jobs")) cfg.jobs = doc.at("jobs").get<int>();
        if (doc.contains("output_dir"))
            cfg.output_dir = resolve(doc.at("output_dir").get<std::string>());
        if (doc.contains("per_slice") && doc.at("per_slice").get<bool>())
            cfg.score_mode = ScoreMode::per_slice;
        if (doc.contains("subgroup_keys")) {
            cfg.subgroup_keys.clear();
            for (const auto& k : doc.at("subgroup_keys")) {
                const auto key = subgroup_key_from_string(k.get<std::string>());
                if (!key) throw ConfigError("unknown subgroup key " + k.dump());
                cfg.subgroup_keys.push_back(*key);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }

    if (cfg.model_maps.empty())
        throw ConfigError("run config needs at least one entry in \"probability_maps\"");
    for (const std::string& name : cfg.ensemble) {
        const bool known = std::any_of(cfg.model_maps.begin(), cfg.model_maps.end(),
                                       [&](const auto& m) { return m.first == name; });
        if (!known) throw ConfigError("ensemble names unknown model \"" + name + "\"");
    }
    if (cfg.ensemble.size() == 1)
        throw ConfigError("an ensemble needs at least two models");
    if (cfg.ensemble.empty() && cfg.model_maps.size() != 1)
        throw ConfigError("multiple probability maps given; list the ones to average in \"ensemble\"");
    if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0))
        throw ConfigError("threshold must lie strictly inside (0, 1)");
    if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
    if (cfg.output_dir.empty()) throw ConfigError("run config is missing \"output_dir\"");
    if (!std::filesystem::exists(cfg.cohort_path))
        throw ConfigError("cohort file does not exist: " + cfg.cohort_path.string());
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open run config " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("run config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_run_config(doc, path.parent_path());
}

namespace {

struct CaseOutcome {
    bool ok{false};
    std::string error;
    EvaluationRecord record;
    std::map<std::string, double> model_dsc;  // per input model
    double gt_smv_ml{0.0};
};

CaseOutcome evaluate_one(const RunConfig& cfg, const CohortRow& row) {
    CaseOutcome out;
    const std::string& id = row.meta.series_id;
    try {
        const std::string gt_path = expand_case_template(cfg.ground_truth_template, id);
        if (!std::filesystem::exists(gt_path))
            throw CaseLoadError("missing ground truth file " + gt_path);
        const BinaryMask gt = mask_from_scalar(nifti::read_file(gt_path));

        std::vector<std::pair<std::string, ProbabilityVolume>> maps;
        for (const auto& [name, templ] : cfg.model_maps) {
            const std::string path = expand_case_template(templ, id);
            if (!std::filesystem::exists(path))
                throw CaseLoadError("missing probability map " + path);
            maps.emplace_back(name, probability_from_scalar(nifti::read_file(path)));
        }

        const ProbabilityVolume* prediction = nullptr;
        ProbabilityVolume ensembled;
        if (!cfg.ensemble.empty()) {
            std::vector<ProbabilityVolume> inputs;
            for (const std::string& name : cfg.ensemble)
                for (const auto& [n, m] : maps)
                    if (n == name) inputs.push_back(m);
            ensembled = ensemble_mean(inputs);
            prediction = &ensembled;
        } else {
            prediction = &maps.front().second;
        }

        out.record = evaluate_case(*prediction, gt, cfg.threshold, cfg.score_mode);
        out.record.case_id = id;
        out.record.location = to_string(row.location.category);
        out.record.sequence = sequence_category_key(row.sequence);
        out.record.view = to_string(row.meta.view);
        out.record.sex = to_string(row.meta.sex);
        out.record.age = row.meta.age;
        out.record.race = row.meta.race.empty() ? "unknown" : row.meta.race;
        if (row.meta.height_m) out.record.smi = compute_smi(out.record.smv_ml, *row.meta.height_m);

        for (const auto& [name, map] : maps) {
            const EvaluationRecord r = evaluate_case(map, gt, cfg.threshold, cfg.score_mode);
            out.model_dsc[name] = r.metrics.dsc.value_or(0.0);
        }
        out.gt_smv_ml = compute_smv_ml(gt);
        out.ok = true;
    } catch (const std::exception& e) {
        out.error = "case " + id + ": " + e.what();
    }
    return out;
}

void append_optional(std::string& line, const std::optional<double>& v) {
    line += ',';
    if (v) line += format_fixed6(*v);
}

nlohmann::json json_or_null(const std::optional<double>& v) {
    if (!v) return nullptr;
    return round6(*v);
}

}  // namespace

void write_cases_csv(std::ostream& out, const std::vector<EvaluationRecord>& records) {
    out << "case_id,location,sequence,view,sex,age,race,tp,fp,fn,tn,"
           "dsc,sensitivity,specificity,hss,smv_ml,smi\n";
    for (const EvaluationRecord& r : records) {
        std::string line = csv_escape(r.case_id);
        line += ',' + csv_escape(r.location);
        line += ',' + csv_escape(r.sequence);
        line += ',' + csv_escape(r.view);
        line += ',' + csv_escape(r.sex);
        line += ',';
        if (r.age) line += format_fixed6(*r.age);
        line += ',' + csv_escape(r.race);
        line += ',' + std::to_string(r.counts.tp);
        line += ',' + std::to_string(r.counts.fp);
        line += ',' + std::to_string(r.counts.fn);
        line += ',' + std::to_string(r.counts.tn);
        append_optional(line, r.metrics.dsc);
        append_optional(line, r.metrics.sensitivity);
        append_optional(line, r.metrics.specificity);
        append_optional(line, r.metrics.hss);
        line += ',' + format_fixed6(r.smv_ml);
        append_optional(line, r.smi);
        out << line << "\n";
    }
}

std::vector<EvaluationRecord> read_cases_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("cases CSV is empty");
    std::vector<EvaluationRecord> records;
    auto opt = [](const std::string& s) -> std::optional<double> {
        if (s.empty()) return std::nullopt;
        return std::stod(s);
    };
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 17) throw Error("cases CSV row has " + std::to_string(f.size()) +
                                        " fields, expected 17");
        EvaluationRecord r;
        r.case_id = f[0];
        r.location = f[1];
        r.sequence = f[2];
        r.view = f[3];
        r.sex = f[4];
        r.age = opt(f[5]);
        r.race = f[6];
        r.counts.tp = std::stoull(f[7]);
        r.counts.fp = std::stoull(f[8]);
        r.counts.fn = std::stoull(f[9]);
        r.counts.tn = std::stoull(f[10]);
        r.metrics.dsc = opt(f[11]);
        r.metrics.sensitivity = opt(f[12]);
        r.metrics.specificity = opt(f[13]);
        r.metrics.hss = opt(f[14]);
        r.smv_ml = std::stod(f[15]);
        r.smi = opt(f[16]);
        records.push_back(std::move(r));
    }
    return records;
}

nlohmann::json split_plan_json(const SplitPlan& plan) {
    auto selections = [](const std::vector<SplitSelection>& sel) {
        nlohmann::json arr = nlohmann::json::array();
        for (const SplitSelection& s : sel)
            arr.push_back({{"series_id", s.series_id},
                           {"location", s.location},
                           {"sequence", s.sequence},
                           {"view", to_string(s.view)},
                           {"note", s.note}});
        return arr;
    };
    return {{"test_a", selections(plan.test_a)}, {"test_b", selections(plan.test_b)}};
}

SplitPlan split_plan_from_json(const nlohmann::json& doc) {
    SplitPlan plan;
    auto selections = [](const nlohmann::json& arr) {
        std::vector<SplitSelection> out;
        for (const auto& item : arr) {
            SplitSelection s;
            s.series_id = item.at("series_id").get<std::string>();
            s.location = item.value("location", "");
            s.sequence = item.value("sequence", "");
            s.view = view_from_string(item.value("view", "unknown"));
            s.note = item.value("note", "");
            out.push_back(std::move(s));
        }
        return out;
    };
    try {
        if (doc.contains("test_a")) plan.test_a = selections(doc.at("test_a"));
        if (doc.contains("test_b")) plan.test_b = selections(doc.at("test_b"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("split plan: ") + e.what());
    }
    return plan;
}

nlohmann::json subgroups_json(const std::vector<EvaluationRecord>& records,
                              const std::vector<SubgroupKey>& keys) {
    nlohmann::json out = nlohmann::json::object();
    for (SubgroupKey key : keys) {
        nlohmann::json groups = nlohmann::json::array();
        for (const SubgroupStat& s : subgroup_summary(records, key)) {
            groups.push_back({{"group", s.group},
                              {"n", s.n},
                              {"mean_dsc", json_or_null(s.mean_dsc)},
                              {"mean_hss", json_or_null(s.mean_hss)},
                              {"excluded_dsc", s.excluded_dsc},
                              {"excluded_hss", s.excluded_hss}});
        }
        out[to_string(key)] = std::move(groups);
    }
    return out;
}

RunReport run_evaluate(const RunConfig& cfg) {
    const CohortTable cohort = build_cohort(read_cohort_file(cfg.cohort_path));
    if (cohort.rows.empty())
        throw ConfigError("cohort " + cfg.cohort_path.string() + " has no evaluable cases");

    std::vector<CohortRow> rows = cohort.rows;
    std::optional<SplitPlan> plan;
    if (cfg.split.arm != SplitArm::all) {
        if (cfg.split.construct) {
            plan = construct_test_splits(cohort);
        } else {
            std::ifstream in(cfg.split.plan_path);
            if (!in) throw ConfigError("cannot open split plan " + cfg.split.plan_path.string());
            nlohmann::json doc;
            try {
                in >> doc;
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("split plan " + cfg.split.plan_path.string() +
                                  " is not valid JSON: " + e.what());
            }
            plan = split_plan_from_json(doc);
        }
        const auto& arm = cfg.split.arm == SplitArm::test_a ? plan->test_a : plan->test_b;
        std::set<std::string> keep;
        for (const SplitSelection& s : arm) keep.insert(s.series_id);
        std::erase_if(rows, [&](const CohortRow& r) { return !keep.count(r.meta.series_id); });
        if (rows.empty())
            throw ConfigError("the selected split arm matches no case in the cohort");
    }
    std::sort(rows.begin(), rows.end(), [](const CohortRow& a, const CohortRow& b) {
        return a.meta.series_id < b.meta.series_id;
    });

    // Per-case work is independent; outcomes land in per-case slots so the
    // assembly below is order-independent.
    std::vector<CaseOutcome> outcomes(rows.size());
    const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(rows.size())));
    if (jobs == 1) {
        for (std::size_t i = 0; i < rows.size(); ++i) outcomes[i] = evaluate_one(cfg, rows[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < rows.size(); i = next.fetch_add(1))
                    outcomes[i] = evaluate_one(cfg, rows[i]);
            });
        for (std::thread& t : pool) t.join();
    }

    RunReport report;
    std::vector<double> pred_smv, gt_smv;
    std::map<std::string, std::vector<double>> model_dsc;
    std::vector<double> ensemble_dsc;
    for (const CaseOutcome& o : outcomes) {
        if (!o.ok) {
            report.case_errors.push_back(o.error);
            continue;
        }
        report.cases.push_back(o.record);
        pred_smv.push_back(o.record.smv_ml);
        gt_smv.push_back(o.gt_smv_ml);
        ensemble_dsc.push_back(o.record.metrics.dsc.value_or(0.0));
        for (const auto& [name, dsc] : o.model_dsc) model_dsc[name].push_back(dsc);
    }

    if (report.cases.empty()) {
        report.exit_code = 4;
        return report;
    }
    report.exit_code = report.case_errors.empty() ? 0 : 3;

    report.subgroups = subgroups_json(report.cases, cfg.subgroup_keys);

    nlohmann::json stats = nlohmann::json::object();
    stats["n_cases"] = static_cast<int>(report.cases.size());
    stats["threshold"] = round6(cfg.threshold);
    if (cfg.split.arm != SplitArm::all)
        stats["split_arm"] = cfg.split.arm == SplitArm::test_a ? "test_a" : "test_b";
    nlohmann::json means = nlohmann::json::object();
    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    means["prediction"] = round6(mean_of(ensemble_dsc));
    for (const auto& [name, v] : model_dsc) means[name] = round6(mean_of(v));
    stats["mean_dsc"] = std::move(means);

    // Wilcoxon: ensemble vs each averaged input, one-sided greater on the
    // paired per-case DSC values.
    nlohmann::json wilcoxon = nlohmann::json::object();
    for (const std::string& name : cfg.ensemble) {
        const std::vector<double>& single = model_dsc[name];
        std::vector<double> diffs(single.size());
        for (std::size_t i = 0; i < single.size(); ++i) diffs[i] = ensemble_dsc[i] - single[i];
        nlohmann::json entry;
        try {
            const TestResult t = wilcoxon_signed_rank(diffs, Alternative::greater);
            entry = {{"statistic", round6(t.statistic)},
                     {"p_value", round6(t.p_value)},
                     {"method", t.method},
                     {"n_effective", t.n_effective},
                     {"alternative", "greater"}};
        } catch (const std::exception& e) {
            entry = {{"error", e.what()}};
        }
        wilcoxon[name] = std::move(entry);
    }
    stats["wilcoxon_dsc_ensemble_greater"] = std::move(wilcoxon);

    nlohmann::json pearson_json;
    try {
        const PearsonResult pr = pearson(pred_smv, gt_smv);
        pearson_json = {{"r", round6(pr.r)}, {"p_two_sided", round6(pr.p_two_sided)}, {"n", pr.n}};
    } catch (const std::exception& e) {
        pearson_json = {{"error", e.what()}};
    }
    stats["pearson_smv_pred_vs_gt"] = std::move(pearson_json);
    report.statistics = std::move(stats);

    std::filesystem::create_directories(cfg.output_dir);
    const auto emit = [&](const std::filesystem::path& name, const std::string& content) {
        const std::filesystem::path path = cfg.output_dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path.string());
        out << content;
        report.written.push_back(path);
    };
    std::ostringstream csv;
    write_cases_csv(csv, report.cases);
    emit("cases.csv", csv.str());
    emit("subgroups.json", report.subgroups.dump(2) + "\n");
    emit("statistics.json", report.statistics.dump(2) + "\n");
    if (plan && cfg.split.construct)
        emit("split.json", split_plan_json(*plan).dump(2) + "\n");
    return report;
}

}  // namespace musev
