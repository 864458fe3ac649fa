// Standalone acceptance suite. Each numbered criterion prints exactly one
// PASS/FAIL line; the process exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "musev/analysis.hpp"
#include "musev/curation.hpp"
#include "musev/metrics.hpp"
#include "musev/nifti.hpp"
#include "musev/phantom.hpp"
#include "musev/pipeline.hpp"
#include "musev/preprocess.hpp"
#include "test_support.hpp"

using namespace musev;
namespace mt = musev::test;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("%s  criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion, name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixture_path(const std::string& name) {
    return std::string(MUSEV_FIXTURE_DIR) + "/" + name;
}

// 50-phantom analog cohort shared by criteria 6 and 8.
struct AnalogCase {
    double dsc_ensemble, dsc_a, dsc_b;
    double smv_pred, smv_gt;
};

std::vector<AnalogCase> build_analog_cohort() {
    std::vector<AnalogCase> cases;
    cases.reserve(50);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        PhantomConfig cfg;
        cfg.dims = {64, 64, 64};
        cfg.n_muscle_lobes = 2 + static_cast<int>(seed % 3);
        cfg.noise_sigma = 0.0;
        cfg.seed = seed;
        const PhantomCase pc = generate_phantom(cfg);

        const ProbabilityVolume map_a =
            simulate_probability_map(pc.mask, 1, 0.15, 1000 + seed);
        const ProbabilityVolume map_b =
            simulate_probability_map(pc.mask, 1, 0.15, 2000 + seed);
        const ProbabilityVolume ens = ensemble_mean({map_a, map_b});

        AnalogCase c;
        c.dsc_a = *evaluate_case(map_a, pc.mask, 0.5).metrics.dsc;
        c.dsc_b = *evaluate_case(map_b, pc.mask, 0.5).metrics.dsc;
        const EvaluationRecord rec = evaluate_case(ens, pc.mask, 0.5);
        c.dsc_ensemble = *rec.metrics.dsc;
        c.smv_pred = rec.smv_ml;
        c.smv_gt = compute_smv_ml(pc.mask);
        cases.push_back(c);
    }
    return cases;
}

// --- criteria ------------------------------------------------------------

void criterion_1_metric_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937 rng(101);
    std::uniform_int_distribution<int> dim(1, 16);
    std::uniform_real_distribution<double> density(0.05, 0.95);
    bool ok = true;
    std::string detail;
    for (int it = 0; it < 200 && ok; ++it) {
        const int nx = dim(rng), ny = dim(rng), nz = dim(rng);
        const BinaryMask pred = mt::random_mask(rng, nx, ny, nz, density(rng));
        const BinaryMask gt = mt::random_mask(rng, nx, ny, nz, density(rng));

        const ConfusionCounts c = confusion_counts(pred, gt);
        const mt::BruteCounts bc = mt::brute_force_counts(pred, gt);
        if (c.tp != static_cast<std::uint64_t>(bc.tp) ||
            c.fp != static_cast<std::uint64_t>(bc.fp) ||
            c.fn != static_cast<std::uint64_t>(bc.fn) ||
            c.tn != static_cast<std::uint64_t>(bc.tn)) {
            ok = false;
            detail = "count mismatch at iteration " + std::to_string(it);
            break;
        }
        const CaseMetrics m = compute_metrics(c);
        // independent ratio formulas
        const double dice = mt::brute_force_dice(bc);
        if (std::abs(*m.dsc - dice) > 1e-12) ok = false;
        if (bc.tp + bc.fn > 0) {
            const double se = static_cast<double>(bc.tp) / (bc.tp + bc.fn);
            if (std::abs(*m.sensitivity - se) > 1e-12) ok = false;
        }
        if (bc.tn + bc.fp > 0) {
            const double sp = static_cast<double>(bc.tn) / (bc.tn + bc.fp);
            if (std::abs(*m.specificity - sp) > 1e-12) ok = false;
        }
        if (m.sensitivity && m.specificity && m.hss) {
            const double se = *m.sensitivity, sp = *m.specificity;
            const double hss = (se == 0.0 && sp == 0.0) ? 0.0 : 2.0 * se * sp / (se + sp);
            if (std::abs(*m.hss - hss) > 1e-12) ok = false;
        }
        if (!ok && detail.empty()) detail = "ratio mismatch at iteration " + std::to_string(it);
    }
    const double secs = seconds_since(t0);
    if (secs >= 5.0) {
        ok = false;
        detail = "runtime " + std::to_string(secs) + "s";
    }
    report(1, "metric oracle equivalence on 200 random pairs", ok, detail);
}

void criterion_2_formula_spot_checks() {
    const CaseMetrics dsc_case = compute_metrics({3, 1, 2, 0});
    const bool dsc_ok = std::abs(*dsc_case.dsc - 0.666667) < 1e-6 &&
                        std::abs(*dsc_case.dsc - 2.0 * 3 / (2.0 * 3 + 1 + 2)) < 1e-9;
    // se = 0.8, sp = 1.0 from tp=8, fn=2, tn=10, fp=0
    const CaseMetrics hss_case = compute_metrics({8, 0, 2, 10});
    const bool hss_ok = std::abs(*hss_case.hss - 0.888889) < 1e-6 &&
                        std::abs(*hss_case.hss - 1.6 / 1.8) < 1e-9;
    report(2, "formula spot checks (DSC 0.666667, HSS 0.888889)", dsc_ok && hss_ok);
}

void criterion_3_nifti_roundtrip() {
    std::mt19937 rng(103);
    bool ok = true;
    std::string detail;

    std::uniform_int_distribution<int> dim(1, 12);
    std::uniform_real_distribution<float> sp(0.25f, 5.0f);
    for (int it = 0; it < 50 && ok; ++it) {
        ScalarVolume v = mt::random_scalar(rng, dim(rng), dim(rng), dim(rng), -1000.0f, 1000.0f);
        v.geometry = VolumeGeometry::diagonal(v.geometry.dims, {sp(rng), sp(rng), sp(rng)});
        const ScalarVolume back = nifti::read(nifti::write(v, nifti::kDtypeFloat32));
        if (back.geometry != v.geometry) {
            ok = false;
            detail = "geometry drift (float32)";
            break;
        }
        for (std::size_t i = 0; i < v.values.size(); ++i)
            if (std::bit_cast<std::uint32_t>(back.values[i]) !=
                std::bit_cast<std::uint32_t>(v.values[i])) {
                ok = false;
                detail = "float32 voxels not bit-exact";
                break;
            }

        // integer-valued twins at dtypes 2 and 4
        ScalarVolume ints = v;
        std::uniform_int_distribution<int> u8(0, 255), i16(-32768, 32767);
        for (float& x : ints.values) x = static_cast<float>(u8(rng));
        if (nifti::read(nifti::write(ints, nifti::kDtypeUint8)).values != ints.values) {
            ok = false;
            detail = "uint8 roundtrip drift";
        }
        for (float& x : ints.values) x = static_cast<float>(i16(rng));
        if (nifti::read(nifti::write(ints, nifti::kDtypeInt16)).values != ints.values) {
            ok = false;
            detail = "int16 roundtrip drift";
        }
    }

    if (ok) {
        ScalarVolume v = mt::random_scalar(rng, 5, 4, 3, -50.0f, 50.0f);
        v.geometry = VolumeGeometry::diagonal(v.geometry.dims, {0.5, 1.25, 2.0});
        const std::vector<std::uint8_t> le = nifti::write(v, nifti::kDtypeFloat32);
        const std::vector<std::uint8_t> be = mt::to_big_endian_nifti(le, nifti::kDtypeFloat32);
        const ScalarVolume from_le = nifti::read(le);
        const ScalarVolume from_be = nifti::read(be);
        if (from_le.values != from_be.values || from_le.geometry != from_be.geometry) {
            ok = false;
            detail = "big-endian twin decoded differently";
        }
    }
    report(3, "NIFTI roundtrip (50 volumes) and endianness twin", ok, detail);
}

void criterion_4_preprocessing() {
    bool ok = true;
    std::string detail;

    // exact affine invariance of the normalization
    std::mt19937 rng(104);
    std::uniform_int_distribution<int> val(-400, 400);
    for (int it = 0; it < 30 && ok; ++it) {
        Slice2D s;
        s.height = 6;
        s.width = 5;
        s.values.resize(30);
        for (float& x : s.values) x = static_cast<float>(val(rng));
        Slice2D mapped = s;
        for (float& x : mapped.values) x = 2.0f * x + 11.0f;
        if (minmax_normalize(mapped).values != minmax_normalize(s).values) {
            ok = false;
            detail = "normalization not affine-invariant";
        }
    }

    // bit-exact resize identity
    if (ok) {
        Slice2D s;
        s.height = 9;
        s.width = 7;
        s.values.resize(63);
        std::uniform_real_distribution<float> dist(-3.0f, 3.0f);
        for (float& x : s.values) x = dist(rng);
        if (resize(s, 9, 7, ResizeMode::bilinear).values != s.values ||
            resize(s, 9, 7, ResizeMode::nearest).values != s.values) {
            ok = false;
            detail = "resize identity not bit-exact";
        }
    }

    // hand bilinear value
    if (ok) {
        Slice2D s;
        s.height = 2;
        s.width = 2;
        s.values = {0.0f, 10.0f, 20.0f, 30.0f};
        const Slice2D up = resize(s, 4, 4, ResizeMode::bilinear);
        if (std::abs(up.at(1, 2) - 12.5) > 1e-9) {
            ok = false;
            detail = "bilinear value at (1,2) is " + std::to_string(up.at(1, 2));
        }
    }

    // model-space mask roundtrip at the real 1024 target
    if (ok) {
        PhantomConfig cfg;
        cfg.dims = {128, 128, 16};
        cfg.n_muscle_lobes = 3;
        cfg.noise_sigma = 0.0;
        cfg.seed = 21;
        const PhantomCase pc = generate_phantom(cfg);
        std::vector<Slice2D> model = to_model_space(scalar_from_mask(pc.mask), SliceAxis::third);
        for (Slice2D& s : model)
            for (float& v : s.values) v /= 255.0f;
        const BinaryMask rebuilt = binarize(from_model_space(model, pc.mask.geometry), 0.5);
        const double dice = mt::dice_between(rebuilt, pc.mask);
        if (dice < 0.95) {
            ok = false;
            detail = "roundtrip dice " + std::to_string(dice);
        }
    }
    report(4, "preprocessing contracts (normalize, resize, roundtrip)", ok, detail);
}

void criterion_5_wilcoxon_exactness() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;

    std::mt19937 rng(105);
    std::uniform_int_distribution<int> len(1, 10);
    std::uniform_int_distribution<int> val(-6, 6);
    int done = 0;
    while (done < 100 && ok) {
        std::vector<double> diffs(len(rng));
        for (double& d : diffs) d = val(rng);
        if (std::all_of(diffs.begin(), diffs.end(), [](double d) { return d == 0.0; })) continue;
        ++done;
        const mt::OracleTails oracle = mt::wilcoxon_oracle(diffs);
        const double pg = wilcoxon_signed_rank(diffs, Alternative::greater).p_value;
        const double pl = wilcoxon_signed_rank(diffs, Alternative::less).p_value;
        const double pt = wilcoxon_signed_rank(diffs, Alternative::two_sided).p_value;
        if (std::abs(pg - oracle.p_greater) > 1e-12 || std::abs(pl - oracle.p_less) > 1e-12 ||
            std::abs(pt - oracle.p_two_sided) > 1e-12) {
            ok = false;
            detail = "exact p disagrees with the enumeration oracle";
        }
    }

    if (ok) {
        const TestResult t =
            wilcoxon_signed_rank(std::vector<double>{1, 2, 3, 4, 5}, Alternative::greater);
        if (std::abs(t.p_value - 0.03125) > 1e-12 || t.statistic != 15.0) {
            ok = false;
            detail = "all-positive n=5 case";
        }
    }

    if (ok) {
        std::normal_distribution<double> dist(0.25, 1.0);
        for (int m = 15; m <= 20 && ok; ++m) {
            for (int rep = 0; rep < 4 && ok; ++rep) {
                std::vector<double> diffs(m);
                for (double& d : diffs) d = dist(rng);
                const double pe =
                    wilcoxon_signed_rank(diffs, Alternative::greater, TestMethod::exact).p_value;
                const double pn = wilcoxon_signed_rank(diffs, Alternative::greater,
                                                       TestMethod::normal_approximation)
                                      .p_value;
                if (std::abs(pe - pn) >= 0.01) {
                    ok = false;
                    detail = "exact/normal gap " + std::to_string(std::abs(pe - pn)) +
                             " at m=" + std::to_string(m);
                }
            }
        }
    }

    const double secs = seconds_since(t0);
    if (secs >= 30.0) {
        ok = false;
        detail = "runtime " + std::to_string(secs) + "s";
    }
    report(5, "Wilcoxon exactness vs 2^n enumeration", ok, detail);
}

void criterion_6_ensemble_improvement(const std::vector<AnalogCase>& cohort, double secs) {
    bool ok = true;
    std::string detail;

    double mean_ens = 0, mean_a = 0, mean_b = 0;
    std::vector<double> diff_a, diff_b;
    for (const AnalogCase& c : cohort) {
        mean_ens += c.dsc_ensemble;
        mean_a += c.dsc_a;
        mean_b += c.dsc_b;
        diff_a.push_back(c.dsc_ensemble - c.dsc_a);
        diff_b.push_back(c.dsc_ensemble - c.dsc_b);
    }
    mean_ens /= cohort.size();
    mean_a /= cohort.size();
    mean_b /= cohort.size();

    if (!(mean_ens >= mean_a && mean_ens >= mean_b)) {
        ok = false;
        detail = "ensemble mean DSC below a single model";
    }
    const TestResult ta = wilcoxon_signed_rank(diff_a, Alternative::greater);
    const TestResult tb = wilcoxon_signed_rank(diff_b, Alternative::greater);
    if (!(ta.p_value < 0.05 && tb.p_value < 0.05)) {
        ok = false;
        detail = "one-sided p not significant: " + std::to_string(ta.p_value) + ", " +
                 std::to_string(tb.p_value);
    }
    if (secs >= 60.0) {
        ok = false;
        detail = "runtime " + std::to_string(secs) + "s";
    }
    std::ostringstream note;
    note << "mean DSC ens/a/b = " << format_fixed6(mean_ens) << "/" << format_fixed6(mean_a)
         << "/" << format_fixed6(mean_b) << ", p = " << ta.p_value << ", " << tb.p_value;
    report(6, "ensemble improvement analog on 50 phantoms", ok, ok ? note.str() : detail);
}

void criterion_7_smv_smi() {
    bool ok = true;
    std::string detail;

    BinaryMask hundred;
    hundred.geometry = VolumeGeometry::diagonal({100, 1, 1}, {1.0, 1.0, 5.0});
    hundred.labels.assign(100, 1);
    if (compute_smv_ml(hundred) != 0.5) {
        ok = false;
        detail = "100 voxels at 1x1x5 mm";
    }

    // exact additivity over disjoint masks
    std::mt19937 rng(107);
    BinaryMask m1 = mt::random_mask(rng, 10, 10, 10, 0.25);
    BinaryMask m2;
    m2.geometry = m1.geometry;
    m2.labels.assign(m1.labels.size(), 0);
    for (std::size_t i = 0; i < m1.labels.size(); ++i)
        if (m1.labels[i] == 0 && i % 2 == 0) m2.labels[i] = 1;
    BinaryMask both = m1;
    for (std::size_t i = 0; i < m1.labels.size(); ++i) both.labels[i] = m1.labels[i] | m2.labels[i];
    if (compute_smv_ml(both) != compute_smv_ml(m1) + compute_smv_ml(m2)) {
        ok = false;
        detail = "additivity not exact";
    }

    // analytic single ellipsoid at 64^3
    PhantomConfig cfg;
    cfg.dims = {64, 64, 64};
    cfg.n_muscle_lobes = 1;
    cfg.noise_sigma = 0.0;
    cfg.seed = 0;
    const PhantomCase pc = generate_phantom(cfg);
    const Ellipsoid lobe = muscle_lobes(cfg)[0];
    const double analytic_ml =
        lobe.volume_voxels() * pc.mask.geometry.voxel_volume_mm3() / 1000.0;
    const double measured_ml = compute_smv_ml(pc.mask);
    if (std::abs(measured_ml - analytic_ml) / analytic_ml >= 0.03) {
        ok = false;
        detail = "ellipsoid volume off by " +
                 std::to_string(std::abs(measured_ml - analytic_ml) / analytic_ml);
    }

    if (std::abs(compute_smi(500.0, 1.75) - 500.0 / 1.75) > 1e-9) {
        ok = false;
        detail = "smi quotient";
    }
    report(7, "SMV/SMI correctness (hand value, additivity, analytic ellipsoid)", ok, detail);
}

void criterion_8_pearson_analog(const std::vector<AnalogCase>& cohort) {
    bool ok = true;
    std::string detail;

    std::vector<double> pred, gt;
    for (const AnalogCase& c : cohort) {
        pred.push_back(c.smv_pred);
        gt.push_back(c.smv_gt);
    }
    const PearsonResult pr = pearson(pred, gt);
    if (!(pr.r >= 0.99)) {
        ok = false;
        detail = "r = " + std::to_string(pr.r);
    }

    const std::vector<double> xs{1, 2, 3, 4, 5, 6};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(3.0 * x - 2.0);
    const PearsonResult lin = pearson(xs, ys);
    if (lin.r != 1.0 || lin.p_two_sided != 0.0) {
        ok = false;
        detail = "exact linear input";
    }
    report(8, "Pearson analog (predicted vs ground-truth SMV)", ok,
           ok ? "r = " + format_fixed6(pr.r) : detail);
}

void criterion_9_curation_fixtures() {
    bool ok = true;
    std::string detail;

    // classifier vocabulary fixture
    std::ifstream in(fixture_path("sequence_labels.json"));
    if (!in) {
        report(9, "curation fixtures", false, "fixture file missing");
        return;
    }
    nlohmann::json fixtures;
    in >> fixtures;
    if (fixtures.size() != 25) {
        ok = false;
        detail = "fixture should hold 25 descriptions";
    }
    for (const auto& fx : fixtures) {
        const SequenceLabel label = classify_sequence(fx.at("description").get<std::string>());
        bool match = label.excluded == fx.value("excluded", false);
        if (match && !label.excluded) {
            match = to_string(label.base) == fx.value("base", "unknown") &&
                    label.fat_sat == fx.value("fat_sat", false) &&
                    to_string(label.phase) == fx.value("phase", "none") &&
                    label.contrast == fx.value("contrast", false);
        } else if (match && label.excluded) {
            match = label.exclusion_reason == fx.value("reason", "");
        }
        if (!match) {
            ok = false;
            detail = "mismatch on \"" + fx.at("description").get<std::string>() + "\"";
            break;
        }
    }

    // split construction on the frequency fixture
    if (ok) {
        std::ifstream cohort_in(fixture_path("etable2_cohort.csv"));
        const CohortTable cohort = build_cohort(read_cohort_csv(cohort_in));
        const SplitPlan plan = construct_test_splits(cohort);

        std::set<std::pair<std::string, std::string>> abdomen_a;
        for (const SplitSelection& s : plan.test_a)
            if (s.location == "abdomen") abdomen_a.insert({s.sequence, to_string(s.view)});
        if (abdomen_a != std::set<std::pair<std::string, std::string>>{
                             {"dixon-t1-water", "axial"}, {"se-group", "coronal"}}) {
            ok = false;
            detail = "abdomen Test A selection";
        }

        // Test B sequences per location equal the next three ranked variants
        const std::map<std::string, std::set<std::string>> expected_b = {
            {"abdomen", {"dixon-t1-fat", "t1", "t2"}},
            {"hip", {"vibe-group", "t2 fs", "stir"}},
            {"shoulder", {"pd fs", "t1 fs", "pd"}},
            {"thigh", {"dixon-t1-inphase", "t2"}},
            {"knee", {"pd", "t2 fs"}},
            {"lumbar-spine", {"t2", "stir"}},
            {"misc", {"t2 fs", "t1+c"}}};
        std::set<std::string> expected_variants;
        for (const auto& [loc, variants] : expected_b)
            expected_variants.insert(variants.begin(), variants.end());
        std::set<std::string> got_variants;
        for (const SplitSelection& s : plan.test_b) {
            got_variants.insert(s.sequence);
            // one series per variant
        }
        if (got_variants != expected_variants || plan.test_b.size() != expected_variants.size()) {
            ok = false;
            detail = "Test B variants are not the 2nd-4th ranked set";
        }

        std::set<std::string> a_ids;
        for (const SplitSelection& s : plan.test_a) a_ids.insert(s.series_id);
        for (const SplitSelection& s : plan.test_b)
            if (a_ids.count(s.series_id)) {
                ok = false;
                detail = "splits share series " + s.series_id;
            }
    }
    report(9, "curation fixtures (vocabulary + eTable2-style splits)", ok, detail);
}

void criterion_10_determinism() {
    bool ok = true;
    std::string detail;

    const fs::path base = fs::temp_directory_path() / "musev_acceptance_determinism";
    fs::remove_all(base);
    fs::create_directories(base);

    std::vector<SeriesMetadata> rows;
    for (int i = 0; i < 6; ++i) {
        PhantomConfig cfg;
        cfg.dims = {32, 32, 32};
        cfg.noise_sigma = 0.0;
        cfg.seed = static_cast<std::uint64_t>(300 + i);
        PhantomCase pc = generate_phantom(cfg);
        const std::string id = pc.metadata.series_id;
        nifti::write_file(base / (id + "_mask.nii"), pc.mask);
        nifti::write_file(base / (id + "_a.nii"),
                          simulate_probability_map(pc.mask, 1, 0.1, cfg.seed + 11));
        nifti::write_file(base / (id + "_b.nii"),
                          simulate_probability_map(pc.mask, 1, 0.1, cfg.seed + 22));
        rows.push_back(pc.metadata);
    }
    {
        std::ofstream out(base / "cohort.csv");
        write_cohort_csv(out, rows);
    }

    auto run_with = [&](const std::string& out_name, int jobs) {
        nlohmann::json doc;
        doc["cohort"] = (base / "cohort.csv").string();
        doc["ground_truth"] = (base / "{case}_mask.nii").string();
        doc["probability_maps"] = {{"model_a", (base / "{case}_a.nii").string()},
                                   {"model_b", (base / "{case}_b.nii").string()}};
        doc["ensemble"] = {"model_a", "model_b"};
        doc["output_dir"] = (base / out_name).string();
        doc["jobs"] = jobs;
        doc["seed"] = 0;
        return run_evaluate(parse_run_config(doc));
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    try {
        const RunReport r1 = run_with("run1", 1);
        run_with("run2", 1);
        run_with("run4", 4);
        run_with("run4b", 4);
        if (r1.exit_code != 0) {
            ok = false;
            detail = "run failed with exit " + std::to_string(r1.exit_code);
        }
        for (const char* name : {"cases.csv", "subgroups.json", "statistics.json"}) {
            const std::string ref = slurp(base / "run1" / name);
            if (ref.empty()) {
                ok = false;
                detail = std::string(name) + " is empty";
            }
            for (const char* run : {"run2", "run4", "run4b"}) {
                if (slurp(base / run / name) != ref) {
                    ok = false;
                    detail = std::string(name) + " differs in " + run;
                }
            }
        }
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    fs::remove_all(base);
    report(10, "byte-identical reports across runs and job counts", ok, detail);
}

}  // namespace

int main() {
    criterion_1_metric_oracle();
    criterion_2_formula_spot_checks();
    criterion_3_nifti_roundtrip();
    criterion_4_preprocessing();
    criterion_5_wilcoxon_exactness();

    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<AnalogCase> cohort = build_analog_cohort();
    criterion_6_ensemble_improvement(cohort, seconds_since(t0));
    criterion_7_smv_smi();
    criterion_8_pearson_analog(cohort);
    criterion_9_curation_fixtures();
    criterion_10_determinism();

    if (g_failures == 0) {
        std::printf("all 10 acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria FAILED\n", g_failures);
    return 1;
}
