#include "musev/curation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "musev/csv.hpp"

namespace musev {

std::string to_string(View v) {
    switch (v) {
        case View::axial: return "axial";
        case View::coronal: return "coronal";
        case View::sagittal: return "sagittal";
        default: return "unknown";
    }
}

std::string to_string(Sex s) {
    switch (s) {
        case Sex::female: return "female";
        case Sex::male: return "male";
        default: return "unknown";
    }
}

namespace {
std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}
}  // namespace

View view_from_string(std::string_view s) {
    const std::string v = lowercase(s);
    if (v == "axial" || v == "ax") return View::axial;
    if (v == "coronal" || v == "cor") return View::coronal;
    if (v == "sagittal" || v == "sag") return View::sagittal;
    return View::unknown;
}

Sex sex_from_string(std::string_view s) {
    const std::string v = lowercase(s);
    if (v == "female" || v == "f") return Sex::female;
    if (v == "male" || v == "m") return Sex::male;
    return Sex::unknown;
}

std::string to_string(SequenceBase b) {
    switch (b) {
        case SequenceBase::t1: return "t1";
        case SequenceBase::t2: return "t2";
        case SequenceBase::pd: return "pd";
        case SequenceBase::stir: return "stir";
        case SequenceBase::tirm: return "tirm";
        case SequenceBase::dixon_t1: return "dixon-t1";
        case SequenceBase::dixon: return "dixon";
        case SequenceBase::vibe_group: return "vibe-group";
        case SequenceBase::se_group: return "se-group";
        case SequenceBase::mra: return "mra";
        default: return "unknown";
    }
}

std::string to_string(Phase p) {
    switch (p) {
        case Phase::water: return "water";
        case Phase::fat: return "fat";
        case Phase::in_phase: return "in-phase";
        case Phase::out_phase: return "out-phase";
        default: return "none";
    }
}

std::string to_string(BodyLocation::Category c) {
    using Cat = BodyLocation::Category;
    switch (c) {
        case Cat::chest: return "chest";
        case Cat::abdomen: return "abdomen";
        case Cat::thoracic_spine: return "thoracic-spine";
        case Cat::lumbar_spine: return "lumbar-spine";
        case Cat::shoulder: return "shoulder";
        case Cat::humerus: return "humerus";
        case Cat::hip: return "hip";
        case Cat::thigh: return "thigh";
        case Cat::knee: return "knee";
        case Cat::lower_leg: return "lower-leg";
        case Cat::misc: return "misc";
        default: return "excluded";
    }
}

namespace {

// Lowercased alphanumeric runs; "+C" and "T1+C" both yield a "c" token.
std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

bool has_token(const std::vector<std::string>& tokens, std::string_view t) {
    return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
}

bool has_phrase(const std::vector<std::string>& tokens, std::string_view a, std::string_view b) {
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
        if (tokens[i] == a && tokens[i + 1] == b) return true;
    return false;
}

const char* kSequenceExclusions[] = {"diffusion", "dwi", "adc", "localizer", "loc",
                                     "scout", "mpr", "mrcp", "twist"};

}  // namespace

SequenceLabel classify_sequence(std::string_view series_description) {
    const std::vector<std::string> tokens = tokenize(series_description);
    SequenceLabel label;

    for (const std::string& t : tokens) {
        for (const char* ex : kSequenceExclusions) {
            if (t == ex) {
                label.excluded = true;
                label.exclusion_reason = ex;
                break;
            }
        }
        if (label.excluded) break;
    }

    const bool has_dixon = has_token(tokens, "dixon");
    if (has_dixon && has_token(tokens, "t1"))
        label.base = SequenceBase::dixon_t1;
    else if (has_dixon)
        label.base = SequenceBase::dixon;
    else if (has_token(tokens, "t1"))
        label.base = SequenceBase::t1;
    else if (has_token(tokens, "t2"))
        label.base = SequenceBase::t2;
    else if (has_token(tokens, "pd"))
        label.base = SequenceBase::pd;
    else if (has_token(tokens, "stir"))
        label.base = SequenceBase::stir;
    else if (has_token(tokens, "tirm"))
        label.base = SequenceBase::tirm;
    else if (has_token(tokens, "vibe") || has_token(tokens, "lava") || has_token(tokens, "grasp") ||
             has_token(tokens, "thrive"))
        label.base = SequenceBase::vibe_group;
    else if (has_token(tokens, "se") || has_token(tokens, "fse") || has_token(tokens, "tse") ||
             has_token(tokens, "haste"))
        label.base = SequenceBase::se_group;
    else if (has_token(tokens, "mra"))
        label.base = SequenceBase::mra;

    label.fat_sat = has_token(tokens, "fs") || has_phrase(tokens, "fat", "sat");

    if (has_token(tokens, "water"))
        label.phase = Phase::water;
    else if (has_phrase(tokens, "in", "phase"))
        label.phase = Phase::in_phase;
    else if (has_phrase(tokens, "out", "phase"))
        label.phase = Phase::out_phase;
    else {
        // bare "fat" is the Dixon fat phase only when it is not part of "fat sat"
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (tokens[i] == "fat" && (i + 1 >= tokens.size() || tokens[i + 1] != "sat")) {
                label.phase = Phase::fat;
                break;
            }
        }
    }

    label.contrast = has_token(tokens, "c");
    return label;
}

BodyLocation classify_body_location(std::string_view protocol_description) {
    using Cat = BodyLocation::Category;
    const std::vector<std::string> tokens = tokenize(protocol_description);
    BodyLocation loc;

    static const char* kHeadFace[] = {"brain",  "cervical", "neck", "face",
                                      "orbit",  "orbits",   "head", "skull",
                                      "pituitary", "iac"};
    for (const char* w : kHeadFace) {
        if (has_token(tokens, w)) {
            loc.category = Cat::excluded;
            loc.exclusion_reason = "head-face";
            return loc;
        }
    }
    if (has_token(tokens, "entire") || has_phrase(tokens, "whole", "body") ||
        has_phrase(tokens, "total", "spine")) {
        loc.category = Cat::excluded;
        loc.exclusion_reason = "multi-area";
        return loc;
    }

    std::set<Cat> matched;
    auto match = [&](Cat cat, std::initializer_list<const char*> words) {
        for (const char* w : words)
            if (has_token(tokens, w)) {
                matched.insert(cat);
                return;
            }
    };
    match(Cat::chest, {"chest", "thorax"});
    match(Cat::abdomen, {"abdomen", "abd", "abdominal"});
    match(Cat::thoracic_spine, {"thoracic"});
    match(Cat::lumbar_spine, {"lumbar"});
    match(Cat::shoulder, {"shoulder"});
    match(Cat::humerus, {"humerus"});
    if (has_phrase(tokens, "upper", "arm")) matched.insert(Cat::humerus);
    match(Cat::hip, {"hip", "hips"});
    match(Cat::thigh, {"thigh", "femur"});
    match(Cat::knee, {"knee"});
    match(Cat::lower_leg, {"calf", "tibia", "fibula"});
    if (has_phrase(tokens, "lower", "leg")) matched.insert(Cat::lower_leg);
    match(Cat::misc, {"hand", "wrist", "foot", "ankle", "finger", "toe", "elbow", "forearm"});

    if (matched.empty()) {
        loc.category = Cat::excluded;
        loc.exclusion_reason = "unrecognized";
    } else if (matched.size() > 1) {
        loc.category = Cat::excluded;
        loc.exclusion_reason = "multi-area";
    } else {
        loc.category = *matched.begin();
    }
    return loc;
}

std::string sequence_category_key(const SequenceLabel& label) {
    std::string key = to_string(label.base);
    if (label.fat_sat) key += " fs";
    if (label.contrast) key += "+c";
    return key;
}

std::string sequence_variant_key(const SequenceLabel& label) {
    std::string key = to_string(label.base);
    switch (label.phase) {
        case Phase::water: key += "-water"; break;
        case Phase::fat: key += "-fat"; break;
        case Phase::in_phase: key += "-inphase"; break;
        case Phase::out_phase: key += "-outphase"; break;
        default: break;
    }
    if (label.fat_sat) key += " fs";
    if (label.contrast) key += "+c";
    return key;
}

int CohortTable::count(const std::string& location, const std::string& variant, View view) const {
    const auto it = frequency.find({location, variant, view});
    return it == frequency.end() ? 0 : it->second;
}

CohortTable build_cohort(const std::vector<SeriesMetadata>& rows) {
    CohortTable table;
    std::set<std::string> seen;
    for (const SeriesMetadata& meta : rows) {
        if (!seen.insert(meta.series_id).second)
            throw DuplicateSeriesId("duplicate series id " + meta.series_id);

        CohortRow row;
        row.meta = meta;
        row.sequence = classify_sequence(meta.series_description);
        row.location = classify_body_location(meta.protocol_description);

        if (row.sequence.excluded) {
            table.excluded.push_back({meta.series_id, "sequence:" + row.sequence.exclusion_reason});
            continue;
        }
        if (row.location.category == BodyLocation::Category::excluded) {
            table.excluded.push_back({meta.series_id, "location:" + row.location.exclusion_reason});
            continue;
        }
        table.frequency[{to_string(row.location.category), sequence_variant_key(row.sequence),
                         meta.view}]++;
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

int view_order(View v) {
    switch (v) {
        case View::axial: return 0;
        case View::coronal: return 1;
        case View::sagittal: return 2;
        default: return 3;
    }
}

// variant -> count within one location, ranked by count desc then name asc
std::vector<std::pair<std::string, int>> rank_variants(const std::map<std::string, int>& counts) {
    std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return ranked;
}

}  // namespace

SplitPlan construct_test_splits(const CohortTable& cohort, const SplitOverrides& overrides) {
    if (cohort.rows.empty()) throw EmptyCohort("cannot construct splits from an empty cohort");

    // Aggregate per-location structures from the classified rows.
    std::map<std::string, std::map<std::string, int>> variant_counts;           // loc -> variant -> n
    std::map<std::string, std::map<std::string, std::map<View, int>>> view_counts;  // per variant
    std::map<std::string, std::set<std::string>> patients;                      // loc -> patient ids
    for (const CohortRow& row : cohort.rows) {
        const std::string loc = to_string(row.location.category);
        const std::string variant = sequence_variant_key(row.sequence);
        variant_counts[loc][variant]++;
        view_counts[loc][variant][row.meta.view]++;
        patients[loc].insert(row.meta.patient_id);
    }

    SplitPlan plan;
    std::set<std::string> in_a;
    std::map<std::string, std::set<std::string>> a_variants;  // loc -> variants taken by Test A

    auto select_all = [&](const std::string& loc, const std::string& variant,
                          std::optional<View> view, const std::string& note) {
        for (const CohortRow& row : cohort.rows) {
            if (to_string(row.location.category) != loc) continue;
            if (sequence_variant_key(row.sequence) != variant) continue;
            if (view && row.meta.view != *view) continue;
            if (!in_a.insert(row.meta.series_id).second) continue;
            plan.test_a.push_back({row.meta.series_id, loc, variant, row.meta.view, note});
        }
        a_variants[loc].insert(variant);
    };

    for (const auto& [loc, counts] : variant_counts) {
        if (loc == "abdomen") {
            // Dual rule: the most frequent axial variant and the most
            // frequent coronal variant are both Test A.
            for (View view : {View::axial, View::coronal}) {
                std::map<std::string, int> per_view;
                for (const auto& [variant, views] : view_counts[loc]) {
                    const auto it = views.find(view);
                    if (it != views.end() && it->second > 0) per_view[variant] = it->second;
                }
                if (per_view.empty()) continue;
                const auto ranked = rank_variants(per_view);
                select_all(loc, ranked[0].first, view,
                           "most frequent " + to_string(view) + " sequence for abdomen");
            }
        } else {
            const auto ranked = rank_variants(counts);
            select_all(loc, ranked[0].first, std::nullopt, "most frequent sequence for " + loc);
        }
    }

    // Test B candidates: per location, the top three variants that Test A
    // did not take there.
    std::map<std::string, std::vector<std::pair<std::string, int>>> candidates;  // variant -> (loc, rank)
    for (const auto& [loc, counts] : variant_counts) {
        const auto ranked = rank_variants(counts);
        int picked = 0;
        for (const auto& [variant, n] : ranked) {
            if (a_variants[loc].count(variant)) continue;
            ++picked;
            candidates[variant].push_back({loc, picked + 1});  // Test A occupies rank 1
            if (picked == 3) break;
        }
    }

    for (const auto& [variant, locs] : candidates) {
        // candidate location with the most patients; ties by location name
        std::string chosen_loc;
        int chosen_rank = 0;
        std::size_t best_patients = 0;
        for (const auto& [loc, rank] : locs) {
            const std::size_t np = patients[loc].size();
            if (chosen_loc.empty() || np > best_patients ||
                (np == best_patients && loc < chosen_loc)) {
                chosen_loc = loc;
                chosen_rank = rank;
                best_patients = np;
            }
        }
        // most frequent view within (location, variant); ties by view order
        const auto& views = view_counts[chosen_loc][variant];
        View chosen_view = View::unknown;
        int best_view_count = -1;
        for (View v : {View::axial, View::coronal, View::sagittal, View::unknown}) {
            const auto it = views.find(v);
            const int n = it == views.end() ? 0 : it->second;
            if (n > best_view_count) {
                best_view_count = n;
                chosen_view = v;
            }
        }
        // smallest series id not already claimed by Test A
        std::string chosen_id;
        for (const CohortRow& row : cohort.rows) {
            if (to_string(row.location.category) != chosen_loc) continue;
            if (sequence_variant_key(row.sequence) != variant) continue;
            if (row.meta.view != chosen_view) continue;
            if (in_a.count(row.meta.series_id)) continue;
            if (chosen_id.empty() || row.meta.series_id < chosen_id) chosen_id = row.meta.series_id;
        }
        if (chosen_id.empty()) continue;
        plan.test_b.push_back({chosen_id, chosen_loc, variant, chosen_view,
                               "rank " + std::to_string(chosen_rank) + " sequence for " + chosen_loc});
    }

    // Manual overrides for judgment-driven membership.
    auto find_row = [&](const std::string& id) -> const CohortRow* {
        for (const CohortRow& row : cohort.rows)
            if (row.meta.series_id == id) return &row;
        return nullptr;
    };
    for (const std::string& id : overrides.force_a)
        if (std::find(overrides.force_b.begin(), overrides.force_b.end(), id) !=
            overrides.force_b.end())
            throw Error("series " + id + " forced into both splits");
    auto erase_id = [](std::vector<SplitSelection>& sel, const std::string& id) {
        std::erase_if(sel, [&](const SplitSelection& s) { return s.series_id == id; });
    };
    auto apply_override = [&](const std::vector<std::string>& ids,
                              std::vector<SplitSelection>& target) {
        for (const std::string& id : ids) {
            const CohortRow* row = find_row(id);
            if (!row) throw Error("override series " + id + " is not in the cohort");
            erase_id(plan.test_a, id);
            erase_id(plan.test_b, id);
            target.push_back({id, to_string(row->location.category),
                              sequence_variant_key(row->sequence), row->meta.view,
                              "manual override"});
        }
    };
    apply_override(overrides.force_a, plan.test_a);
    apply_override(overrides.force_b, plan.test_b);

    auto order = [](const SplitSelection& a, const SplitSelection& b) {
        return std::tie(a.location, a.sequence, a.series_id) <
               std::tie(b.location, b.sequence, b.series_id);
    };
    std::sort(plan.test_a.begin(), plan.test_a.end(), order);
    std::sort(plan.test_b.begin(), plan.test_b.end(), order);
    return plan;
}

AlignmentResult verify_pair_alignment(const ScalarVolume& reference, const ScalarVolume& candidate,
                                      const AlignmentTolerances& tol) {
    AlignmentResult res;
    if (reference.geometry.dims != candidate.geometry.dims) {
        res.reason = "dims";
        return res;
    }
    for (int i = 0; i < 3; ++i) {
        const double a = reference.geometry.spacing[i], b = candidate.geometry.spacing[i];
        if (std::abs(a - b) > tol.spacing_rel * std::max(std::abs(a), std::abs(b))) {
            res.reason = "spacing";
            return res;
        }
    }
    for (int i = 0; i < 16; ++i) {
        if (std::abs(reference.geometry.affine[i] - candidate.geometry.affine[i]) > tol.affine_abs) {
            res.reason = "affine";
            return res;
        }
    }

    // NCC on per-volume min-max scaled intensities.
    auto scaled = [](const ScalarVolume& v) {
        std::vector<double> out(v.values.size());
        float lo = v.values.empty() ? 0.0f : v.values[0], hi = lo;
        for (float x : v.values) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        if (hi == lo) return out;  // all zeros
        for (std::size_t i = 0; i < v.values.size(); ++i)
            out[i] = (static_cast<double>(v.values[i]) - lo) / (static_cast<double>(hi) - lo);
        return out;
    };
    const std::vector<double> a = scaled(reference), b = scaled(candidate);
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 && sbb == 0.0)
        res.ncc = 1.0;  // both constant: identical flat signals
    else if (saa == 0.0 || sbb == 0.0)
        res.ncc = 0.0;
    else
        res.ncc = sab / std::sqrt(saa * sbb);

    if (res.ncc < tol.ncc_min) {
        res.reason = "ncc";
        return res;
    }
    res.aligned = true;
    return res;
}

namespace {

SeriesMetadata metadata_from_fields(const std::map<std::string, std::string>& fields) {
    auto get = [&](const char* name) {
        const auto it = fields.find(name);
        return it == fields.end() ? std::string() : it->second;
    };
    SeriesMetadata m;
    m.patient_id = get("patient_id");
    m.exam_id = get("exam_id");
    m.series_id = get("series_id");
    m.series_description = get("series_description");
    m.protocol_description = get("protocol_description");
    m.view = view_from_string(get("view"));
    m.sex = sex_from_string(get("sex"));
    m.race = get("race");

    const std::string age = get("age");
    if (!age.empty()) {
        m.age = std::stod(age);
        if (m.age < 0.0) throw InvalidMetadata("negative age for series " + m.series_id);
        if (m.age > 90.0) m.age = 90.0;
    }
    const std::string height = get("height_m");
    if (!height.empty()) {
        const double h = std::stod(height);
        if (!(h > 0.3 && h < 2.6))
            throw InvalidMetadata("height_m out of range for series " + m.series_id);
        m.height_m = h;
    }
    const std::string year = get("year");
    if (!year.empty()) m.year = std::stoi(year);

    if (m.series_id.empty()) throw InvalidMetadata("row is missing series_id");
    return m;
}

const char* kCohortColumns[] = {"patient_id", "exam_id", "series_id", "series_description",
                                "protocol_description", "view", "age", "sex", "race",
                                "height_m", "year"};

}  // namespace

std::vector<SeriesMetadata> read_cohort_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidMetadata("cohort CSV is empty");
    const std::vector<std::string> header = split_csv_line(line);

    std::vector<SeriesMetadata> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_csv_line(line);
        std::map<std::string, std::string> named;
        for (std::size_t i = 0; i < header.size() && i < fields.size(); ++i)
            named[header[i]] = fields[i];
        rows.push_back(metadata_from_fields(named));
    }
    return rows;
}

std::vector<SeriesMetadata> read_cohort_json(std::istream& in) {
    nlohmann::json doc;
    in >> doc;
    if (!doc.is_array()) throw InvalidMetadata("cohort JSON must be an array of objects");
    std::vector<SeriesMetadata> rows;
    for (const auto& item : doc) {
        std::map<std::string, std::string> named;
        for (const char* col : kCohortColumns) {
            if (!item.contains(col) || item[col].is_null()) continue;
            const auto& v = item[col];
            if (v.is_string())
                named[col] = v.get<std::string>();
            else
                named[col] = v.dump();
        }
        rows.push_back(metadata_from_fields(named));
    }
    return rows;
}

std::vector<SeriesMetadata> read_cohort_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open cohort file " + path.string());
    if (path.extension() == ".json") return read_cohort_json(in);
    return read_cohort_csv(in);
}

void write_cohort_csv(std::ostream& out, const std::vector<SeriesMetadata>& rows) {
    for (std::size_t i = 0; i < std::size(kCohortColumns); ++i)
        out << (i ? "," : "") << kCohortColumns[i];
    out << "\n";
    for (const SeriesMetadata& m : rows) {
        std::ostringstream age, height;
        age << m.age;
        if (m.height_m) height << *m.height_m;
        const std::string fields[] = {m.patient_id, m.exam_id, m.series_id,
                                      m.series_description, m.protocol_description,
                                      to_string(m.view), age.str(), to_string(m.sex),
                                      m.race, height.str(), std::to_string(m.year)};
        for (std::size_t i = 0; i < std::size(fields); ++i)
            out << (i ? "," : "") << csv_escape(fields[i]);
        out << "\n";
    }
}

}  // namespace musev
