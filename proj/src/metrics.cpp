#include "musev/metrics.hpp"

#include <algorithm>
#include <map>

#include "musev/analysis.hpp"

namespace musev {

ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt) {
    if (!same_grid(pred.geometry, gt.geometry))
        throw GeometryMismatch("prediction and ground truth are not on the same grid");
    ConfusionCounts c;
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        const bool p = pred.labels[i] != 0;
        const bool g = gt.labels[i] != 0;
        if (p && g)
            ++c.tp;
        else if (p && !g)
            ++c.fp;
        else if (!p && g)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

CaseMetrics compute_metrics(const ConfusionCounts& c) {
    CaseMetrics m;
    m.gt_empty = (c.tp + c.fn) == 0;
    m.pred_empty = (c.tp + c.fp) == 0;

    const std::uint64_t dice_denom = 2 * c.tp + c.fp + c.fn;
    m.dsc = dice_denom == 0 ? 1.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(dice_denom);

    if (c.tp + c.fn > 0)
        m.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (c.tn + c.fp > 0)
        m.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);

    if (m.sensitivity && m.specificity) {
        const double se = *m.sensitivity, sp = *m.specificity;
        m.hss = (se == 0.0 && sp == 0.0) ? 0.0 : 2.0 * se * sp / (se + sp);
    }
    return m;
}

namespace {

// Mean of the defined per-slice values; counts slices whose value is absent.
struct SliceMean {
    double sum{0};
    int n{0};
    int excluded{0};
    void add(const std::optional<double>& v) {
        if (v) {
            sum += *v;
            ++n;
        } else {
            ++excluded;
        }
    }
    std::optional<double> mean() const {
        if (n == 0) return std::nullopt;
        return sum / n;
    }
};

}  // namespace

EvaluationRecord evaluate_case(const ProbabilityVolume& pred, const BinaryMask& gt,
                               double threshold, ScoreMode mode) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw InvalidThreshold("threshold must lie strictly inside (0, 1)");
    if (!same_grid(pred.geometry, gt.geometry))
        throw GeometryMismatch("prediction and ground truth are not on the same grid");

    const BinaryMask hard = binarize(pred, threshold);

    EvaluationRecord rec;
    rec.counts = confusion_counts(hard, gt);
    rec.smv_ml = compute_smv_ml(hard);

    if (mode == ScoreMode::volume) {
        rec.metrics = compute_metrics(rec.counts);
        return rec;
    }

    // per-slice mode: metrics averaged over third-axis slices
    const auto& g = gt.geometry;
    SliceMean dsc, se, sp, hss;
    bool gt_empty = true, pred_empty = true;
    for (int z = 0; z < g.dims[2]; ++z) {
        ConfusionCounts c;
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                const bool p = hard.at(x, y, z) != 0;
                const bool t = gt.at(x, y, z) != 0;
                if (p && t) ++c.tp;
                else if (p) ++c.fp;
                else if (t) ++c.fn;
                else ++c.tn;
            }
        const CaseMetrics m = compute_metrics(c);
        dsc.add(m.dsc);
        se.add(m.sensitivity);
        sp.add(m.specificity);
        hss.add(m.hss);
        gt_empty = gt_empty && m.gt_empty;
        pred_empty = pred_empty && m.pred_empty;
    }
    rec.metrics.dsc = dsc.mean();
    rec.metrics.sensitivity = se.mean();
    rec.metrics.specificity = sp.mean();
    rec.metrics.hss = hss.mean();
    rec.metrics.gt_empty = gt_empty;
    rec.metrics.pred_empty = pred_empty;
    return rec;
}

std::string to_string(SubgroupKey key) {
    switch (key) {
        case SubgroupKey::location: return "location";
        case SubgroupKey::sequence: return "sequence";
        case SubgroupKey::sex: return "sex";
        case SubgroupKey::age_bin: return "age-bin";
        default: return "race";
    }
}

std::optional<SubgroupKey> subgroup_key_from_string(const std::string& s) {
    if (s == "location") return SubgroupKey::location;
    if (s == "sequence") return SubgroupKey::sequence;
    if (s == "sex") return SubgroupKey::sex;
    if (s == "age-bin" || s == "age_bin" || s == "age") return SubgroupKey::age_bin;
    if (s == "race") return SubgroupKey::race;
    return std::nullopt;
}

std::string age_bin_name(double age) {
    if (age < 18.0) return "<18";
    if (age < 40.0) return "18-39";
    if (age < 60.0) return "40-59";
    return "60+";
}

namespace {
std::string group_name(const EvaluationRecord& r, SubgroupKey key) {
    switch (key) {
        case SubgroupKey::location: return r.location.empty() ? "unknown" : r.location;
        case SubgroupKey::sequence: return r.sequence.empty() ? "unknown" : r.sequence;
        case SubgroupKey::sex: return r.sex.empty() ? "unknown" : r.sex;
        case SubgroupKey::age_bin: return r.age ? age_bin_name(*r.age) : "unknown";
        default: return r.race.empty() ? "unknown" : r.race;
    }
}
}  // namespace

std::vector<SubgroupStat> subgroup_summary(const std::vector<EvaluationRecord>& records,
                                           SubgroupKey key) {
    if (records.empty()) throw EmptyInput("subgroup summary needs at least one record");
    std::map<std::string, SubgroupStat> groups;
    std::map<std::string, SliceMean> dsc, hss;
    for (const EvaluationRecord& r : records) {
        const std::string name = group_name(r, key);
        SubgroupStat& s = groups[name];
        s.group = name;
        ++s.n;
        dsc[name].add(r.metrics.dsc);
        hss[name].add(r.metrics.hss);
    }
    std::vector<SubgroupStat> out;
    out.reserve(groups.size());
    for (auto& [name, stat] : groups) {
        stat.mean_dsc = dsc[name].mean();
        stat.mean_hss = hss[name].mean();
        stat.excluded_dsc = dsc[name].excluded;
        stat.excluded_hss = hss[name].excluded;
        out.push_back(stat);
    }
    return out;
}

}  // namespace musev
