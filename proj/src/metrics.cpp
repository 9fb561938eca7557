#include "calibfair/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calibfair/error.hpp"

namespace calibfair {

double ReliabilityDiagram::ece() const {
    std::size_t total = 0;
    for (const auto& bin : bins) total += bin.count;
    if (total == 0) return 0.0;
    double sum = 0.0;
    for (const auto& bin : bins) {
        sum += (static_cast<double>(bin.count) / static_cast<double>(total)) *
               std::abs(bin.accuracy - bin.mean_confidence);
    }
    return sum;
}

double accuracy(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw ValidationError("accuracy: no records");
    std::size_t correct = 0;
    for (const auto& r : records) correct += r.correct();
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

double f1(const std::vector<PredictionRecord>& records, int positive_class) {
    if (records.empty()) throw ValidationError("f1: no records");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& r : records) {
        bool pred_pos = r.predicted == positive_class;
        bool label_pos = r.label == positive_class;
        if (pred_pos && label_pos) ++tp;
        else if (pred_pos) ++fp;
        else if (label_pos) ++fn;
    }
    std::size_t denom = 2 * tp + fp + fn;
    if (denom == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double macro_f1(const std::vector<PredictionRecord>& records, int num_classes) {
    if (records.empty()) throw ValidationError("macro_f1: no records");
    if (num_classes < 1) throw ValidationError("macro_f1: bad class count");
    double sum = 0.0;
    for (int c = 0; c < num_classes; ++c) sum += f1(records, c);
    return sum / static_cast<double>(num_classes);
}

ReliabilityDiagram reliability(const std::vector<PredictionRecord>& records,
                               int num_bins, BinningMode mode) {
    if (records.empty()) throw ValidationError("reliability: no records");
    if (num_bins < 1) throw ValidationError("reliability: num_bins must be positive");

    const std::size_t n = records.size();
    ReliabilityDiagram diagram;
    diagram.mode = mode;
    diagram.num_bins = num_bins;

    if (mode == BinningMode::EqualMass) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return records[a].confidence < records[b].confidence;
        });
        // Sizes differ by at most one, larger bins first.
        std::size_t bins = std::min<std::size_t>(num_bins, n);
        std::size_t base = n / bins;
        std::size_t extra = n % bins;
        std::size_t pos = 0;
        for (std::size_t b = 0; b < bins; ++b) {
            std::size_t size = base + (b < extra ? 1 : 0);
            ReliabilityBin bin;
            bin.count = size;
            bin.lower = records[order[pos]].confidence;
            bin.upper = records[order[pos + size - 1]].confidence;
            double conf_sum = 0.0;
            std::size_t correct = 0;
            for (std::size_t i = 0; i < size; ++i) {
                const auto& r = records[order[pos + i]];
                conf_sum += r.confidence;
                correct += r.correct();
            }
            bin.mean_confidence = conf_sum / static_cast<double>(size);
            bin.accuracy = static_cast<double>(correct) / static_cast<double>(size);
            diagram.bins.push_back(bin);
            pos += size;
        }
    } else {
        std::vector<std::size_t> counts(num_bins, 0);
        std::vector<double> conf_sums(num_bins, 0.0);
        std::vector<std::size_t> corrects(num_bins, 0);
        for (const auto& r : records) {
            // Confidence c lands in ((b-1)/B, b/B].
            int idx = static_cast<int>(std::ceil(r.confidence * num_bins)) - 1;
            idx = std::clamp(idx, 0, num_bins - 1);
            ++counts[idx];
            conf_sums[idx] += r.confidence;
            corrects[idx] += r.correct();
        }
        for (int b = 0; b < num_bins; ++b) {
            if (counts[b] == 0) continue;
            ReliabilityBin bin;
            bin.lower = static_cast<double>(b) / num_bins;
            bin.upper = static_cast<double>(b + 1) / num_bins;
            bin.count = counts[b];
            bin.mean_confidence = conf_sums[b] / static_cast<double>(counts[b]);
            bin.accuracy = static_cast<double>(corrects[b]) / static_cast<double>(counts[b]);
            diagram.bins.push_back(bin);
        }
    }
    return diagram;
}

double qece(const std::vector<PredictionRecord>& records, int num_bins) {
    return reliability(records, num_bins, BinningMode::EqualMass).ece();
}

double ece_equal_width(const std::vector<PredictionRecord>& records, int num_bins) {
    return reliability(records, num_bins, BinningMode::EqualWidth).ece();
}

WorstEntry worst_subgroup(const std::vector<std::pair<int, double>>& per_group,
                          WorstDirection direction) {
    if (per_group.empty()) throw ValidationError("worst_subgroup: no groups");
    WorstEntry worst{per_group[0].first, per_group[0].second};
    for (const auto& [group, value] : per_group) {
        bool better = direction == WorstDirection::MaxIsWorst ? value > worst.value
                                                              : value < worst.value;
        if (better || (value == worst.value && group < worst.group)) {
            worst = {group, value};
        }
    }
    return worst;
}

EvalReport evaluate(const std::vector<PredictionRecord>& records,
                    const std::vector<int>& group_ids, int num_groups,
                    const std::string& attribute_name, int num_bins) {
    if (records.empty()) throw ValidationError("evaluate: no records");
    if (group_ids.size() != records.size()) {
        throw ValidationError("evaluate: group ids not aligned with records");
    }
    const int num_classes = static_cast<int>(records[0].probs.size());
    const bool binary = num_classes == 2;
    auto performance = [&](const std::vector<PredictionRecord>& recs) {
        return binary ? f1(recs, 1) : macro_f1(recs, num_classes);
    };

    EvalReport report;
    report.attribute = attribute_name;
    report.num_bins = num_bins;
    report.performance_metric = binary ? "f1" : "macro_f1";
    report.overall = {-1, records.size(), performance(records), qece(records, num_bins)};
    report.overall_reliability = reliability(records, num_bins, BinningMode::EqualMass);

    std::vector<std::pair<int, double>> perf_pairs, qece_pairs;
    for (int g = 0; g < num_groups; ++g) {
        std::vector<PredictionRecord> group_records;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (group_ids[i] == g) group_records.push_back(records[i]);
        }
        if (group_records.empty()) {
            report.warnings.push_back("group " + std::to_string(g) + " of attribute '" +
                                      attribute_name +
                                      "' has no evaluation samples; omitted");
            continue;
        }
        GroupMetrics gm;
        gm.group = g;
        gm.count = group_records.size();
        gm.performance = performance(group_records);
        gm.qece = qece(group_records, num_bins);
        report.groups.push_back(gm);
        perf_pairs.emplace_back(g, gm.performance);
        qece_pairs.emplace_back(g, gm.qece);
        report.group_reliability.emplace_back(
            g, reliability(group_records, num_bins, BinningMode::EqualMass));
    }
    if (report.groups.empty()) {
        throw ValidationError("evaluate: no group of attribute '" + attribute_name +
                              "' has any samples");
    }
    report.worst_performance = worst_subgroup(perf_pairs, WorstDirection::MinIsWorst);
    report.worst_qece = worst_subgroup(qece_pairs, WorstDirection::MaxIsWorst);
    return report;
}

} // namespace calibfair
