#pragma once

#include <string>
#include <utility>
#include <vector>

#include "calibfair/prediction.hpp"

namespace calibfair {

enum class BinningMode { EqualMass, EqualWidth };

struct ReliabilityBin {
    double lower = 0.0;  // equal-mass: lowest confidence in the bin;
    double upper = 0.0;  // equal-width: the nominal interval bounds
    std::size_t count = 0;
    double mean_confidence = 0.0;
    double accuracy = 0.0;
};

// Per-bin confidence/accuracy table behind a reliability plot. Empty bins
// are omitted, so counts always sum to the record count.
struct ReliabilityDiagram {
    BinningMode mode = BinningMode::EqualMass;
    int num_bins = 0;
    std::vector<ReliabilityBin> bins;

    // Count-weighted mean |accuracy - confidence|; reproduces the scalar
    // calibration error exactly because qece/ece are computed from the
    // same bins.
    double ece() const;
};

struct GroupMetrics {
    int group = -1; // -1 marks the overall row
    std::size_t count = 0;
    double performance = 0.0;
    double qece = 0.0;
};

struct WorstEntry {
    int group = -1;
    double value = 0.0;
};

// Subgroup evaluation for one attribute: per-group metrics, overall row,
// worst-group extrema, and plot-ready reliability tables.
struct EvalReport {
    std::string attribute;
    int num_bins = 0;
    std::string performance_metric; // "f1" (binary) or "macro_f1"
    GroupMetrics overall;
    std::vector<GroupMetrics> groups;
    WorstEntry worst_performance; // min over groups
    WorstEntry worst_qece;        // max over groups
    ReliabilityDiagram overall_reliability;
    std::vector<std::pair<int, ReliabilityDiagram>> group_reliability;
    std::vector<std::string> warnings;
};

double accuracy(const std::vector<PredictionRecord>& records);

// One-vs-rest F1 = 2TP/(2TP+FP+FN); 0 when the denominator is 0.
double f1(const std::vector<PredictionRecord>& records, int positive_class);

// Unweighted mean of one-vs-rest F1 over all classes.
double macro_f1(const std::vector<PredictionRecord>& records, int num_classes);

// Quantile ECE: records sorted by confidence (stable), split into
// num_bins contiguous bins with sizes differing by at most one (larger
// bins first), then count-weighted |accuracy - confidence| per bin. With
// fewer records than bins, every record gets its own bin.
double qece(const std::vector<PredictionRecord>& records, int num_bins);

// Fixed-interval variant over ((b-1)/B, b/B]; empty bins contribute 0.
double ece_equal_width(const std::vector<PredictionRecord>& records, int num_bins);

ReliabilityDiagram reliability(const std::vector<PredictionRecord>& records,
                               int num_bins, BinningMode mode);

enum class WorstDirection { MaxIsWorst, MinIsWorst };

// Extremal entry of (group, value) pairs; ties go to the lowest group id.
WorstEntry worst_subgroup(const std::vector<std::pair<int, double>>& per_group,
                          WorstDirection direction);

// Full per-attribute report. group_ids must be aligned with records;
// groups with no records are omitted and noted in warnings. Performance
// is F1 of class 1 for binary problems and macro-F1 otherwise.
EvalReport evaluate(const std::vector<PredictionRecord>& records,
                    const std::vector<int>& group_ids, int num_groups,
                    const std::string& attribute_name, int num_bins);

} // namespace calibfair
