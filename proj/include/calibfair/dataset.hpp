#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "calibfair/matrix.hpp"

namespace calibfair {

// One named subgroup attribute: a group index per sample.
struct AttributeColumn {
    std::string name;
    std::vector<int> groups;  // values in [0, num_groups)
    int num_groups = 0;
};

// Tabular classification dataset with subgroup attributes. Immutable by
// convention once built; all consumers take it by const reference.
struct Dataset {
    Matrix features;                         // N x d
    std::vector<int> labels;                 // values in [0, num_classes)
    int num_classes = 0;
    std::vector<AttributeColumn> attributes; // file/spec order preserved

    std::size_t size() const { return labels.size(); }
    std::size_t num_features() const { return features.cols; }

    const AttributeColumn* find_attribute(const std::string& name) const;

    // Throws ValidationError when any structural invariant is broken:
    // mismatched lengths, out-of-range labels or group ids, an attribute
    // with fewer than two distinct groups present.
    void validate() const;
};

// Per-attribute generation parameters. Fractions, noise rates and
// feature shifts are indexed by group.
struct AttributeSpec {
    std::string name;
    std::vector<double> fractions;      // sum to 1, one per group
    std::vector<double> noise_rates;    // label-flip probability, [0, 0.5)
    std::vector<double> feature_shifts; // additive offset on every coordinate
};

// Recipe for the synthetic benchmark generator. Label noise is driven by
// the first attribute only; every attribute contributes feature shift.
struct SyntheticSpec {
    int n_samples = 0;
    int n_features = 0;
    int n_classes = 0;
    double class_separation = 2.0;
    std::vector<AttributeSpec> attributes;

    void validate() const; // throws ValidationError naming the bad field
};

// Disjoint, exhaustive index partition of a Dataset.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

// Generated dataset plus the pre-flip latent classes. The latent vector
// exists for generator tests only and must not reach training code.
struct SyntheticDebug {
    Dataset dataset;
    std::vector<int> latent_labels;
};

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);
SyntheticDebug generate_synthetic_with_latent(const SyntheticSpec& spec,
                                              std::uint64_t seed);

// CSV schema: header row, columns f0..f{d-1} (floats), label
// (non-negative int), zero or more attr_<name> (non-negative ints).
// Warnings (e.g. a class index absent from the file) are appended to
// *warnings when given.
Dataset load_csv(const std::string& path,
                 std::vector<std::string>* warnings = nullptr);
void save_csv(const Dataset& dataset, const std::string& path);

Split make_split(const Dataset& dataset,
                 double train_fraction, double val_fraction,
                 double test_fraction, std::uint64_t seed,
                 bool stratify_by_label);

// Reference benchmark specs with a noise-biased minority group. These are
// the fixed targets used by the acceptance suite and the CLI presets.
SyntheticSpec biased_binary_spec(int n_samples = 4000);
SyntheticSpec biased_multiclass_spec(int n_samples = 7000);

} // namespace calibfair
