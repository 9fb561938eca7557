#pragma once

#include <cstdint>
#include <vector>

#include "calibfair/prediction.hpp"

namespace calibfair {

// Result of 1-D k-means. Centers are sorted ascending and ids remapped to
// match, so cluster k-1 always holds the largest values (the worst
// calibrated samples when clustering gaps). k is the effective cluster
// count, which may be smaller than requested when the input has fewer
// distinct values.
struct ClusterAssignment {
    int k = 0;
    std::vector<double> centers; // strictly ascending
    std::vector<int> ids;        // per input value, in [0, k)
    double inertia = 0.0;        // sum of squared distances to assigned centers
};

// |confidence - 1{predicted == label}| per record; 0 for a confident
// correct prediction, near 1 for a confident wrong one.
std::vector<double> compute_gaps(const std::vector<PredictionRecord>& records);

// Seeded k-means++ with Lloyd iterations to an assignment fixpoint (at
// most 300 sweeps), empty clusters repaired by seizing the point farthest
// from its own center. Runs several restarts from the seeded stream and
// keeps the lowest-inertia result.
ClusterAssignment kmeans_1d(const std::vector<double>& values, int k,
                            std::uint64_t seed);

// Nearest center per value, ties to the lower index. Centers must be
// sorted ascending and nonempty.
std::vector<int> assign_clusters(const std::vector<double>& values,
                                 const std::vector<double>& centers);

} // namespace calibfair
