#pragma once

#include <utility>
#include <vector>

namespace calibfair {

// Probabilities are clamped here before any logarithm, in loss values and
// gradients alike, so saturated softmax outputs never produce infinities.
inline constexpr double kProbClamp = 1e-12;

// -log(p_true) of the predicted probability assigned to the true class.
double cross_entropy(double p_true);

// (1 - p_true)^gamma * -log(p_true). Reduces to cross_entropy at gamma=0.
double focal(double p_true, double gamma);

// Unweighted mean over represented clusters of the per-cluster mean focal
// loss. Clusters in [0, num_clusters) with no samples are skipped, so a
// mini-batch that misses a small cluster still yields a finite loss.
double group_wise_focal(const std::vector<double>& p_true,
                        const std::vector<int>& cluster_ids,
                        int num_clusters, double gamma);

// sum(w_i * -log p_i) / sum(w_i). Weight sum must be positive.
double weighted_cross_entropy(const std::vector<double>& p_true,
                              const std::vector<double>& weights);

// Exponentiated-gradient weights over K groups for the distributionally
// robust objective.
struct GroupWeights {
    std::vector<double> q; // simplex over groups
    double eta = 0.1;      // step size

    static GroupWeights uniform(int num_groups, double eta);
    void validate() const;
};

// One multiplicative-weights update: q'_k proportional to q_k*exp(eta*l_k),
// renormalized. Returns the new weights and the objective sum_k q'_k*l_k.
std::pair<GroupWeights, double> groupdro_step(const std::vector<double>& group_losses,
                                              const GroupWeights& weights);

} // namespace calibfair
