#include "calibfair/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "calibfair/error.hpp"

namespace calibfair {

double cross_entropy(double p_true) {
    if (!std::isfinite(p_true)) throw ValidationError("cross_entropy: non-finite probability");
    return -std::log(std::max(p_true, kProbClamp));
}

double focal(double p_true, double gamma) {
    if (!std::isfinite(p_true)) throw ValidationError("focal: non-finite probability");
    if (gamma < 0.0) throw ValidationError("focal: gamma must be non-negative");
    double one_minus = std::max(0.0, 1.0 - p_true);
    return std::pow(one_minus, gamma) * -std::log(std::max(p_true, kProbClamp));
}

double group_wise_focal(const std::vector<double>& p_true,
                        const std::vector<int>& cluster_ids,
                        int num_clusters, double gamma) {
    if (p_true.empty()) throw ValidationError("group_wise_focal: empty input");
    if (cluster_ids.size() != p_true.size()) {
        throw ValidationError("group_wise_focal: cluster id count mismatch");
    }
    if (num_clusters < 1) throw ValidationError("group_wise_focal: num_clusters must be positive");

    std::vector<double> sums(num_clusters, 0.0);
    std::vector<std::size_t> counts(num_clusters, 0);
    for (std::size_t i = 0; i < p_true.size(); ++i) {
        int k = cluster_ids[i];
        if (k < 0 || k >= num_clusters) {
            throw ValidationError("group_wise_focal: cluster id " + std::to_string(k) +
                                  " out of range");
        }
        sums[k] += focal(p_true[i], gamma);
        ++counts[k];
    }
    double total = 0.0;
    int represented = 0;
    for (int k = 0; k < num_clusters; ++k) {
        if (counts[k] > 0) {
            total += sums[k] / static_cast<double>(counts[k]);
            ++represented;
        }
    }
    return total / static_cast<double>(represented);
}

double weighted_cross_entropy(const std::vector<double>& p_true,
                              const std::vector<double>& weights) {
    if (p_true.empty()) throw ValidationError("weighted_cross_entropy: empty input");
    if (weights.size() != p_true.size()) {
        throw ValidationError("weighted_cross_entropy: weight count mismatch");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < p_true.size(); ++i) {
        if (weights[i] < 0.0) {
            throw ValidationError("weighted_cross_entropy: negative weight");
        }
        num += weights[i] * cross_entropy(p_true[i]);
        den += weights[i];
    }
    if (den <= 0.0) throw ValidationError("weighted_cross_entropy: weight sum is zero");
    return num / den;
}

GroupWeights GroupWeights::uniform(int num_groups, double eta) {
    if (num_groups < 1) throw ValidationError("GroupWeights: need at least one group");
    GroupWeights w;
    w.q.assign(num_groups, 1.0 / static_cast<double>(num_groups));
    w.eta = eta;
    return w;
}

void GroupWeights::validate() const {
    if (q.empty()) throw ValidationError("GroupWeights: q is empty");
    if (!(eta > 0.0)) throw ValidationError("GroupWeights: eta must be positive");
    double sum = 0.0;
    for (double v : q) {
        if (!(v >= 0.0)) throw ValidationError("GroupWeights: q components must be non-negative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("GroupWeights: q must sum to 1");
}

std::pair<GroupWeights, double> groupdro_step(const std::vector<double>& group_losses,
                                              const GroupWeights& weights) {
    weights.validate();
    if (group_losses.size() != weights.q.size()) {
        throw ValidationError("groupdro_step: loss count does not match weight count");
    }
    double max_loss = -std::numeric_limits<double>::infinity();
    for (double l : group_losses) {
        if (!std::isfinite(l)) throw ValidationError("groupdro_step: non-finite group loss");
        max_loss = std::max(max_loss, l);
    }

    // Shift by the max loss before exponentiating so large losses cannot
    // overflow; the shift cancels in the normalization.
    GroupWeights next = weights;
    double norm = 0.0;
    for (std::size_t k = 0; k < group_losses.size(); ++k) {
        next.q[k] = weights.q[k] * std::exp(weights.eta * (group_losses[k] - max_loss));
        norm += next.q[k];
    }
    double objective = 0.0;
    for (std::size_t k = 0; k < next.q.size(); ++k) {
        next.q[k] /= norm;
        objective += next.q[k] * group_losses[k];
    }
    return {next, objective};
}

} // namespace calibfair
