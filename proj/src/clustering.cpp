#include "calibfair/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "calibfair/error.hpp"
#include "calibfair/rng.hpp"

namespace calibfair {

namespace {

constexpr int kMaxLloydIterations = 300;
constexpr int kRestarts = 8;

int nearest_center(double value, const std::vector<double>& centers) {
    int best = 0;
    double best_dist = std::abs(value - centers[0]);
    for (std::size_t c = 1; c < centers.size(); ++c) {
        double dist = std::abs(value - centers[c]);
        if (dist < best_dist) {
            best_dist = dist;
            best = static_cast<int>(c);
        }
    }
    return best;
}

// k-means++: first center uniform, then each next center drawn with
// probability proportional to squared distance from the nearest chosen one.
std::vector<double> kmeanspp_init(const std::vector<double>& values, int k, Rng& rng) {
    std::vector<double> centers;
    centers.reserve(k);
    centers.push_back(values[rng.bounded(values.size())]);
    std::vector<double> dist2(values.size());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            double d = values[i] - centers[nearest_center(values[i], centers)];
            dist2[i] = d * d;
            total += dist2[i];
        }
        if (total <= 0.0) {
            // All remaining mass sits on chosen centers; cannot happen when
            // the caller reduced k to the distinct-value count.
            centers.push_back(values[rng.bounded(values.size())]);
            continue;
        }
        double pick = rng.uniform() * total;
        double cum = 0.0;
        std::size_t chosen = values.size() - 1;
        for (std::size_t i = 0; i < values.size(); ++i) {
            cum += dist2[i];
            if (pick < cum) { chosen = i; break; }
        }
        centers.push_back(values[chosen]);
    }
    return centers;
}

struct LloydResult {
    std::vector<double> centers;
    std::vector<int> ids;
    double inertia = 0.0;
};

LloydResult lloyd(const std::vector<double>& values, std::vector<double> centers) {
    const int k = static_cast<int>(centers.size());
    std::vector<int> ids(values.size(), -1);
    for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
        std::vector<int> next(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            next[i] = nearest_center(values[i], centers);
        }

        // Repair empty clusters: seize the point farthest from its own
        // center (largest distance, lowest index on ties).
        std::vector<std::size_t> counts(k, 0);
        for (int id : next) ++counts[id];
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            std::size_t victim = values.size();
            double worst = -1.0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (counts[next[i]] < 2) continue;
                double d = std::abs(values[i] - centers[next[i]]);
                if (d > worst) { worst = d; victim = i; }
            }
            if (victim == values.size()) break; // nothing left to seize
            --counts[next[victim]];
            next[victim] = c;
            ++counts[c];
            centers[c] = values[victim];
        }

        bool changed = (next != ids);
        ids = std::move(next);

        // Mean update.
        std::vector<double> sums(k, 0.0);
        std::vector<std::size_t> ns(k, 0);
        for (std::size_t i = 0; i < values.size(); ++i) {
            sums[ids[i]] += values[i];
            ++ns[ids[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (ns[c] > 0) centers[c] = sums[c] / static_cast<double>(ns[c]);
        }
        if (!changed && iter > 0) break;
    }

    LloydResult result;
    result.centers = std::move(centers);
    result.ids = std::move(ids);
    for (std::size_t i = 0; i < values.size(); ++i) {
        double d = values[i] - result.centers[result.ids[i]];
        result.inertia += d * d;
    }
    return result;
}

} // namespace

std::vector<double> compute_gaps(const std::vector<PredictionRecord>& records) {
    std::vector<double> gaps(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        double indicator = records[i].correct() ? 1.0 : 0.0;
        gaps[i] = std::abs(records[i].confidence - indicator);
    }
    return gaps;
}

ClusterAssignment kmeans_1d(const std::vector<double>& values, int k,
                            std::uint64_t seed) {
    if (values.empty()) throw ValidationError("kmeans_1d: empty input");
    if (k < 1) throw ValidationError("kmeans_1d: k must be at least 1");
    for (double v : values) {
        if (!std::isfinite(v)) throw ValidationError("kmeans_1d: non-finite value");
    }

    std::set<double> distinct(values.begin(), values.end());
    int effective_k = std::min<int>(k, static_cast<int>(distinct.size()));

    Rng rng(seed);
    LloydResult best;
    bool have_best = false;
    for (int restart = 0; restart < kRestarts; ++restart) {
        LloydResult run = lloyd(values, kmeanspp_init(values, effective_k, rng));
        if (!have_best || run.inertia < best.inertia) {
            best = std::move(run);
            have_best = true;
        }
    }

    // Canonical form: dedupe converged centers, sort ascending, remap ids
    // by a fresh nearest-center pass so ties land on the lower index.
    std::sort(best.centers.begin(), best.centers.end());
    best.centers.erase(std::unique(best.centers.begin(), best.centers.end()),
                       best.centers.end());

    ClusterAssignment out;
    out.k = static_cast<int>(best.centers.size());
    out.centers = std::move(best.centers);
    out.ids = assign_clusters(values, out.centers);
    for (std::size_t i = 0; i < values.size(); ++i) {
        double d = values[i] - out.centers[out.ids[i]];
        out.inertia += d * d;
    }
    return out;
}

std::vector<int> assign_clusters(const std::vector<double>& values,
                                 const std::vector<double>& centers) {
    if (centers.empty()) throw ValidationError("assign_clusters: no centers");
    if (!std::is_sorted(centers.begin(), centers.end())) {
        throw ValidationError("assign_clusters: centers must be sorted");
    }
    std::vector<int> ids(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        ids[i] = nearest_center(values[i], centers);
    }
    return ids;
}

} // namespace calibfair
