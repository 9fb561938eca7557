#pragma once

#include <vector>

namespace calibfair {

// One scored sample: full probability vector plus the derived fields the
// calibration metrics work with.
struct PredictionRecord {
    std::vector<double> probs; // simplex vector, length num_classes
    int predicted = 0;         // argmax(probs), ties to the lowest index
    double confidence = 0.0;   // probs[predicted]
    int label = 0;

    bool correct() const { return predicted == label; }
};

// Builds a record enforcing the argmax/tie-break rule.
inline PredictionRecord make_prediction_record(std::vector<double> probs, int label) {
    PredictionRecord rec;
    int best = 0;
    for (std::size_t j = 1; j < probs.size(); ++j) {
        if (probs[j] > probs[best]) best = static_cast<int>(j);
    }
    rec.predicted = best;
    rec.confidence = probs[best];
    rec.label = label;
    rec.probs = std::move(probs);
    return rec;
}

} // namespace calibfair
