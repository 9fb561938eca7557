#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "calibfair/dataset.hpp"
#include "calibfair/losses.hpp"
#include "calibfair/matrix.hpp"
#include "calibfair/prediction.hpp"

namespace calibfair {

// Fully connected ReLU network. layer_dims = (d, h_1, ..., h_L, C);
// weights[l] maps layer l activations (cols) to layer l+1 (rows).
struct MlpModel {
    std::vector<std::size_t> layer_dims;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    std::size_t num_layers() const { return weights.size(); }
};

// Parameter-shaped gradient bundle.
struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

struct AdamState {
    std::vector<Matrix> m_weights, v_weights;
    std::vector<std::vector<double>> m_biases, v_biases;
    std::int64_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState init(const MlpModel& model, double lr, double beta1,
                          double beta2, double epsilon);
};

enum class LossKind {
    CrossEntropy,
    Focal,
    GroupWiseFocal,
    WeightedCrossEntropy,
    GroupDro,
};

// Batch-loss selector. Per-sample fields (weights, group_ids) are aligned
// with the rows of the batch handed to loss_and_grad.
struct LossSpec {
    LossKind kind = LossKind::CrossEntropy;
    double gamma = 0.0;                // focal kinds
    std::vector<double> weights;       // weighted kind
    std::vector<int> group_ids;        // grouped kinds
    int num_groups = 0;                // grouped kinds
    GroupWeights group_weights;        // groupdro kind (q held fixed)

    static LossSpec cross_entropy();
    static LossSpec focal(double gamma);
    static LossSpec group_wise_focal(double gamma, std::vector<int> group_ids,
                                     int num_groups);
    static LossSpec weighted_cross_entropy(std::vector<double> weights);
    static LossSpec groupdro(std::vector<int> group_ids, GroupWeights weights);

    void validate(std::size_t batch_size) const;
};

// He-scheme weights (stddev sqrt(2/fan_in)), zero biases.
MlpModel init_mlp(const std::vector<std::size_t>& layer_dims, std::uint64_t seed);

// Row-batched forward pass to pre-softmax logits.
Matrix forward(const MlpModel& model, const Matrix& features);

// Numerically stable softmax (max subtraction).
std::vector<double> softmax(const std::vector<double>& logits);

// Loss over one batch plus exact analytic gradients of that loss with
// respect to every parameter. The loss value matches the scalar loss
// functions applied to the forward probabilities.
std::pair<double, Gradients> loss_and_grad(const MlpModel& model,
                                           const Matrix& features,
                                           const std::vector<int>& labels,
                                           const LossSpec& spec);

// In-place bias-corrected Adam update; increments state.step.
void adam_step(MlpModel& model, const Gradients& grads, AdamState& state);

// Scores dataset rows given by indices, in index order.
std::vector<PredictionRecord> predict(const MlpModel& model, const Dataset& dataset,
                                      const std::vector<std::size_t>& indices);

// Per-sample mean cross-entropy of the true class, aggregated by group.
// Used by the robust-weights training loop, which needs group losses
// before taking the gradient step.
std::vector<double> per_group_cross_entropy(const MlpModel& model,
                                            const Matrix& features,
                                            const std::vector<int>& labels,
                                            const std::vector<int>& group_ids,
                                            int num_groups);

// Version-tagged decimal-text checkpoint; grammar documented in README.
void save_checkpoint(const MlpModel& model, const std::string& path);
MlpModel load_checkpoint(const std::string& path);

} // namespace calibfair
