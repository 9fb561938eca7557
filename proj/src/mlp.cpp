#include "calibfair/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "calibfair/error.hpp"
#include "calibfair/rng.hpp"

namespace calibfair {

namespace {

double clamped_log(double p) { return std::log(std::max(p, kProbClamp)); }

// d/dp of -log(max(p, clamp)); flat below the clamp.
double ce_dp(double p) { return p > kProbClamp ? -1.0 / p : 0.0; }

// d/dp of (1-p)^gamma * -log(max(p, clamp)).
double focal_dp(double p, double gamma) {
    if (gamma == 0.0) return ce_dp(p);
    double one_minus = std::max(0.0, 1.0 - p);
    double term1 = 0.0;
    if (one_minus > 0.0) {
        term1 = gamma * std::pow(one_minus, gamma - 1.0) * clamped_log(p);
    }
    double term2 = -std::pow(one_minus, gamma) * (p > kProbClamp ? 1.0 / p : 0.0);
    return term1 + term2;
}

// Forward pass keeping every layer's inputs and pre-activations so the
// backward pass can reuse them.
struct ForwardCache {
    std::vector<Matrix> acts; // acts[l] = input to layer l; acts[0] = features
    std::vector<Matrix> pre;  // pre[l] = W_l * acts[l] + b_l
};

Matrix affine(const Matrix& input, const Matrix& w, const std::vector<double>& b) {
    Matrix out(input.rows, w.rows);
    for (std::size_t r = 0; r < input.rows; ++r) {
        const double* in_row = input.row(r);
        double* out_row = out.row(r);
        for (std::size_t o = 0; o < w.rows; ++o) {
            const double* w_row = w.row(o);
            double sum = b[o];
            for (std::size_t i = 0; i < w.cols; ++i) sum += w_row[i] * in_row[i];
            out_row[o] = sum;
        }
    }
    return out;
}

ForwardCache forward_cached(const MlpModel& model, const Matrix& features) {
    if (features.cols != model.input_dim()) {
        throw ValidationError("forward: feature width " + std::to_string(features.cols) +
                              " does not match input dim " +
                              std::to_string(model.input_dim()));
    }
    ForwardCache cache;
    cache.acts.push_back(features);
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        Matrix z = affine(cache.acts[l], model.weights[l], model.biases[l]);
        cache.pre.push_back(z);
        if (l + 1 < model.num_layers()) {
            Matrix a = cache.pre[l];
            for (double& v : a.data) v = std::max(0.0, v);
            cache.acts.push_back(std::move(a));
        }
    }
    return cache;
}

} // namespace

AdamState AdamState::init(const MlpModel& model, double lr, double beta1,
                          double beta2, double epsilon) {
    if (!(lr > 0.0)) throw ValidationError("adam: lr must be positive");
    AdamState state;
    state.lr = lr;
    state.beta1 = beta1;
    state.beta2 = beta2;
    state.epsilon = epsilon;
    for (const auto& w : model.weights) {
        state.m_weights.emplace_back(w.rows, w.cols);
        state.v_weights.emplace_back(w.rows, w.cols);
    }
    for (const auto& b : model.biases) {
        state.m_biases.emplace_back(b.size(), 0.0);
        state.v_biases.emplace_back(b.size(), 0.0);
    }
    return state;
}

LossSpec LossSpec::cross_entropy() {
    return LossSpec{};
}

LossSpec LossSpec::focal(double gamma) {
    LossSpec spec;
    spec.kind = LossKind::Focal;
    spec.gamma = gamma;
    return spec;
}

LossSpec LossSpec::group_wise_focal(double gamma, std::vector<int> group_ids,
                                    int num_groups) {
    LossSpec spec;
    spec.kind = LossKind::GroupWiseFocal;
    spec.gamma = gamma;
    spec.group_ids = std::move(group_ids);
    spec.num_groups = num_groups;
    return spec;
}

LossSpec LossSpec::weighted_cross_entropy(std::vector<double> weights) {
    LossSpec spec;
    spec.kind = LossKind::WeightedCrossEntropy;
    spec.weights = std::move(weights);
    return spec;
}

LossSpec LossSpec::groupdro(std::vector<int> group_ids, GroupWeights weights) {
    LossSpec spec;
    spec.kind = LossKind::GroupDro;
    spec.group_ids = std::move(group_ids);
    spec.num_groups = static_cast<int>(weights.q.size());
    spec.group_weights = std::move(weights);
    return spec;
}

void LossSpec::validate(std::size_t batch_size) const {
    if (batch_size == 0) throw ValidationError("loss: empty batch");
    if (kind == LossKind::Focal || kind == LossKind::GroupWiseFocal) {
        if (gamma < 0.0) throw ValidationError("loss: gamma must be non-negative");
    }
    if (kind == LossKind::GroupWiseFocal || kind == LossKind::GroupDro) {
        if (num_groups < 1) throw ValidationError("loss: num_groups must be positive");
        if (group_ids.size() != batch_size) {
            throw ValidationError("loss: group ids do not cover the batch");
        }
        for (int g : group_ids) {
            if (g < 0 || g >= num_groups) {
                throw ValidationError("loss: group id out of range");
            }
        }
    }
    if (kind == LossKind::GroupDro) {
        group_weights.validate();
        if (static_cast<int>(group_weights.q.size()) != num_groups) {
            throw ValidationError("loss: group weight count mismatch");
        }
    }
    if (kind == LossKind::WeightedCrossEntropy) {
        if (weights.size() != batch_size) {
            throw ValidationError("loss: weights do not cover the batch");
        }
        double sum = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw ValidationError("loss: negative sample weight");
            sum += w;
        }
        if (sum <= 0.0) throw ValidationError("loss: sample weights sum to zero");
    }
}

MlpModel init_mlp(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2) {
        throw ValidationError("init_mlp: need at least input and output dims");
    }
    for (std::size_t d : layer_dims) {
        if (d < 1) throw ValidationError("init_mlp: layer dims must be positive");
    }
    MlpModel model;
    model.layer_dims = layer_dims;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        std::size_t fan_in = layer_dims[l];
        std::size_t fan_out = layer_dims[l + 1];
        double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        Matrix w(fan_out, fan_in);
        for (double& v : w.data) v = stddev * rng.gaussian();
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(fan_out, 0.0);
    }
    return model;
}

Matrix forward(const MlpModel& model, const Matrix& features) {
    ForwardCache cache = forward_cached(model, features);
    return std::move(cache.pre.back());
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw ValidationError("softmax: empty input");
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double z : logits) {
        if (!std::isfinite(z)) throw ValidationError("softmax: non-finite logit");
        max_logit = std::max(max_logit, z);
    }
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        probs[j] = std::exp(logits[j] - max_logit);
        sum += probs[j];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

std::pair<double, Gradients> loss_and_grad(const MlpModel& model,
                                           const Matrix& features,
                                           const std::vector<int>& labels,
                                           const LossSpec& spec) {
    const std::size_t batch = features.rows;
    if (batch == 0 || labels.size() != batch) {
        throw ValidationError("loss_and_grad: batch and labels must be nonempty and aligned");
    }
    spec.validate(batch);
    const int num_classes = static_cast<int>(model.output_dim());
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw ValidationError("loss_and_grad: label out of range");
    }

    ForwardCache cache = forward_cached(model, features);
    const Matrix& logits = cache.pre.back();

    // Softmax probabilities and the true-class probability per sample.
    Matrix probs(batch, num_classes);
    std::vector<double> p_true(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        std::vector<double> row(logits.row(i), logits.row(i) + num_classes);
        std::vector<double> p = softmax(row);
        std::copy(p.begin(), p.end(), probs.row(i));
        p_true[i] = p[labels[i]];
    }

    // Scalar loss via the shared loss definitions, then the per-sample
    // outer derivative dL/dp_true.
    double loss = 0.0;
    std::vector<double> outer(batch, 0.0);
    switch (spec.kind) {
        case LossKind::CrossEntropy: {
            for (double p : p_true) loss += cross_entropy(p);
            loss /= static_cast<double>(batch);
            for (std::size_t i = 0; i < batch; ++i) {
                outer[i] = ce_dp(p_true[i]) / static_cast<double>(batch);
            }
            break;
        }
        case LossKind::Focal: {
            for (double p : p_true) loss += focal(p, spec.gamma);
            loss /= static_cast<double>(batch);
            for (std::size_t i = 0; i < batch; ++i) {
                outer[i] = focal_dp(p_true[i], spec.gamma) / static_cast<double>(batch);
            }
            break;
        }
        case LossKind::GroupWiseFocal: {
            loss = group_wise_focal(p_true, spec.group_ids, spec.num_groups, spec.gamma);
            std::vector<std::size_t> counts(spec.num_groups, 0);
            for (int g : spec.group_ids) ++counts[g];
            std::size_t represented = 0;
            for (std::size_t c : counts) represented += (c > 0);
            for (std::size_t i = 0; i < batch; ++i) {
                double n_k = static_cast<double>(counts[spec.group_ids[i]]);
                outer[i] = focal_dp(p_true[i], spec.gamma) /
                           (static_cast<double>(represented) * n_k);
            }
            break;
        }
        case LossKind::WeightedCrossEntropy: {
            loss = weighted_cross_entropy(p_true, spec.weights);
            double weight_sum = 0.0;
            for (double w : spec.weights) weight_sum += w;
            for (std::size_t i = 0; i < batch; ++i) {
                outer[i] = spec.weights[i] * ce_dp(p_true[i]) / weight_sum;
            }
            break;
        }
        case LossKind::GroupDro: {
            std::vector<double> sums(spec.num_groups, 0.0);
            std::vector<std::size_t> counts(spec.num_groups, 0);
            for (std::size_t i = 0; i < batch; ++i) {
                sums[spec.group_ids[i]] += cross_entropy(p_true[i]);
                ++counts[spec.group_ids[i]];
            }
            for (int k = 0; k < spec.num_groups; ++k) {
                if (counts[k] > 0) {
                    loss += spec.group_weights.q[k] * sums[k] / static_cast<double>(counts[k]);
                }
            }
            for (std::size_t i = 0; i < batch; ++i) {
                int k = spec.group_ids[i];
                outer[i] = spec.group_weights.q[k] * ce_dp(p_true[i]) /
                           static_cast<double>(counts[k]);
            }
            break;
        }
    }

    // dL/dlogit_j = outer * p_y * (delta_{jy} - p_j).
    Matrix delta(batch, num_classes);
    for (std::size_t i = 0; i < batch; ++i) {
        const double* p = probs.row(i);
        double* d = delta.row(i);
        double py = p_true[i];
        int y = labels[i];
        for (int j = 0; j < num_classes; ++j) {
            d[j] = outer[i] * py * ((j == y ? 1.0 : 0.0) - p[j]);
        }
    }

    // Backpropagate through the affine/ReLU stack.
    Gradients grads;
    grads.weights.resize(model.num_layers());
    grads.biases.resize(model.num_layers());
    for (std::size_t li = model.num_layers(); li-- > 0;) {
        const Matrix& input = cache.acts[li];
        Matrix gw(model.weights[li].rows, model.weights[li].cols);
        std::vector<double> gb(model.biases[li].size(), 0.0);
        for (std::size_t b = 0; b < batch; ++b) {
            const double* d = delta.row(b);
            const double* in_row = input.row(b);
            for (std::size_t o = 0; o < gw.rows; ++o) {
                double dv = d[o];
                gb[o] += dv;
                double* gw_row = gw.row(o);
                for (std::size_t i = 0; i < gw.cols; ++i) gw_row[i] += dv * in_row[i];
            }
        }
        grads.weights[li] = std::move(gw);
        grads.biases[li] = std::move(gb);

        if (li > 0) {
            const Matrix& w = model.weights[li];
            const Matrix& pre_prev = cache.pre[li - 1];
            Matrix next(batch, w.cols);
            for (std::size_t b = 0; b < batch; ++b) {
                const double* d = delta.row(b);
                double* nd = next.row(b);
                for (std::size_t i = 0; i < w.cols; ++i) {
                    double sum = 0.0;
                    for (std::size_t o = 0; o < w.rows; ++o) sum += d[o] * w.at(o, i);
                    nd[i] = pre_prev.at(b, i) > 0.0 ? sum : 0.0;
                }
            }
            delta = std::move(next);
        }
    }
    return {loss, std::move(grads)};
}

void adam_step(MlpModel& model, const Gradients& grads, AdamState& state) {
    if (grads.weights.size() != model.num_layers() ||
        state.m_weights.size() != model.num_layers()) {
        throw ValidationError("adam_step: layer count mismatch");
    }
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    auto update = [&](double& param, double g, double& m, double& v) {
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        double m_hat = m / bc1;
        double v_hat = v / bc2;
        param -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    };
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        if (!grads.weights[l].same_shape(model.weights[l]) ||
            grads.biases[l].size() != model.biases[l].size()) {
            throw ValidationError("adam_step: gradient shape mismatch at layer " +
                                  std::to_string(l));
        }
        for (std::size_t i = 0; i < model.weights[l].data.size(); ++i) {
            update(model.weights[l].data[i], grads.weights[l].data[i],
                   state.m_weights[l].data[i], state.v_weights[l].data[i]);
        }
        for (std::size_t i = 0; i < model.biases[l].size(); ++i) {
            update(model.biases[l][i], grads.biases[l][i],
                   state.m_biases[l][i], state.v_biases[l][i]);
        }
    }
}

std::vector<PredictionRecord> predict(const MlpModel& model, const Dataset& dataset,
                                      const std::vector<std::size_t>& indices) {
    std::vector<PredictionRecord> records;
    records.reserve(indices.size());
    const std::size_t chunk = 512;
    const std::size_t d = dataset.num_features();
    for (std::size_t start = 0; start < indices.size(); start += chunk) {
        std::size_t count = std::min(chunk, indices.size() - start);
        Matrix batch(count, d);
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t idx = indices[start + i];
            if (idx >= dataset.size()) {
                throw ValidationError("predict: index out of range");
            }
            std::copy(dataset.features.row(idx), dataset.features.row(idx) + d,
                      batch.row(i));
        }
        Matrix logits = forward(model, batch);
        for (std::size_t i = 0; i < count; ++i) {
            std::vector<double> row(logits.row(i), logits.row(i) + logits.cols);
            records.push_back(make_prediction_record(softmax(row),
                                                     dataset.labels[indices[start + i]]));
        }
    }
    return records;
}

std::vector<double> per_group_cross_entropy(const MlpModel& model,
                                            const Matrix& features,
                                            const std::vector<int>& labels,
                                            const std::vector<int>& group_ids,
                                            int num_groups) {
    if (features.rows == 0) throw ValidationError("per_group_cross_entropy: empty batch");
    Matrix logits = forward(model, features);
    std::vector<double> sums(num_groups, 0.0);
    std::vector<std::size_t> counts(num_groups, 0);
    for (std::size_t i = 0; i < features.rows; ++i) {
        std::vector<double> row(logits.row(i), logits.row(i) + logits.cols);
        std::vector<double> p = softmax(row);
        int g = group_ids[i];
        if (g < 0 || g >= num_groups) {
            throw ValidationError("per_group_cross_entropy: group id out of range");
        }
        sums[g] += cross_entropy(p[labels[i]]);
        ++counts[g];
    }
    std::vector<double> losses(num_groups, 0.0);
    for (int k = 0; k < num_groups; ++k) {
        if (counts[k] > 0) losses[k] = sums[k] / static_cast<double>(counts[k]);
    }
    return losses;
}

namespace {
constexpr const char* kCheckpointMagic = "calibfair-mlp-v1";

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
} // namespace

void save_checkpoint(const MlpModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write checkpoint '" + path + "'");
    out << kCheckpointMagic << '\n';
    out << "dims " << model.layer_dims.size();
    for (std::size_t d : model.layer_dims) out << ' ' << d;
    out << '\n';
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const Matrix& w = model.weights[l];
        out << "W " << w.rows << ' ' << w.cols << '\n';
        for (std::size_t r = 0; r < w.rows; ++r) {
            for (std::size_t c = 0; c < w.cols; ++c) {
                if (c) out << ' ';
                out << fmt_double(w.at(r, c));
            }
            out << '\n';
        }
        out << "b " << model.biases[l].size() << '\n';
        for (std::size_t i = 0; i < model.biases[l].size(); ++i) {
            if (i) out << ' ';
            out << fmt_double(model.biases[l][i]);
        }
        out << '\n';
    }
    out << "end\n";
    if (!out) throw RuntimeFailure("failed writing checkpoint '" + path + "'");
}

MlpModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
    std::string magic;
    if (!std::getline(in, magic) || magic != kCheckpointMagic) {
        throw ParseError("checkpoint '" + path + "': bad or missing version tag");
    }
    std::string token;
    auto expect = [&](const std::string& want) {
        if (!(in >> token) || token != want) {
            throw ParseError("checkpoint '" + path + "': expected '" + want + "'");
        }
    };
    expect("dims");
    std::size_t ndims = 0;
    if (!(in >> ndims) || ndims < 2) {
        throw ParseError("checkpoint '" + path + "': bad dims count");
    }
    MlpModel model;
    model.layer_dims.resize(ndims);
    for (auto& d : model.layer_dims) {
        if (!(in >> d) || d < 1) throw ParseError("checkpoint '" + path + "': bad dim");
    }
    for (std::size_t l = 0; l + 1 < ndims; ++l) {
        expect("W");
        std::size_t rows = 0, cols = 0;
        if (!(in >> rows >> cols) || rows != model.layer_dims[l + 1] ||
            cols != model.layer_dims[l]) {
            throw ParseError("checkpoint '" + path + "': weight shape mismatch at layer " +
                             std::to_string(l));
        }
        Matrix w(rows, cols);
        for (double& v : w.data) {
            if (!(in >> v) || !std::isfinite(v)) {
                throw ParseError("checkpoint '" + path + "': bad weight value");
            }
        }
        model.weights.push_back(std::move(w));
        expect("b");
        std::size_t blen = 0;
        if (!(in >> blen) || blen != model.layer_dims[l + 1]) {
            throw ParseError("checkpoint '" + path + "': bias length mismatch at layer " +
                             std::to_string(l));
        }
        std::vector<double> b(blen);
        for (double& v : b) {
            if (!(in >> v) || !std::isfinite(v)) {
                throw ParseError("checkpoint '" + path + "': bad bias value");
            }
        }
        model.biases.push_back(std::move(b));
    }
    expect("end");
    return model;
}

} // namespace calibfair
