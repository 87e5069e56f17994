// SPDX-License-Identifier: Apache-2.0
//
// Dense MLP with manual backprop of a per-example weighted cross-entropy.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rng.hpp"

namespace rtme {

/// Row-major dense matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// Rows gathered in the given order.
    Matrix gather_rows(std::span<const std::size_t> indices) const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class Activation { ReLU, Softsign };

struct MlpModel {
    std::vector<std::size_t> layer_sizes;  // input, hidden..., classes
    std::vector<Matrix> weights;           // weights[l]: layer_sizes[l] x layer_sizes[l+1]
    std::vector<std::vector<double>> biases;
    Activation activation = Activation::ReLU;

    std::size_t num_layers() const { return weights.size(); }
    std::size_t num_classes() const { return layer_sizes.back(); }
    std::size_t input_dim() const { return layer_sizes.front(); }

    /// Zero weights and biases of the given shape.
    static MlpModel zeros(std::vector<std::size_t> layer_sizes, Activation act = Activation::ReLU);
    /// He-uniform weights, zero biases. With zero_output_layer the last
    /// layer starts at zero, so every class begins at loss log k.
    static MlpModel he_uniform(std::vector<std::size_t> layer_sizes, Rng& rng,
                               Activation act = Activation::ReLU, bool zero_output_layer = false);

    bool operator==(const MlpModel&) const = default;
};

struct ForwardCache {
    // inputs[l] is the input to layer l (inputs[0] is the batch itself);
    // pre[l] holds pre-activations of hidden layer l.
    std::vector<Matrix> inputs;
    std::vector<Matrix> pre;
    Matrix logits;
};

/// Gradients, plus momentum buffers of the same shapes.
struct GradientSet {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    static GradientSet zeros_like(const MlpModel& model);
};

struct ForwardResult {
    Matrix logits;
    ForwardCache cache;
};

ForwardResult mlp_forward(const MlpModel& model, const Matrix& batch_x);

/// Logits only; no cache is retained.
Matrix mlp_logits(const MlpModel& model, const Matrix& batch_x);

/// Stable log-sum-exp softmax cross-entropy, one loss per row.
std::vector<double> softmax_ce_per_example(const Matrix& logits, std::span<const int> labels);

/// Gradient of (1/B) sum_i w_i L_i with the w_i held constant. B is the batch
/// row count unless `mean_denominator` is nonzero.
GradientSet mlp_backward(const MlpModel& model, const ForwardCache& cache, std::span<const int> labels,
                         std::span<const double> per_example_weights, std::size_t mean_denominator = 0);

struct SgdParams {
    double lr = 1e-2;
    double momentum = 0.9;
    double weight_decay = 1e-3;
};

/// v <- momentum*v + (g + wd*theta); theta <- theta - lr*v, applied to weights and biases.
void sgd_momentum_step(MlpModel& model, const GradientSet& grads, GradientSet& velocity,
                       const SgdParams& params);

/// Row-wise argmax, ties resolved toward the smallest class index.
std::vector<int> predict(const Matrix& logits);

}  // namespace rtme
