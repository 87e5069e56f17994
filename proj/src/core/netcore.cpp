// SPDX-License-Identifier: Apache-2.0
#include "netcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace rtme {

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

namespace {

void check_layer_sizes(const std::vector<std::size_t>& sizes) {
    if (sizes.size() < 2)
        throw ConfigError("MLP needs at least an input and an output layer");
    for (std::size_t s : sizes)
        if (s == 0) throw ConfigError("MLP layer width must be positive");
}

double activate(Activation act, double z) {
    if (act == Activation::ReLU) return z > 0.0 ? z : 0.0;
    return z / (1.0 + std::abs(z));
}

double activate_grad(Activation act, double z) {
    if (act == Activation::ReLU) return z > 0.0 ? 1.0 : 0.0;
    const double d = 1.0 + std::abs(z);
    return 1.0 / (d * d);
}

// out = x * w + b (broadcast over rows)
Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
    const std::size_t n = x.rows(), in = x.cols(), out_dim = w.cols();
    Matrix out(n, out_dim);
    for (std::size_t i = 0; i < n; ++i) {
        auto o = out.row(i);
        std::copy(b.begin(), b.end(), o.begin());
        const auto xi = x.row(i);
        for (std::size_t p = 0; p < in; ++p) {
            const double xv = xi[p];
            if (xv == 0.0) continue;
            const auto wp = w.row(p);
            for (std::size_t j = 0; j < out_dim; ++j) o[j] += xv * wp[j];
        }
    }
    return out;
}

}  // namespace

MlpModel MlpModel::zeros(std::vector<std::size_t> layer_sizes, Activation act) {
    check_layer_sizes(layer_sizes);
    MlpModel m;
    m.layer_sizes = std::move(layer_sizes);
    m.activation = act;
    for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
        m.weights.emplace_back(m.layer_sizes[l], m.layer_sizes[l + 1]);
        m.biases.emplace_back(m.layer_sizes[l + 1], 0.0);
    }
    return m;
}

MlpModel MlpModel::he_uniform(std::vector<std::size_t> layer_sizes, Rng& rng, Activation act,
                              bool zero_output_layer) {
    MlpModel m = zeros(std::move(layer_sizes), act);
    const std::size_t randomized = m.weights.size() - (zero_output_layer ? 1 : 0);
    for (std::size_t l = 0; l < randomized; ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(m.layer_sizes[l]));
        for (double& w : m.weights[l].data()) w = (2.0 * rng.uniform() - 1.0) * limit;
    }
    return m;
}

GradientSet GradientSet::zeros_like(const MlpModel& model) {
    GradientSet g;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        g.weights.emplace_back(model.weights[l].rows(), model.weights[l].cols());
        g.biases.emplace_back(model.biases[l].size(), 0.0);
    }
    return g;
}

ForwardResult mlp_forward(const MlpModel& model, const Matrix& batch_x) {
    if (batch_x.cols() != model.input_dim())
        throw ConfigError("batch has " + std::to_string(batch_x.cols()) + " features, model expects " +
                          std::to_string(model.input_dim()));
    ForwardResult res;
    Matrix x = batch_x;
    const std::size_t L = model.num_layers();
    for (std::size_t l = 0; l < L; ++l) {
        Matrix z = affine(x, model.weights[l], model.biases[l]);
        res.cache.inputs.push_back(std::move(x));
        if (l + 1 == L) {
            res.logits = std::move(z);
            break;
        }
        Matrix a(z.rows(), z.cols());
        for (std::size_t i = 0; i < z.size(); ++i) a.data()[i] = activate(model.activation, z.data()[i]);
        res.cache.pre.push_back(std::move(z));
        x = std::move(a);
    }
    res.cache.logits = res.logits;
    return res;
}

Matrix mlp_logits(const MlpModel& model, const Matrix& batch_x) {
    if (batch_x.cols() != model.input_dim())
        throw ConfigError("batch has " + std::to_string(batch_x.cols()) + " features, model expects " +
                          std::to_string(model.input_dim()));
    Matrix x = batch_x;
    const std::size_t L = model.num_layers();
    for (std::size_t l = 0; l + 1 < L; ++l) {
        x = affine(x, model.weights[l], model.biases[l]);
        for (double& v : x.data()) v = activate(model.activation, v);
    }
    return affine(x, model.weights[L - 1], model.biases[L - 1]);
}

std::vector<double> softmax_ce_per_example(const Matrix& logits, std::span<const int> labels) {
    if (labels.size() != logits.rows())
        throw InputError("label count " + std::to_string(labels.size()) + " != logit rows " +
                         std::to_string(logits.rows()));
    const int k = static_cast<int>(logits.cols());
    std::vector<double> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= k)
            throw InputError("label " + std::to_string(y) + " out of range [0, " + std::to_string(k) + ")");
        const auto z = logits.row(i);
        const double mx = *std::max_element(z.begin(), z.end());
        double s = 0.0;
        for (double v : z) s += std::exp(v - mx);
        // max() guards against -0 and sub-ulp negatives from rounding
        out[i] = std::max(0.0, std::log(s) + mx - z[static_cast<std::size_t>(y)]);
    }
    return out;
}

GradientSet mlp_backward(const MlpModel& model, const ForwardCache& cache, std::span<const int> labels,
                         std::span<const double> per_example_weights, std::size_t mean_denominator) {
    const std::size_t L = model.num_layers();
    const std::size_t B = cache.logits.rows();
    const std::size_t k = model.num_classes();
    if (cache.inputs.size() != L || cache.pre.size() + 1 != L || cache.logits.cols() != k ||
        labels.size() != B || per_example_weights.size() != B)
        throw InternalError("mlp_backward: cache/labels/weights do not match the model and batch");
    for (double w : per_example_weights)
        if (!std::isfinite(w)) throw InputError("non-finite per-example weight");

    GradientSet g = GradientSet::zeros_like(model);
    if (B == 0) return g;

    // d/dlogits of (1/B) w_i CE_i = (w_i / B) (softmax_i - onehot_i)
    Matrix delta(B, k);
    const double inv_b = 1.0 / static_cast<double>(mean_denominator ? mean_denominator : B);
    for (std::size_t i = 0; i < B; ++i) {
        const double w = per_example_weights[i] * inv_b;
        auto d = delta.row(i);
        if (w == 0.0) continue;
        const auto z = cache.logits.row(i);
        const double mx = *std::max_element(z.begin(), z.end());
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            d[j] = std::exp(z[j] - mx);
            s += d[j];
        }
        for (std::size_t j = 0; j < k; ++j) d[j] = w * d[j] / s;
        d[static_cast<std::size_t>(labels[i])] -= w;
    }

    for (std::size_t l = L; l-- > 0;) {
        const Matrix& x = cache.inputs[l];
        Matrix& gw = g.weights[l];
        auto& gb = g.biases[l];
        const std::size_t in = x.cols(), out_dim = delta.cols();
        for (std::size_t i = 0; i < B; ++i) {
            const auto di = delta.row(i);
            const auto xi = x.row(i);
            for (std::size_t j = 0; j < out_dim; ++j) gb[j] += di[j];
            for (std::size_t p = 0; p < in; ++p) {
                const double xv = xi[p];
                if (xv == 0.0) continue;
                auto gp = gw.row(p);
                for (std::size_t j = 0; j < out_dim; ++j) gp[j] += xv * di[j];
            }
        }
        if (l == 0) break;
        const Matrix& w = model.weights[l];
        const Matrix& pre = cache.pre[l - 1];
        Matrix prev(B, in);
        for (std::size_t i = 0; i < B; ++i) {
            const auto di = delta.row(i);
            auto pi = prev.row(i);
            for (std::size_t p = 0; p < in; ++p) {
                const auto wp = w.row(p);
                double acc = 0.0;
                for (std::size_t j = 0; j < out_dim; ++j) acc += wp[j] * di[j];
                pi[p] = acc * activate_grad(model.activation, pre(i, p));
            }
        }
        delta = std::move(prev);
    }
    return g;
}

void sgd_momentum_step(MlpModel& model, const GradientSet& grads, GradientSet& velocity,
                       const SgdParams& params) {
    if (!(params.lr > 0.0) || params.momentum < 0.0 || params.momentum >= 1.0 || params.weight_decay < 0.0)
        throw ConfigError("SGD requires lr > 0, 0 <= momentum < 1, weight_decay >= 0");
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        for (double g : grads.weights[l].data())
            if (!std::isfinite(g)) throw NumericError("non-finite weight gradient in layer " + std::to_string(l));
        for (double g : grads.biases[l])
            if (!std::isfinite(g)) throw NumericError("non-finite bias gradient in layer " + std::to_string(l));
    }
    auto update = [&](std::span<double> theta, std::span<const double> g, std::span<double> v) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            v[i] = params.momentum * v[i] + (g[i] + params.weight_decay * theta[i]);
            theta[i] -= params.lr * v[i];
        }
    };
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        update(model.weights[l].data(), grads.weights[l].data(), velocity.weights[l].data());
        update(model.biases[l], grads.biases[l], velocity.biases[l]);
    }
}

std::vector<int> predict(const Matrix& logits) {
    std::vector<int> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto z = logits.row(i);
        // max_element returns the first maximum
        out[i] = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    }
    return out;
}

}  // namespace rtme
