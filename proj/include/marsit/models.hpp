// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "marsit/dataset.hpp"
#include "marsit/dense_vector.hpp"
#include "marsit/errors.hpp"

namespace marsit {

struct ModelConfig {
    enum class Kind { least_squares, logistic, mlp };
    Kind kind = Kind::least_squares;
    std::uint32_t hidden = 0; // mlp only

    void validate() const {
        if (kind == Kind::mlp && hidden == 0) {
            throw parameter_error("ModelConfig: mlp needs a hidden width >= 1");
        }
    }
};

// Number of trainable parameters for a model over d input features.
inline std::size_t param_dim(const ModelConfig& model, std::size_t d) {
    model.validate();
    switch (model.kind) {
        case ModelConfig::Kind::least_squares:
        case ModelConfig::Kind::logistic:
            return d;
        case ModelConfig::Kind::mlp:
            // W1 (hidden x d), b1, w2, b2.
            return static_cast<std::size_t>(model.hidden) * (d + 2) + 1;
    }
    throw parameter_error("param_dim: unknown model kind");
}

namespace detail {

inline void check_batch(const Dataset& data, std::span<const std::size_t> batch) {
    if (batch.empty()) {
        throw parameter_error("model: empty batch");
    }
    for (std::size_t i : batch) {
        if (i >= data.n) {
            throw parameter_error("model: batch index out of range");
        }
    }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * b[j];
    return acc;
}

// log(1 + exp(z)) without overflow for large |z|.
inline double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

inline double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// Forward pass of the one-hidden-layer tanh network; fills the hidden
// activations and returns the scalar output.
inline double mlp_forward(const ModelConfig& model, std::span<const double> params,
                          std::span<const double> row, std::vector<double>& hidden_out) {
    const std::size_t h = model.hidden;
    const std::size_t d = row.size();
    const double* w1 = params.data();              // h x d
    const double* b1 = params.data() + h * d;      // h
    const double* w2 = b1 + h;                     // h
    const double b2 = w2[h];
    hidden_out.resize(h);
    double out = b2;
    for (std::size_t k = 0; k < h; ++k) {
        double z = b1[k];
        for (std::size_t j = 0; j < d; ++j) z += w1[k * d + j] * row[j];
        hidden_out[k] = std::tanh(z);
        out += w2[k] * hidden_out[k];
    }
    return out;
}

} // namespace detail

// Mean squared-error gradient of the linear model:
// (1/|B|) * sum_i a_i (a_i^T x - y_i).
inline DenseVector grad_least_squares(const DenseVector& x, const Dataset& data,
                                      std::span<const std::size_t> batch) {
    detail::check_batch(data, batch);
    if (x.size() != data.d) {
        throw parameter_error("grad_least_squares: dimension mismatch");
    }
    std::vector<double> grad(data.d, 0.0);
    for (std::size_t i : batch) {
        const auto row = data.row(i);
        const double residual = detail::dot(row, x.span()) - data.labels[i];
        for (std::size_t j = 0; j < data.d; ++j) grad[j] += row[j] * residual;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) g *= inv;
    return DenseVector(std::move(grad));
}

// Gradient of the mean logistic loss with labels in {0, 1}:
// (1/|B|) * sum_i (sigmoid(a_i^T x) - y_i) a_i.
inline DenseVector grad_logistic(const DenseVector& x, const Dataset& data,
                                 std::span<const std::size_t> batch) {
    detail::check_batch(data, batch);
    if (x.size() != data.d) {
        throw parameter_error("grad_logistic: dimension mismatch");
    }
    std::vector<double> grad(data.d, 0.0);
    for (std::size_t i : batch) {
        const auto row = data.row(i);
        const double err = detail::sigmoid(detail::dot(row, x.span())) - data.labels[i];
        for (std::size_t j = 0; j < data.d; ++j) grad[j] += row[j] * err;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) g *= inv;
    return DenseVector(std::move(grad));
}

inline double batch_loss(const ModelConfig& model, const DenseVector& params, const Dataset& data,
                         std::span<const std::size_t> batch) {
    detail::check_batch(data, batch);
    const double inv = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    switch (model.kind) {
        case ModelConfig::Kind::least_squares: {
            for (std::size_t i : batch) {
                const double r = detail::dot(data.row(i), params.span()) - data.labels[i];
                loss += 0.5 * r * r;
            }
            return loss * inv;
        }
        case ModelConfig::Kind::logistic: {
            for (std::size_t i : batch) {
                const double z = detail::dot(data.row(i), params.span());
                loss += detail::softplus(z) - data.labels[i] * z;
            }
            return loss * inv;
        }
        case ModelConfig::Kind::mlp: {
            std::vector<double> hidden;
            for (std::size_t i : batch) {
                const double r =
                    detail::mlp_forward(model, params.span(), data.row(i), hidden) - data.labels[i];
                loss += 0.5 * r * r;
            }
            return loss * inv;
        }
    }
    throw parameter_error("batch_loss: unknown model kind");
}

inline DenseVector batch_gradient(const ModelConfig& model, const DenseVector& params,
                                  const Dataset& data, std::span<const std::size_t> batch) {
    switch (model.kind) {
        case ModelConfig::Kind::least_squares:
            return grad_least_squares(params, data, batch);
        case ModelConfig::Kind::logistic:
            return grad_logistic(params, data, batch);
        case ModelConfig::Kind::mlp:
            break;
    }
    detail::check_batch(data, batch);
    if (params.size() != param_dim(model, data.d)) {
        throw parameter_error("batch_gradient: dimension mismatch");
    }
    const std::size_t h = model.hidden;
    const std::size_t d = data.d;
    std::vector<double> grad(params.size(), 0.0);
    double* gw1 = grad.data();
    double* gb1 = grad.data() + h * d;
    double* gw2 = gb1 + h;
    double* gb2 = gw2 + h;
    const double* w2 = params.span().data() + h * d + h;
    const double inv = 1.0 / static_cast<double>(batch.size());
    std::vector<double> hidden;
    for (std::size_t i : batch) {
        const auto row = data.row(i);
        const double out = detail::mlp_forward(model, params.span(), row, hidden);
        const double dout = (out - data.labels[i]) * inv;
        *gb2 += dout;
        for (std::size_t k = 0; k < h; ++k) {
            gw2[k] += dout * hidden[k];
            const double dz = dout * w2[k] * (1.0 - hidden[k] * hidden[k]);
            gb1[k] += dz;
            for (std::size_t j = 0; j < d; ++j) gw1[k * d + j] += dz * row[j];
        }
    }
    return DenseVector(std::move(grad));
}

} // namespace marsit
