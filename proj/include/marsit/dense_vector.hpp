// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "marsit/errors.hpp"

namespace marsit {

// A fixed-length vector of finite doubles.  Every constructor validates the
// contents, so any NaN/Inf produced upstream (for example by a diverging
// compression chain) surfaces as a non_finite_error at the first boundary it
// crosses instead of silently propagating.
class DenseVector {
public:
    explicit DenseVector(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) {
            throw parameter_error("DenseVector: dimension must be >= 1");
        }
        for (double v : values_) {
            if (!std::isfinite(v)) {
                throw non_finite_error("DenseVector: non-finite entry");
            }
        }
    }

    static DenseVector zeros(std::size_t dim) {
        return DenseVector(std::vector<double>(dim, 0.0));
    }

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }
    std::span<const double> span() const { return values_; }

    double l2_norm() const {
        double acc = 0.0;
        for (double v : values_) acc += v * v;
        return std::sqrt(acc);
    }

    friend bool operator==(const DenseVector&, const DenseVector&) = default;

private:
    std::vector<double> values_;
};

inline DenseVector add(const DenseVector& a, const DenseVector& b) {
    if (a.size() != b.size()) {
        throw parameter_error("add: dimension mismatch");
    }
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return DenseVector(std::move(out));
}

inline DenseVector subtract(const DenseVector& a, const DenseVector& b) {
    if (a.size() != b.size()) {
        throw parameter_error("subtract: dimension mismatch");
    }
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return DenseVector(std::move(out));
}

inline DenseVector scaled(const DenseVector& a, double factor) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * factor;
    return DenseVector(std::move(out));
}

} // namespace marsit
