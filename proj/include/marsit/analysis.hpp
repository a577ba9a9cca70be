// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "marsit/dense_vector.hpp"
#include "marsit/errors.hpp"
#include "marsit/rng.hpp"
#include "marsit/sign_vector.hpp"
#include "marsit/ssdm.hpp"

namespace marsit {

// ---------------------------------------------------------------------------
// Deviation experiments: how far a compressed aggregate strays from the
// exact mean, measured as a Monte-Carlo estimate of E||s_hat - s1||^2.
//
//   ps:         every worker compresses once, estimates are averaged
//   cascading:  each hop decompresses, adds its own vector, recompresses
//
// The matching theoretical ceilings are D*G^2 for ps and (2D)^M * G^2 / M
// for cascading.
// ---------------------------------------------------------------------------

enum class DeviationMode { ps, cascading };

struct DeviationConfig {
    std::uint32_t workers = 0;  // M
    std::size_t dim = 0;        // D
    double gradient_norm = 0.0; // G, every drawn gradient is rescaled to this norm
    std::size_t trials = 0;
    DeviationMode mode = DeviationMode::ps;
    std::uint64_t seed = 0;

    void validate() const {
        if (workers == 0) {
            throw parameter_error("DeviationConfig: need at least 1 worker");
        }
        if (dim == 0) {
            throw parameter_error("DeviationConfig: dim must be >= 1");
        }
        if (!(gradient_norm > 0.0)) {
            throw parameter_error("DeviationConfig: gradient norm must be > 0");
        }
        if (trials == 0) {
            throw parameter_error("DeviationConfig: trials must be >= 1");
        }
    }
};

struct DeviationResult {
    double estimate = 0.0;      // Monte-Carlo mean of ||s_hat - s1||^2
    double mc_stderr = 0.0;     // standard error of that mean
    double bound = 0.0;         // theoretical ceiling; +inf when it overflows
    bool bound_overflow = false;
};

namespace detail {

// Gaussian direction rescaled to exactly the requested norm.  The bounds
// are worst-case over the norm ball, so pinning the norm makes estimates
// comparable across worker counts.
inline DenseVector draw_gradient(std::uint64_t seed, std::uint32_t worker, std::uint64_t trial,
                                 std::size_t dim, double norm) {
    RngStream rng(seed, RngPurpose::trial, worker, trial, 0);
    std::vector<double> v(dim);
    for (double& x : v) x = rng.next_gaussian();
    DenseVector g(std::move(v));
    const double n = g.l2_norm();
    if (n == 0.0) {
        // Vanishingly unlikely; fall back to a deterministic unit direction.
        std::vector<double> e(dim, 0.0);
        e[0] = norm;
        return DenseVector(std::move(e));
    }
    return scaled(g, norm / n);
}

} // namespace detail

// Monte-Carlo estimate of the squared deviation between the compressed
// aggregate and the exact mean, next to the corresponding theoretical
// ceiling.  Gradients are redrawn each trial; the per-position compression
// streams are keyed identically in both modes, so at M = 1 the two modes
// perform bit-identical work.
inline DeviationResult deviation_experiment(const DeviationConfig& cfg) {
    cfg.validate();
    const double m = static_cast<double>(cfg.workers);
    const double g2 = cfg.gradient_norm * cfg.gradient_norm;

    double accum = 0.0;
    double accum_sq = 0.0;
    for (std::uint64_t trial = 0; trial < cfg.trials; ++trial) {
        std::vector<DenseVector> grads;
        grads.reserve(cfg.workers);
        for (std::uint32_t w = 0; w < cfg.workers; ++w) {
            grads.push_back(
                detail::draw_gradient(cfg.seed, w, trial, cfg.dim, cfg.gradient_norm));
        }

        std::vector<double> s1(cfg.dim, 0.0);
        for (const DenseVector& g : grads) {
            for (std::size_t j = 0; j < cfg.dim; ++j) s1[j] += g[j];
        }
        for (double& x : s1) x /= m;

        DenseVector estimate = DenseVector::zeros(cfg.dim);
        if (cfg.mode == DeviationMode::ps) {
            std::vector<double> acc(cfg.dim, 0.0);
            for (std::uint32_t w = 0; w < cfg.workers; ++w) {
                RngStream rng(cfg.seed, RngPurpose::ssdm, w, trial, 0);
                const DenseVector q = ssdm_decompress(ssdm_compress(grads[w], rng));
                for (std::size_t j = 0; j < cfg.dim; ++j) acc[j] += q[j];
            }
            for (double& x : acc) x /= m;
            estimate = DenseVector(std::move(acc));
        } else {
            RngStream rng0(cfg.seed, RngPurpose::ssdm, 0, trial, 0);
            DenseVector chain = ssdm_decompress(ssdm_compress(grads[0], rng0));
            for (std::uint32_t w = 1; w < cfg.workers; ++w) {
                RngStream rng(cfg.seed, RngPurpose::ssdm, w, trial, 0);
                chain = ssdm_decompress(ssdm_compress(add(chain, grads[w]), rng));
            }
            estimate = scaled(chain, 1.0 / m);
        }

        double dev = 0.0;
        for (std::size_t j = 0; j < cfg.dim; ++j) {
            const double d = estimate[j] - s1[j];
            dev += d * d;
        }
        accum += dev;
        accum_sq += dev * dev;
    }

    DeviationResult out;
    const double n = static_cast<double>(cfg.trials);
    out.estimate = accum / n;
    out.mc_stderr =
        std::sqrt(std::max(0.0, accum_sq / n - out.estimate * out.estimate) / n);
    if (cfg.mode == DeviationMode::ps) {
        out.bound = static_cast<double>(cfg.dim) * g2;
    } else {
        out.bound =
            std::pow(2.0 * static_cast<double>(cfg.dim), static_cast<double>(cfg.workers)) * g2 / m;
        if (!std::isfinite(out.bound)) {
            out.bound = std::numeric_limits<double>::infinity();
            out.bound_overflow = true;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Unbiasedness triple: with the gradients held fixed, the Monte-Carlo means
// of both compressed aggregates converge coordinatewise to the exact mean.
// ---------------------------------------------------------------------------

struct UnbiasednessResult {
    std::vector<double> exact;            // s1
    std::vector<double> ps_mean;          // MC mean of the ps aggregate
    std::vector<double> cascading_mean;   // MC mean of the cascading aggregate
    std::vector<double> ps_stderr;        // standard error per coordinate
    std::vector<double> cascading_stderr;
};

inline UnbiasednessResult unbiasedness_experiment(std::uint32_t workers, std::size_t dim,
                                                  double gradient_norm, std::size_t trials,
                                                  std::uint64_t seed) {
    DeviationConfig probe{workers, dim, gradient_norm, trials, DeviationMode::ps, seed};
    probe.validate();
    const double m = static_cast<double>(workers);

    // Fixed gradient set: this claim is about the compression randomness only.
    std::vector<DenseVector> grads;
    grads.reserve(workers);
    for (std::uint32_t w = 0; w < workers; ++w) {
        grads.push_back(detail::draw_gradient(seed, w, 0, dim, gradient_norm));
    }
    UnbiasednessResult out;
    out.exact.assign(dim, 0.0);
    for (const DenseVector& g : grads) {
        for (std::size_t j = 0; j < dim; ++j) out.exact[j] += g[j];
    }
    for (double& x : out.exact) x /= m;

    std::vector<double> ps_sum(dim, 0.0), ps_sq(dim, 0.0);
    std::vector<double> ca_sum(dim, 0.0), ca_sq(dim, 0.0);
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        std::vector<double> ps(dim, 0.0);
        for (std::uint32_t w = 0; w < workers; ++w) {
            RngStream rng(seed, RngPurpose::ssdm, w, trial, 0);
            const DenseVector q = ssdm_decompress(ssdm_compress(grads[w], rng));
            for (std::size_t j = 0; j < dim; ++j) ps[j] += q[j];
        }
        for (std::size_t j = 0; j < dim; ++j) {
            ps[j] /= m;
            ps_sum[j] += ps[j];
            ps_sq[j] += ps[j] * ps[j];
        }

        RngStream rng0(seed, RngPurpose::ssdm, 0, trial, 1);
        DenseVector chain = ssdm_decompress(ssdm_compress(grads[0], rng0));
        for (std::uint32_t w = 1; w < workers; ++w) {
            RngStream rng(seed, RngPurpose::ssdm, w, trial, 1);
            chain = ssdm_decompress(ssdm_compress(add(chain, grads[w]), rng));
        }
        for (std::size_t j = 0; j < dim; ++j) {
            const double v = chain[j] / m;
            ca_sum[j] += v;
            ca_sq[j] += v * v;
        }
    }

    const double n = static_cast<double>(trials);
    out.ps_mean.resize(dim);
    out.cascading_mean.resize(dim);
    out.ps_stderr.resize(dim);
    out.cascading_stderr.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        out.ps_mean[j] = ps_sum[j] / n;
        out.cascading_mean[j] = ca_sum[j] / n;
        const double ps_var = std::max(0.0, ps_sq[j] / n - out.ps_mean[j] * out.ps_mean[j]);
        const double ca_var =
            std::max(0.0, ca_sq[j] / n - out.cascading_mean[j] * out.cascading_mean[j]);
        out.ps_stderr[j] = std::sqrt(ps_var / n);
        out.cascading_stderr[j] = std::sqrt(ca_var / n);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scalar figures of merit.
// ---------------------------------------------------------------------------

// Fraction of coordinates where the aggregated bit agrees with the sign of
// the exact mean (zero counts as positive, mirroring pack_signs).
inline double matching_rate(const PackedSignVector& approx_bits, const DenseVector& true_mean) {
    if (approx_bits.size() != true_mean.size()) {
        throw parameter_error("matching_rate: length mismatch");
    }
    std::size_t matches = 0;
    for (std::size_t j = 0; j < true_mean.size(); ++j) {
        if (approx_bits.bit(j) == (true_mean[j] >= 0.0)) ++matches;
    }
    return static_cast<double>(matches) / static_cast<double>(true_mean.size());
}

// Average payload bits per coordinate per round when every K-th round is a
// 32-bit dense synchronization and the rest carry one sign bit.  An empty
// period means the dense path never runs.
inline double avg_bits_per_element(std::optional<std::uint64_t> period, double bits_full = 32.0,
                                   double bits_sign = 1.0) {
    if (!period) {
        return bits_sign;
    }
    if (*period == 0) {
        throw parameter_error("avg_bits_per_element: period must be >= 1");
    }
    const double k = static_cast<double>(*period);
    return bits_full / k + (k - 1.0) * bits_sign / k;
}

} // namespace marsit
