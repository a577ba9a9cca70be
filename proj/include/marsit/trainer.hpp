// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "marsit/allreduce.hpp"
#include "marsit/analysis.hpp"
#include "marsit/dataset.hpp"
#include "marsit/dense_vector.hpp"
#include "marsit/errors.hpp"
#include "marsit/models.hpp"
#include "marsit/schedule.hpp"
#include "marsit/sync.hpp"

namespace marsit {

enum class SyncMode { marsit, full_precision, cascading, sum_ssdm };

struct TopologyConfig {
    Topology kind = Topology::ring;
    std::uint32_t rows = 0; // torus only
    std::uint32_t cols = 0;
};

struct DatasetConfig {
    enum class Source { synthetic, csv };
    Source source = Source::synthetic;
    // synthetic
    std::size_t n = 0;
    std::size_t d = 0;
    double noise_sigma = 0.0;
    std::optional<std::uint64_t> seed; // defaults to the run's global seed
    // csv
    std::string csv_path;
};

// One training run.  Stepsizes left unset resolve to the defaults
// eta_l = sqrt(M / T) and eta_s = sqrt(1 / (T * D)); an unset batch size
// means each worker uses its full shard every round.
struct RunConfig {
    SyncMode mode = SyncMode::marsit;
    std::uint32_t workers = 0;                          // M
    std::uint64_t rounds = 0;                           // T
    std::optional<std::uint64_t> full_precision_period; // K; unset = never dense
    std::optional<double> eta_l;
    std::optional<double> eta_s;
    double momentum = 0.0;
    bool lr_decay_at_full_sync = false;
    std::uint32_t local_steps = 1;
    std::optional<std::size_t> batch_size;
    TopologyConfig topology;
    std::uint64_t global_seed = 0;
    ModelConfig model;
    DatasetConfig dataset;

    void validate() const {
        if (workers < 2) {
            throw parameter_error("RunConfig: need at least 2 workers");
        }
        if (rounds == 0) {
            throw parameter_error("RunConfig: rounds must be >= 1");
        }
        if (full_precision_period && *full_precision_period == 0) {
            throw parameter_error("RunConfig: full-precision period must be >= 1");
        }
        if (eta_l && !(*eta_l > 0.0)) {
            throw parameter_error("RunConfig: eta_l must be > 0");
        }
        if (eta_s && !(*eta_s > 0.0)) {
            throw parameter_error("RunConfig: eta_s must be > 0");
        }
        if (momentum < 0.0 || momentum >= 1.0) {
            throw parameter_error("RunConfig: momentum must be in [0, 1)");
        }
        if (local_steps == 0) {
            throw parameter_error("RunConfig: local_steps must be >= 1");
        }
        if (batch_size && *batch_size == 0) {
            throw parameter_error("RunConfig: batch_size must be >= 1");
        }
        if (topology.kind == Topology::torus && topology.rows * topology.cols != workers) {
            throw parameter_error("RunConfig: torus grid does not factor the worker count");
        }
        model.validate();
    }
};

struct MetricsRecord {
    std::uint64_t round = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    std::uint64_t round_bits = 0;
    std::uint64_t cum_bits = 0;
    std::optional<double> matching_rate; // sign-compressed rounds only
    double wall_ms = 0.0;
};

struct TrainResult {
    std::vector<MetricsRecord> metrics;
    DenseVector final_model{std::vector<double>{0.0}};
    bool diverged = false;
    double final_loss = std::numeric_limits<double>::quiet_NaN();
    double resolved_eta_l = 0.0;
    double resolved_eta_s = 0.0;
};

namespace detail {

inline Dataset load_dataset(const RunConfig& cfg) {
    if (cfg.dataset.source == DatasetConfig::Source::csv) {
        return load_csv(cfg.dataset.csv_path);
    }
    const LabelKind kind = cfg.model.kind == ModelConfig::Kind::logistic ? LabelKind::binary
                                                                         : LabelKind::regression;
    return synth_dataset(cfg.dataset.seed.value_or(cfg.global_seed), cfg.dataset.n, cfg.dataset.d,
                         cfg.dataset.noise_sigma, kind);
}

inline DenseVector initial_params(const RunConfig& cfg, std::size_t dim, std::size_t features) {
    if (cfg.model.kind != ModelConfig::Kind::mlp) {
        return DenseVector::zeros(dim);
    }
    // Symmetry-broken start for the network, deterministic in the seed.
    RngStream rng(cfg.global_seed, RngPurpose::model_init, 0, 0, 0);
    const std::size_t h = cfg.model.hidden;
    std::vector<double> params(dim, 0.0);
    const double w1_scale = 1.0 / std::sqrt(static_cast<double>(features));
    for (std::size_t i = 0; i < h * features; ++i) params[i] = w1_scale * rng.next_gaussian();
    const double w2_scale = 1.0 / std::sqrt(static_cast<double>(h));
    for (std::size_t i = 0; i < h; ++i) {
        params[h * features + h + i] = w2_scale * rng.next_gaussian();
    }
    return DenseVector(std::move(params));
}

} // namespace detail

// Run the synchronized training loop on M simulated workers.  Per round:
// local (mini)batch gradients scaled by eta_l, one collective in the
// configured mode, and one identical model update everywhere.  The loop
// stops early and flags divergence if the loss or any intermediate stops
// being finite; metrics collected so far are kept.
inline TrainResult train(const RunConfig& cfg) {
    cfg.validate();
    const Dataset data = detail::load_dataset(cfg);
    const std::size_t dim = param_dim(cfg.model, data.d);
    const auto shards = data.shards(cfg.workers);

    const double eta_l0 = cfg.eta_l.value_or(
        std::sqrt(static_cast<double>(cfg.workers) / static_cast<double>(cfg.rounds)));
    const double eta_s = cfg.eta_s.value_or(
        std::sqrt(1.0 / (static_cast<double>(cfg.rounds) * static_cast<double>(dim))));

    const Schedule sched = cfg.topology.kind == Topology::ring
                               ? build_ring_schedule(cfg.workers)
                               : build_torus_schedule(cfg.topology.rows, cfg.topology.cols);

    std::vector<std::size_t> all_rows(data.n);
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});

    std::vector<DenseVector> params(cfg.workers, detail::initial_params(cfg, dim, data.d));
    std::vector<CompensationState> comp;
    std::vector<DenseVector> momentum_buf;
    for (std::uint32_t w = 0; w < cfg.workers; ++w) {
        comp.push_back(CompensationState{DenseVector::zeros(dim)});
        momentum_buf.push_back(DenseVector::zeros(dim));
    }

    TrainResult result;
    result.resolved_eta_l = eta_l0;
    result.resolved_eta_s = eta_s;

    double eta_l = eta_l0;
    std::uint64_t cum_bits = 0;
    for (std::uint64_t t = 0; t < cfg.rounds; ++t) {
        const auto tic = std::chrono::steady_clock::now();
        MetricsRecord record;
        record.round = t;
        try {
            // Local gradient passes.
            std::vector<DenseVector> scaled_grads;
            std::vector<double> grad_mean(dim, 0.0);
            scaled_grads.reserve(cfg.workers);
            for (std::uint32_t w = 0; w < cfg.workers; ++w) {
                DenseVector x_local = params[w];
                std::vector<double> accum(dim, 0.0);
                for (std::uint32_t s = 0; s < cfg.local_steps; ++s) {
                    std::vector<std::size_t> batch;
                    if (cfg.batch_size) {
                        RngStream rng(cfg.global_seed, RngPurpose::batch, w, t, s);
                        batch.resize(*cfg.batch_size);
                        for (std::size_t& i : batch) {
                            i = shards[w][static_cast<std::size_t>(rng.next_u64() %
                                                                   shards[w].size())];
                        }
                    } else {
                        batch = shards[w];
                    }
                    const DenseVector g = batch_gradient(cfg.model, x_local, data, batch);
                    for (std::size_t j = 0; j < dim; ++j) accum[j] += g[j];
                    if (s + 1 < cfg.local_steps) {
                        x_local = subtract(x_local, scaled(g, eta_l));
                    }
                }
                DenseVector raw = DenseVector(std::move(accum));
                if (cfg.momentum > 0.0) {
                    momentum_buf[w] = add(scaled(momentum_buf[w], cfg.momentum), raw);
                    raw = momentum_buf[w];
                }
                for (std::size_t j = 0; j < dim; ++j) grad_mean[j] += raw[j];
                scaled_grads.push_back(scaled(raw, eta_l));
            }
            for (double& g : grad_mean) g /= static_cast<double>(cfg.workers);
            record.grad_norm = DenseVector(grad_mean).l2_norm();

            // Collective synchronization.
            bool dense_round = false;
            std::vector<DenseVector> updates;
            std::optional<PackedSignVector> aggregate_bits;
            std::optional<DenseVector> aggregated_input_mean;
            switch (cfg.mode) {
                case SyncMode::marsit:
                case SyncMode::full_precision: {
                    const SyncConfig sync_cfg{cfg.mode == SyncMode::full_precision
                                                  ? std::optional<std::uint64_t>{1}
                                                  : cfg.full_precision_period,
                                              eta_s};
                    MarsitRoundResult res =
                        marsit_round(t, sync_cfg, scaled_grads, comp, sched, cfg.global_seed);
                    dense_round = res.full_precision;
                    aggregate_bits = res.aggregate_bits;
                    if (!dense_round) {
                        // Matching is judged against the mean of the actual
                        // sign-round inputs u_m = grad_m + c_m.
                        std::vector<double> mean(dim, 0.0);
                        for (std::uint32_t w = 0; w < cfg.workers; ++w) {
                            const DenseVector u = add(scaled_grads[w], comp[w].c);
                            for (std::size_t j = 0; j < dim; ++j) mean[j] += u[j];
                        }
                        for (double& v : mean) v /= static_cast<double>(cfg.workers);
                        aggregated_input_mean = DenseVector(std::move(mean));
                    }
                    comp = std::move(res.compensation);
                    record.round_bits = res.bits.total;
                    updates.assign(cfg.workers, res.global_update);
                    break;
                }
                case SyncMode::cascading: {
                    CascadingAllreduceResult res =
                        cascading_allreduce(scaled_grads, sched, RoundContext{cfg.global_seed, t});
                    consensus(res.per_worker);
                    record.round_bits = res.bits.total;
                    aggregate_bits = pack_signs(res.per_worker[0]);
                    aggregated_input_mean = DenseVector(grad_mean); // unscaled mean direction
                    updates = std::move(res.per_worker);
                    break;
                }
                case SyncMode::sum_ssdm: {
                    SumSsdmAllreduceResult res =
                        sum_ssdm_allreduce(scaled_grads, sched, RoundContext{cfg.global_seed, t});
                    consensus(res.per_worker);
                    record.round_bits = res.bits.total;
                    aggregate_bits = pack_signs(res.per_worker[0]);
                    aggregated_input_mean = DenseVector(grad_mean);
                    updates = std::move(res.per_worker);
                    break;
                }
            }
            cum_bits += record.round_bits;
            record.cum_bits = cum_bits;
            if (aggregate_bits && aggregated_input_mean) {
                record.matching_rate = matching_rate(*aggregate_bits, *aggregated_input_mean);
            }

            // Identical update everywhere; consensus is a hard invariant.
            for (std::uint32_t w = 0; w < cfg.workers; ++w) {
                params[w] = subtract(params[w], updates[w]);
            }
            consensus(params);

            record.loss = batch_loss(cfg.model, params[0], data, all_rows);

            if (cfg.lr_decay_at_full_sync && dense_round) {
                eta_l /= 10.0;
            }
        } catch (const non_finite_error&) {
            result.diverged = true;
            break;
        }
        record.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - tic)
                             .count();
        result.metrics.push_back(record);
        if (!std::isfinite(record.loss)) {
            result.diverged = true;
            break;
        }
    }

    result.final_model = params[0];
    if (!result.metrics.empty()) {
        result.final_loss = result.metrics.back().loss;
    }
    return result;
}

} // namespace marsit
