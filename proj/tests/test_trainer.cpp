// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
//
// Models, datasets, checkpoints, and the training loop: gradient
// correctness against finite differences, dataset determinism, file
// round trips, and trainer behaviour across synchronization modes.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "marsit/checkpoint.hpp"
#include "marsit/dataset.hpp"
#include "marsit/models.hpp"
#include "marsit/trainer.hpp"

using namespace marsit;

namespace {

// Central finite difference of the batch loss, one coordinate at a time.
DenseVector fd_gradient(const ModelConfig& model, const DenseVector& params, const Dataset& data,
                        const std::vector<std::size_t>& batch, double step) {
    std::vector<double> g(params.size());
    for (std::size_t j = 0; j < params.size(); ++j) {
        std::vector<double> hi = params.values();
        std::vector<double> lo = params.values();
        hi[j] += step;
        lo[j] -= step;
        g[j] = (batch_loss(model, DenseVector(hi), data, batch) -
                batch_loss(model, DenseVector(lo), data, batch)) /
               (2.0 * step);
    }
    return DenseVector(std::move(g));
}

DenseVector random_point(std::size_t dim, std::uint64_t seed, double scale) {
    RngStream rng(seed, RngPurpose::trial, 0, 7, 7);
    std::vector<double> v(dim);
    for (double& x : v) x = scale * rng.next_gaussian();
    return DenseVector(std::move(v));
}

std::vector<std::size_t> all_rows(const Dataset& data) {
    std::vector<std::size_t> rows(data.n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

// Least-squares optimum by normal equations, solved with plain Gaussian
// elimination (partial pivoting); fine at test dimensions.
DenseVector normal_equations(const Dataset& data) {
    const std::size_t d = data.d;
    std::vector<double> a(d * d, 0.0);
    std::vector<double> b(d, 0.0);
    for (std::size_t i = 0; i < data.n; ++i) {
        const auto row = data.row(i);
        for (std::size_t p = 0; p < d; ++p) {
            b[p] += row[p] * data.labels[i];
            for (std::size_t q = 0; q < d; ++q) a[p * d + q] += row[p] * row[q];
        }
    }
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r) {
            if (std::fabs(a[r * d + col]) > std::fabs(a[pivot * d + col])) pivot = r;
        }
        for (std::size_t q = 0; q < d; ++q) std::swap(a[col * d + q], a[pivot * d + q]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = 0; r < d; ++r) {
            if (r == col) continue;
            const double f = a[r * d + col] / a[col * d + col];
            for (std::size_t q = col; q < d; ++q) a[r * d + q] -= f * a[col * d + q];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(d);
    for (std::size_t p = 0; p < d; ++p) x[p] = b[p] / a[p * d + p];
    return DenseVector(std::move(x));
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("analytic gradients match central finite differences", "[trainer]") {
    struct Probe {
        ModelConfig model;
        LabelKind labels;
        double scale;
    };
    const std::vector<Probe> probes = {
        {{ModelConfig::Kind::least_squares, 0}, LabelKind::regression, 0.5},
        {{ModelConfig::Kind::logistic, 0}, LabelKind::binary, 0.5},
        {{ModelConfig::Kind::mlp, 5}, LabelKind::regression, 0.4},
    };
    for (const Probe& probe : probes) {
        const Dataset data = synth_dataset(11, 40, 6, 0.1, probe.labels);
        const std::size_t dim = param_dim(probe.model, data.d);
        const auto batch = all_rows(data);
        for (std::uint64_t pt = 0; pt < 5; ++pt) {
            const DenseVector x = random_point(dim, 100 + pt, probe.scale);
            const DenseVector g = batch_gradient(probe.model, x, data, batch);
            const DenseVector fd = fd_gradient(probe.model, x, data, batch, 1e-5);
            for (std::size_t j = 0; j < dim; ++j) {
                const double denom = std::max(1.0, std::fabs(fd[j]));
                REQUIRE(std::fabs(g[j] - fd[j]) / denom < 1e-6);
            }
        }
    }
}

TEST_CASE("mlp parameter count covers all blocks", "[trainer]") {
    REQUIRE(param_dim({ModelConfig::Kind::least_squares, 0}, 7) == 7);
    REQUIRE(param_dim({ModelConfig::Kind::logistic, 0}, 3) == 3);
    // W1 = 4x7, b1 = 4, w2 = 4, b2 = 1.
    REQUIRE(param_dim({ModelConfig::Kind::mlp, 4}, 7) == 4 * 7 + 4 + 4 + 1);
    REQUIRE_THROWS_AS(param_dim({ModelConfig::Kind::mlp, 0}, 7), parameter_error);
}

TEST_CASE("synthetic datasets are seed-deterministic", "[trainer]") {
    const Dataset a = synth_dataset(42, 64, 5, 0.2, LabelKind::regression);
    const Dataset b = synth_dataset(42, 64, 5, 0.2, LabelKind::regression);
    const Dataset c = synth_dataset(43, 64, 5, 0.2, LabelKind::regression);
    REQUIRE(a.features == b.features);
    REQUIRE(a.labels == b.labels);
    REQUIRE(a.features != c.features);
}

TEST_CASE("regression label variance tracks the generative model", "[trainer]") {
    // y = <a, w*> + sigma * eps with a ~ N(0, I): Var(y) = ||w*||^2 + sigma^2.
    // With w* ~ N(0, I_d), E||w*||^2 = d, so at d = 16 the sample variance
    // over 10^4 rows should sit near 16 + 0.25 for this seed.
    const std::size_t n = 10000;
    const Dataset data = synth_dataset(7, n, 16, 0.5, LabelKind::regression);
    double mean = 0.0;
    for (double y : data.labels) mean += y;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double y : data.labels) var += (y - mean) * (y - mean);
    var /= static_cast<double>(n);

    RngStream probe(7, RngPurpose::dataset, 0, 0, 0);
    double truth_sq = 0.0;
    for (std::size_t j = 0; j < 16; ++j) {
        const double w = probe.next_gaussian();
        truth_sq += w * w;
    }
    const double expected = truth_sq + 0.25;
    REQUIRE(var > 0.9 * expected);
    REQUIRE(var < 1.1 * expected);
}

TEST_CASE("regression residuals around the planted model match the noise level", "[trainer]") {
    // Subtracting <a, w*> from each label must leave pure sigma * eps noise,
    // so the residual variance over 10^4 rows sits within 10% of sigma^2.
    const std::size_t n = 10000;
    const std::size_t d = 16;
    const double sigma = 0.5;
    const Dataset data = synth_dataset(7, n, d, sigma, LabelKind::regression);

    RngStream probe(7, RngPurpose::dataset, 0, 0, 0);
    std::vector<double> truth(d);
    for (double& w : truth) w = probe.next_gaussian();

    double mean = 0.0;
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        const auto row = data.row(i);
        for (std::size_t j = 0; j < d; ++j) fit += row[j] * truth[j];
        residual[i] = data.labels[i] - fit;
        mean += residual[i];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double r : residual) var += (r - mean) * (r - mean);
    var /= static_cast<double>(n);

    REQUIRE(var > 0.9 * sigma * sigma);
    REQUIRE(var < 1.1 * sigma * sigma);
}

TEST_CASE("least-squares gradient matches hand arithmetic on one sample", "[trainer]") {
    // a = (1, 0), y = 0, x = (2, 0): residual <a,x> - y = 2, gradient = 2 * a.
    Dataset data;
    data.n = 1;
    data.d = 2;
    data.features = {1.0, 0.0};
    data.labels = {0.0};
    const std::vector<std::size_t> batch{0};
    const DenseVector g = batch_gradient(ModelConfig{ModelConfig::Kind::least_squares, 0},
                                         DenseVector({2.0, 0.0}), data, batch);
    REQUIRE(g[0] == 2.0);
    REQUIRE(g[1] == 0.0);
}

TEST_CASE("logistic gradient at zero weights is the half-minus-label average", "[trainer]") {
    // sigmoid(0) = 1/2, so the gradient reduces to (1/B) sum (1/2 - y_i) a_i.
    Dataset data;
    data.n = 3;
    data.d = 2;
    data.features = {1.0, 2.0, -3.0, 0.5, 4.0, -1.0};
    data.labels = {1.0, 0.0, 1.0};
    const std::vector<std::size_t> batch{0, 1, 2};
    const DenseVector g = batch_gradient(ModelConfig{ModelConfig::Kind::logistic, 0},
                                         DenseVector({0.0, 0.0}), data, batch);
    double e0 = 0.0;
    double e1 = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double c = 0.5 - data.labels[i];
        e0 += c * data.features[2 * i];
        e1 += c * data.features[2 * i + 1];
    }
    e0 /= 3.0;
    e1 /= 3.0;
    REQUIRE(std::abs(g[0] - e0) < 1e-15);
    REQUIRE(std::abs(g[1] - e1) < 1e-15);
}

TEST_CASE("logistic gradient saturates on separable data", "[trainer]") {
    // Pushing the weights out along a separating direction drives every
    // per-sample sigmoid toward its label, so the gradient norm decays to 0.
    Dataset data;
    data.n = 2;
    data.d = 1;
    data.features = {1.0, -1.0};
    data.labels = {1.0, 0.0};
    const std::vector<std::size_t> batch{0, 1};
    const ModelConfig model{ModelConfig::Kind::logistic, 0};
    const double near = batch_gradient(model, DenseVector({1.0}), data, batch).l2_norm();
    const double far = batch_gradient(model, DenseVector({10.0}), data, batch).l2_norm();
    REQUIRE(far < near);
    REQUIRE(far < 1e-3);
}

TEST_CASE("binary labels are balanced around the logistic link", "[trainer]") {
    const Dataset data = synth_dataset(9, 10000, 8, 0.0, LabelKind::binary);
    double ones = 0.0;
    for (double y : data.labels) {
        REQUIRE((y == 0.0 || y == 1.0));
        ones += y;
    }
    const double rate = ones / static_cast<double>(data.n);
    REQUIRE(rate > 0.4);
    REQUIRE(rate < 0.6);
}

TEST_CASE("shards cover the dataset with near-equal sizes", "[trainer]") {
    Dataset data = synth_dataset(5, 103, 3, 0.0, LabelKind::regression);
    for (std::uint32_t workers : {2u, 4u, 7u}) {
        const auto shards = data.shards(workers);
        REQUIRE(shards.size() == workers);
        std::vector<bool> seen(data.n, false);
        std::size_t lo = data.n, hi = 0;
        for (const auto& shard : shards) {
            lo = std::min(lo, shard.size());
            hi = std::max(hi, shard.size());
            for (std::size_t i : shard) {
                REQUIRE_FALSE(seen[i]);
                seen[i] = true;
            }
        }
        REQUIRE(hi - lo <= 1);
        for (bool s : seen) REQUIRE(s);
    }
}

TEST_CASE("csv loader round-trips a generated dataset", "[trainer]") {
    const Dataset data = synth_dataset(3, 20, 4, 0.1, LabelKind::regression);
    const auto path = temp_file("marsit_test_roundtrip.csv");
    {
        std::ofstream out(path);
        out << "f0,f1,f2,f3,label\n";
        out.precision(17);
        for (std::size_t i = 0; i < data.n; ++i) {
            for (std::size_t j = 0; j < data.d; ++j) out << data.features[i * data.d + j] << ',';
            out << data.labels[i] << '\n';
        }
    }
    const Dataset back = load_csv(path.string());
    REQUIRE(back.n == data.n);
    REQUIRE(back.d == data.d);
    REQUIRE(back.features == data.features);
    REQUIRE(back.labels == data.labels);
    std::filesystem::remove(path);
}

TEST_CASE("csv loader rejects malformed input with a line number", "[trainer]") {
    const auto path = temp_file("marsit_test_malformed.csv");
    {
        std::ofstream out(path);
        out << "x,y,label\n1.0,2.0,3.0\n1.0,oops,3.0\n";
    }
    REQUIRE_THROWS_WITH(load_csv(path.string()), Catch::Matchers::ContainsSubstring("line 3"));
    std::filesystem::remove(path);

    {
        std::ofstream out(path);
        out << "x,y,label\n";
    }
    REQUIRE_THROWS_AS(load_csv(path.string()), parse_error);
    std::filesystem::remove(path);

    REQUIRE_THROWS_AS(load_csv("/nonexistent/marsit.csv"), parse_error);
}

TEST_CASE("csv loader rejects ragged rows", "[trainer]") {
    const auto path = temp_file("marsit_test_ragged.csv");
    {
        std::ofstream out(path);
        out << "1.0,2.0,3.0\n1.0,2.0\n";
    }
    REQUIRE_THROWS_WITH(load_csv(path.string()), Catch::Matchers::ContainsSubstring("line 2"));
    std::filesystem::remove(path);
}

TEST_CASE("checkpoints survive a write/read round trip bit-exactly", "[trainer]") {
    const DenseVector params = random_point(33, 77, 2.5);
    const auto path = temp_file("marsit_test_ckpt.bin");
    write_checkpoint(path.string(), params);
    const DenseVector back = read_checkpoint(path.string());
    REQUIRE(back == params);
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint reader rejects foreign and truncated files", "[trainer]") {
    const auto path = temp_file("marsit_test_ckpt_bad.bin");
    {
        std::ofstream out(path, std::ios::binary);
        out << "definitely not a checkpoint";
    }
    REQUIRE_THROWS_AS(read_checkpoint(path.string()), parse_error);

    write_checkpoint(path.string(), random_point(8, 1, 1.0));
    std::filesystem::resize_file(path, 30); // cut into the payload
    REQUIRE_THROWS_AS(read_checkpoint(path.string()), parse_error);
    std::filesystem::remove(path);

    REQUIRE_THROWS_AS(read_checkpoint("/nonexistent/marsit.ckpt"), parse_error);
}

TEST_CASE("full-precision mode on duplicated shards equals single-node descent",
          "[trainer]") {
    // Each row written twice in a row: under the loader's round-robin
    // sharding both workers then see the base rows, in order, so their
    // gradients are bitwise identical, the dense mean of two equal vectors
    // is exact, and the distributed run must match a hand-rolled
    // single-node loop bit for bit.
    const Dataset base = synth_dataset(21, 30, 4, 0.1, LabelKind::regression);

    const auto csv = temp_file("marsit_test_doubled.csv");
    {
        std::ofstream out(csv);
        out.precision(17);
        for (std::size_t i = 0; i < base.n; ++i) {
            for (int copy = 0; copy < 2; ++copy) {
                for (std::size_t j = 0; j < base.d; ++j) {
                    out << base.features[i * base.d + j] << ',';
                }
                out << base.labels[i] << '\n';
            }
        }
    }

    RunConfig cfg;
    cfg.mode = SyncMode::full_precision;
    cfg.workers = 2;
    cfg.rounds = 25;
    cfg.eta_l = 0.05;
    cfg.eta_s = 1.0; // unused on the dense path but must validate
    cfg.global_seed = 4;
    cfg.model = {ModelConfig::Kind::least_squares, 0};
    cfg.dataset.source = DatasetConfig::Source::csv;
    cfg.dataset.csv_path = csv.string();
    const TrainResult result = train(cfg);
    std::filesystem::remove(csv);
    REQUIRE_FALSE(result.diverged);

    DenseVector x = DenseVector::zeros(base.d);
    const auto rows = all_rows(base);
    for (std::uint64_t t = 0; t < cfg.rounds; ++t) {
        const DenseVector g = batch_gradient(cfg.model, x, base, rows);
        x = subtract(x, scaled(g, *cfg.eta_l));
    }
    REQUIRE(result.final_model == x);
}

TEST_CASE("full-precision training reaches the normal-equations optimum", "[trainer]") {
    RunConfig cfg;
    cfg.mode = SyncMode::full_precision;
    cfg.workers = 4;
    cfg.rounds = 300;
    cfg.eta_l = 0.5;
    cfg.eta_s = 1.0;
    cfg.global_seed = 12;
    cfg.model = {ModelConfig::Kind::least_squares, 0};
    cfg.dataset = {DatasetConfig::Source::synthetic, 512, 8, 0.05, std::nullopt, ""};
    const TrainResult result = train(cfg);
    REQUIRE_FALSE(result.diverged);

    const Dataset data = synth_dataset(12, 512, 8, 0.05, LabelKind::regression);
    const DenseVector opt = normal_equations(data);
    const double best = batch_loss(cfg.model, opt, data, all_rows(data));
    REQUIRE(result.final_loss <= 1.02 * best + 1e-12);
    REQUIRE(result.metrics.front().loss > result.final_loss);
}

TEST_CASE("marsit mode emits well-formed metrics and keeps consensus", "[trainer]") {
    RunConfig cfg;
    cfg.mode = SyncMode::marsit;
    cfg.workers = 4;
    cfg.rounds = 40;
    cfg.full_precision_period = 10;
    cfg.global_seed = 3;
    cfg.model = {ModelConfig::Kind::least_squares, 0};
    cfg.dataset = {DatasetConfig::Source::synthetic, 256, 16, 0.1, std::nullopt, ""};
    const TrainResult result = train(cfg);
    REQUIRE_FALSE(result.diverged);
    REQUIRE(result.metrics.size() == cfg.rounds);
    REQUIRE(result.resolved_eta_l == Catch::Approx(std::sqrt(4.0 / 40.0)));
    REQUIRE(result.resolved_eta_s == Catch::Approx(std::sqrt(1.0 / (40.0 * 16.0))));

    std::uint64_t cum = 0;
    for (const MetricsRecord& rec : result.metrics) {
        REQUIRE(rec.round_bits > 0);
        cum += rec.round_bits;
        REQUIRE(rec.cum_bits == cum);
        const bool dense = rec.round % 10 == 0;
        REQUIRE(rec.matching_rate.has_value() == !dense);
        if (rec.matching_rate) {
            REQUIRE(*rec.matching_rate >= 0.0);
            REQUIRE(*rec.matching_rate <= 1.0);
        }
        REQUIRE(std::isfinite(rec.loss));
    }

    // Dense rounds move 32x the payload of sign rounds per element.
    const auto dense_bits = result.metrics[0].round_bits;
    const auto sign_bits = result.metrics[1].round_bits;
    REQUIRE(dense_bits > 25 * sign_bits);
}

TEST_CASE("marsit without a period never takes the dense path", "[trainer]") {
    RunConfig cfg;
    cfg.mode = SyncMode::marsit;
    cfg.workers = 2;
    cfg.rounds = 8;
    cfg.global_seed = 5;
    cfg.model = {ModelConfig::Kind::least_squares, 0};
    cfg.dataset = {DatasetConfig::Source::synthetic, 64, 8, 0.1, std::nullopt, ""};
    const TrainResult result = train(cfg);
    REQUIRE_FALSE(result.diverged);
    for (const MetricsRecord& rec : result.metrics) {
        REQUIRE(rec.matching_rate.has_value()); // every round is a sign round
    }
}

TEST_CASE("baseline modes run and report sign-round metrics", "[trainer]") {
    for (SyncMode mode : {SyncMode::cascading, SyncMode::sum_ssdm}) {
        RunConfig cfg;
        cfg.mode = mode;
        cfg.workers = 4;
        cfg.rounds = 6;
        cfg.eta_l = 0.01;
        cfg.global_seed = 8;
        cfg.model = {ModelConfig::Kind::least_squares, 0};
        cfg.dataset = {DatasetConfig::Source::synthetic, 128, 8, 0.1, std::nullopt, ""};
        const TrainResult result = train(cfg);
        REQUIRE(result.metrics.size() == cfg.rounds);
        for (const MetricsRecord& rec : result.metrics) {
            REQUIRE(rec.round_bits > 0);
            REQUIRE(rec.matching_rate.has_value());
        }
    }
}

TEST_CASE("divergence is flagged and partial metrics are kept", "[trainer]") {
    RunConfig cfg;
    cfg.mode = SyncMode::full_precision;
    cfg.workers = 2;
    cfg.rounds = 200;
    cfg.eta_l = 50.0; // far beyond the stable step size
    cfg.eta_s = 1.0;
    cfg.global_seed = 6;
    cfg.model = {ModelConfig::Kind::least_squares, 0};
    cfg.dataset = {DatasetConfig::Source::synthetic, 64, 8, 0.0, std::nullopt, ""};
    const TrainResult result = train(cfg);
    REQUIRE(result.diverged);
    REQUIRE(result.metrics.size() < cfg.rounds);
}

TEST_CASE("torus and ring topologies agree on dense training", "[trainer]") {
    RunConfig cfg;
    cfg.mode = SyncMode::full_precision;
    cfg.workers = 4;
    cfg.rounds = 10;
    cfg.eta_l = 0.1;
    cfg.eta_s = 1.0;
    cfg.global_seed = 14;
    cfg.model = {ModelConfig::Kind::least_squares, 0};
    cfg.dataset = {DatasetConfig::Source::synthetic, 128, 8, 0.05, std::nullopt, ""};
    const TrainResult ring = train(cfg);

    cfg.topology = {Topology::torus, 2, 2};
    const TrainResult torus = train(cfg);
    REQUIRE_FALSE(ring.diverged);
    REQUIRE_FALSE(torus.diverged);
    // Same sums reduced in a different association order: equal to fp noise.
    for (std::size_t j = 0; j < ring.final_model.size(); ++j) {
        REQUIRE(ring.final_model[j] == Catch::Approx(torus.final_model[j]).margin(1e-12));
    }
}

TEST_CASE("run config validation rejects bad fields", "[trainer]") {
    RunConfig cfg;
    cfg.workers = 2;
    cfg.rounds = 4;
    cfg.model = {ModelConfig::Kind::least_squares, 0};
    cfg.dataset = {DatasetConfig::Source::synthetic, 32, 4, 0.0, std::nullopt, ""};

    RunConfig bad = cfg;
    bad.workers = 1;
    REQUIRE_THROWS_AS(train(bad), parameter_error);
    bad = cfg;
    bad.rounds = 0;
    REQUIRE_THROWS_AS(train(bad), parameter_error);
    bad = cfg;
    bad.full_precision_period = 0;
    REQUIRE_THROWS_AS(train(bad), parameter_error);
    bad = cfg;
    bad.momentum = 1.0;
    REQUIRE_THROWS_AS(train(bad), parameter_error);
    bad = cfg;
    bad.topology = {Topology::torus, 3, 3}; // 9 != 2
    REQUIRE_THROWS_AS(train(bad), parameter_error);
    bad = cfg;
    bad.batch_size = 0;
    REQUIRE_THROWS_AS(train(bad), parameter_error);
}
