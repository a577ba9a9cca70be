// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: `train` runs one configured training run and writes
// metrics.csv + model.ckpt + manifest.json, `verify` runs the property
// suite into verify_report.csv, `bench` grids a sweep config into
// bench.csv.
//
// Exit codes: 0 success, 1 failed verify property, 2 configuration error,
// 3 dataset error, 4 diverged run (outputs still written).
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "marsit/analysis.hpp"
#include "marsit/checkpoint.hpp"
#include "marsit/config.hpp"
#include "marsit/errors.hpp"
#include "marsit/format.hpp"
#include "marsit/trainer.hpp"
#include "marsit/verify.hpp"

namespace marsit {

namespace detail {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDatasetError = 3;
inline constexpr int kExitDiverged = 4;

inline void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& metrics) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw parse_error("train: cannot write " + path);
    }
    out << "round,loss,grad_norm,round_bits,cum_bits,matching_rate,wall_ms\n";
    for (const MetricsRecord& rec : metrics) {
        out << rec.round << ',' << format_double(rec.loss) << ',' << format_double(rec.grad_norm)
            << ',' << rec.round_bits << ',' << rec.cum_bits << ','
            << (rec.matching_rate ? format_double(*rec.matching_rate) : std::string{}) << ','
            << format_double(rec.wall_ms) << '\n';
    }
}

inline std::string period_name(const std::optional<std::uint64_t>& period) {
    return period ? std::to_string(*period) : std::string{"never"};
}

} // namespace detail

inline int cmd_train(const std::string& config_path, const std::string& out_dir,
                     std::optional<std::uint64_t> seed_override) {
    RunConfig cfg;
    try {
        cfg = load_train_config(config_path);
        if (seed_override) {
            cfg.global_seed = *seed_override;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return detail::kExitConfigError;
    }

    TrainResult result;
    try {
        result = train(cfg);
    } catch (const parse_error& e) { // dataset file problems surface here
        std::cerr << "error: " << e.what() << '\n';
        return detail::kExitDatasetError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return detail::kExitConfigError;
    }

    try {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);
        detail::write_metrics_csv((dir / "metrics.csv").string(), result.metrics);
        write_checkpoint((dir / "model.ckpt").string(), result.final_model);
        std::ofstream manifest(dir / "manifest.json", std::ios::binary);
        if (!manifest) {
            throw parse_error("train: cannot write manifest.json");
        }
        manifest << train_manifest(cfg, result.resolved_eta_l, result.resolved_eta_s).dump(2)
                 << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return detail::kExitConfigError;
    }

    if (result.diverged) {
        std::cerr << "run diverged after " << result.metrics.size() << " rounds\n";
        return detail::kExitDiverged;
    }
    std::cout << "completed " << result.metrics.size() << " rounds, final loss "
              << format_double(result.final_loss) << '\n';
    return detail::kExitOk;
}

inline int cmd_verify(const std::string& out_dir, const VerifyOptions& opts) {
    std::vector<PropertyResult> results;
    try {
        results = run_verify_suite(opts);
        std::filesystem::create_directories(out_dir);
        write_verify_report((std::filesystem::path(out_dir) / "verify_report.csv").string(),
                            results);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return detail::kExitConfigError;
    }
    bool all_pass = true;
    for (const PropertyResult& r : results) {
        std::cout << (r.pass ? "pass " : "FAIL ") << r.name << " (observed "
                  << format_double(r.observed) << ")\n";
        all_pass = all_pass && r.pass;
    }
    return all_pass ? detail::kExitOk : detail::kExitVerifyFailed;
}

inline int cmd_bench(const std::string& config_path, const std::string& out_dir,
                     std::optional<std::uint64_t> seed_override) {
    BenchSweep sweep;
    try {
        sweep = load_bench_config(config_path);
        if (seed_override) {
            sweep.base.global_seed = *seed_override;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return detail::kExitConfigError;
    }

    struct BenchRow {
        RunConfig cfg;
        std::uint64_t cum_bits = 0;
        double final_loss = 0.0;
        std::optional<double> avg_bits;
        bool diverged = false;
    };
    std::vector<BenchRow> rows;
    for (const RunConfig& cfg : sweep.expand()) {
        TrainResult result;
        try {
            result = train(cfg);
        } catch (const parse_error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return detail::kExitDatasetError;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return detail::kExitConfigError;
        }
        BenchRow row;
        row.cfg = cfg;
        row.cum_bits = result.metrics.empty() ? 0 : result.metrics.back().cum_bits;
        row.final_loss = result.final_loss;
        row.diverged = result.diverged;
        if (cfg.mode == SyncMode::marsit) {
            row.avg_bits = avg_bits_per_element(cfg.full_precision_period);
        } else if (cfg.mode == SyncMode::full_precision) {
            row.avg_bits = 32.0;
        }
        rows.push_back(std::move(row));
    }

    try {
        std::filesystem::create_directories(out_dir);
        std::ofstream out(std::filesystem::path(out_dir) / "bench.csv", std::ios::binary);
        if (!out) {
            throw parse_error("bench: cannot write bench.csv");
        }
        out << "workers,dim,mode,full_precision_period,rounds,cum_bits,final_loss,"
               "avg_bits_per_element,diverged\n";
        for (const BenchRow& row : rows) {
            out << row.cfg.workers << ',' << row.cfg.dataset.d << ','
                << detail::mode_name(row.cfg.mode) << ','
                << detail::period_name(row.cfg.full_precision_period) << ',' << row.cfg.rounds
                << ',' << row.cum_bits << ',' << format_double(row.final_loss) << ','
                << (row.avg_bits ? format_double(*row.avg_bits) : std::string{}) << ','
                << (row.diverged ? 1 : 0) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return detail::kExitConfigError;
    }

    bool any_diverged = false;
    for (const BenchRow& row : rows) any_diverged = any_diverged || row.diverged;
    if (any_diverged) {
        std::cerr << "one or more sweep runs diverged (see bench.csv)\n";
        return detail::kExitDiverged;
    }
    std::cout << "wrote " << rows.size() << " bench rows\n";
    return detail::kExitOk;
}

inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Marsit: sign-bit multi-hop all-reduce training simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool invert_merge = false;

    CLI::App* train_cmd = app.add_subcommand("train", "Run one synchronized training run");
    train_cmd->add_option("--config", config_path, "JSON run configuration")->required();
    train_cmd->add_option("--out", out_dir, "output directory")->required();
    train_cmd->add_option("--seed", seed, "override the config's global_seed");

    CLI::App* verify_cmd =
        app.add_subcommand("verify", "Run the property suite and write verify_report.csv");
    verify_cmd->add_option("--out", out_dir, "output directory")->required();
    verify_cmd->add_option("--seed", seed, "seed for the Monte-Carlo properties");
    verify_cmd->add_flag("--invert-merge-hook", invert_merge,
                         "fault injection: invert the merge coin (testing only)")
        ->group(""); // hidden from --help

    CLI::App* bench_cmd = app.add_subcommand("bench", "Run a sweep config into bench.csv");
    bench_cmd->add_option("--config", config_path, "JSON sweep configuration")->required();
    bench_cmd->add_option("--out", out_dir, "output directory")->required();
    bench_cmd->add_option("--seed", seed, "override the config's global_seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : detail::kExitConfigError;
    }

    if (train_cmd->parsed()) {
        return cmd_train(config_path, out_dir, seed);
    }
    if (verify_cmd->parsed()) {
        VerifyOptions opts;
        opts.invert_merge_coin = invert_merge;
        if (seed) {
            opts.seed = *seed;
        }
        return cmd_verify(out_dir, opts);
    }
    return cmd_bench(config_path, out_dir, seed);
}

} // namespace marsit
