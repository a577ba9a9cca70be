// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON run configuration: strict schema (unknown keys rejected), documented
// defaults filled in, and manifest emission such that a written manifest
// loads back into the exact same run.
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "marsit/errors.hpp"
#include "marsit/trainer.hpp"

namespace marsit {

inline constexpr int kConfigSchemaVersion = 1;

namespace detail {

using njson = nlohmann::json;

// Tracks which keys of one JSON object were consumed so leftovers can be
// rejected by name.
class KeyChecker {
public:
    KeyChecker(const njson& obj, std::string scope) : obj_(obj), scope_(std::move(scope)) {
        if (!obj_.is_object()) {
            throw parse_error("config: " + scope_ + " must be a JSON object");
        }
    }

    const njson* find(const std::string& key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) {
            return nullptr;
        }
        return &*it;
    }

    void finish() const {
        for (const auto& item : obj_.items()) {
            if (!seen_.contains(item.key())) {
                throw parse_error("config: unknown key \"" + scope_ + item.key() + "\"");
            }
        }
    }

    std::string path(const std::string& key) const { return scope_ + key; }

private:
    const njson& obj_;
    std::string scope_;
    std::set<std::string> seen_;
};

template <typename T>
T get_number(const njson& v, const std::string& path) {
    if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) {
            throw parse_error("config: \"" + path + "\" must be a number");
        }
    } else {
        if (!v.is_number_unsigned()) {
            throw parse_error("config: \"" + path + "\" must be a non-negative integer");
        }
    }
    return v.get<T>();
}

inline std::string get_string(const njson& v, const std::string& path) {
    if (!v.is_string()) {
        throw parse_error("config: \"" + path + "\" must be a string");
    }
    return v.get<std::string>();
}

inline SyncMode parse_mode(const std::string& s, const std::string& path) {
    if (s == "marsit") return SyncMode::marsit;
    if (s == "full_precision") return SyncMode::full_precision;
    if (s == "cascading") return SyncMode::cascading;
    if (s == "sum_ssdm") return SyncMode::sum_ssdm;
    throw parse_error("config: \"" + path + "\" has unknown mode \"" + s + "\"");
}

inline std::string mode_name(SyncMode mode) {
    switch (mode) {
        case SyncMode::marsit: return "marsit";
        case SyncMode::full_precision: return "full_precision";
        case SyncMode::cascading: return "cascading";
        case SyncMode::sum_ssdm: return "sum_ssdm";
    }
    throw parameter_error("mode_name: unknown mode");
}

inline ModelConfig::Kind parse_model_kind(const std::string& s, const std::string& path) {
    if (s == "least_squares") return ModelConfig::Kind::least_squares;
    if (s == "logistic") return ModelConfig::Kind::logistic;
    if (s == "mlp") return ModelConfig::Kind::mlp;
    throw parse_error("config: \"" + path + "\" has unknown model kind \"" + s + "\"");
}

inline std::string model_kind_name(ModelConfig::Kind kind) {
    switch (kind) {
        case ModelConfig::Kind::least_squares: return "least_squares";
        case ModelConfig::Kind::logistic: return "logistic";
        case ModelConfig::Kind::mlp: return "mlp";
    }
    throw parameter_error("model_kind_name: unknown kind");
}

// A synchronization period is a positive integer, or null / "never" for a
// run that never takes the dense path.
inline std::optional<std::uint64_t> parse_period(const njson& v, const std::string& path) {
    if (v.is_string()) {
        if (v.get<std::string>() == "never") {
            return std::nullopt;
        }
        throw parse_error("config: \"" + path + "\" must be a positive integer or \"never\"");
    }
    const auto period = get_number<std::uint64_t>(v, path);
    if (period == 0) {
        throw parse_error("config: \"" + path + "\" must be >= 1 (or \"never\")");
    }
    return period;
}

inline void check_schema_version(KeyChecker& root) {
    const njson* v = root.find("schema_version");
    if (v == nullptr) {
        throw parse_error("config: missing \"schema_version\"");
    }
    const auto version = get_number<int>(*v, "schema_version");
    if (version != kConfigSchemaVersion) {
        throw parse_error("config: unsupported schema_version " + std::to_string(version));
    }
}

inline RunConfig parse_run_config(const njson& root_json, KeyChecker& root) {
    RunConfig cfg;
    check_schema_version(root);
    if (const njson* v = root.find("mode")) {
        cfg.mode = parse_mode(get_string(*v, "mode"), "mode");
    }
    if (const njson* v = root.find("workers")) {
        cfg.workers = get_number<std::uint32_t>(*v, "workers");
    } else {
        throw parse_error("config: missing \"workers\"");
    }
    if (const njson* v = root.find("rounds")) {
        cfg.rounds = get_number<std::uint64_t>(*v, "rounds");
    } else {
        throw parse_error("config: missing \"rounds\"");
    }
    if (const njson* v = root.find("full_precision_period")) {
        cfg.full_precision_period = parse_period(*v, "full_precision_period");
    }
    if (const njson* v = root.find("eta_l")) {
        cfg.eta_l = get_number<double>(*v, "eta_l");
    }
    if (const njson* v = root.find("eta_s")) {
        cfg.eta_s = get_number<double>(*v, "eta_s");
    }
    if (const njson* v = root.find("momentum")) {
        cfg.momentum = get_number<double>(*v, "momentum");
    }
    if (const njson* v = root.find("lr_decay_at_full_sync")) {
        if (!v->is_boolean()) {
            throw parse_error("config: \"lr_decay_at_full_sync\" must be a boolean");
        }
        cfg.lr_decay_at_full_sync = v->get<bool>();
    }
    if (const njson* v = root.find("local_steps")) {
        cfg.local_steps = get_number<std::uint32_t>(*v, "local_steps");
    }
    if (const njson* v = root.find("batch_size")) {
        cfg.batch_size = get_number<std::size_t>(*v, "batch_size");
    }
    if (const njson* v = root.find("global_seed")) {
        cfg.global_seed = get_number<std::uint64_t>(*v, "global_seed");
    }

    if (const njson* v = root.find("topology")) {
        KeyChecker topo(*v, "topology.");
        if (const njson* kind = topo.find("kind")) {
            const std::string s = get_string(*kind, topo.path("kind"));
            if (s == "ring") {
                cfg.topology.kind = Topology::ring;
            } else if (s == "torus") {
                cfg.topology.kind = Topology::torus;
            } else {
                throw parse_error("config: \"topology.kind\" has unknown value \"" + s + "\"");
            }
        }
        if (const njson* rows = topo.find("rows")) {
            cfg.topology.rows = get_number<std::uint32_t>(*rows, topo.path("rows"));
        }
        if (const njson* cols = topo.find("cols")) {
            cfg.topology.cols = get_number<std::uint32_t>(*cols, topo.path("cols"));
        }
        topo.finish();
    }

    if (const njson* v = root.find("model")) {
        KeyChecker model(*v, "model.");
        if (const njson* kind = model.find("kind")) {
            cfg.model.kind = parse_model_kind(get_string(*kind, model.path("kind")),
                                              model.path("kind"));
        } else {
            throw parse_error("config: missing \"model.kind\"");
        }
        if (const njson* hidden = model.find("hidden")) {
            cfg.model.hidden = get_number<std::uint32_t>(*hidden, model.path("hidden"));
        }
        model.finish();
    } else {
        throw parse_error("config: missing \"model\"");
    }

    if (const njson* v = root.find("dataset")) {
        KeyChecker ds(*v, "dataset.");
        if (const njson* source = ds.find("source")) {
            const std::string s = get_string(*source, ds.path("source"));
            if (s == "synthetic") {
                cfg.dataset.source = DatasetConfig::Source::synthetic;
            } else if (s == "csv") {
                cfg.dataset.source = DatasetConfig::Source::csv;
            } else {
                throw parse_error("config: \"dataset.source\" has unknown value \"" + s + "\"");
            }
        }
        if (const njson* n = ds.find("n")) cfg.dataset.n = get_number<std::size_t>(*n, ds.path("n"));
        if (const njson* d = ds.find("d")) cfg.dataset.d = get_number<std::size_t>(*d, ds.path("d"));
        if (const njson* s = ds.find("noise_sigma")) {
            cfg.dataset.noise_sigma = get_number<double>(*s, ds.path("noise_sigma"));
        }
        if (const njson* s = ds.find("seed")) {
            cfg.dataset.seed = get_number<std::uint64_t>(*s, ds.path("seed"));
        }
        if (const njson* p = ds.find("csv_path")) {
            cfg.dataset.csv_path = get_string(*p, ds.path("csv_path"));
        }
        ds.finish();
    } else {
        throw parse_error("config: missing \"dataset\"");
    }

    (void)root_json;
    return cfg;
}

// Config-level dataset sanity, so a bad dataset block fails in the config
// stage (exit 2) rather than deep inside the run.
inline void validate_dataset_config(const RunConfig& cfg) {
    if (cfg.dataset.source == DatasetConfig::Source::synthetic) {
        if (cfg.dataset.n == 0 || cfg.dataset.d == 0) {
            throw parse_error("config: synthetic dataset needs n >= 1 and d >= 1");
        }
        if (cfg.dataset.noise_sigma < 0.0) {
            throw parse_error("config: \"dataset.noise_sigma\" must be >= 0");
        }
    } else if (cfg.dataset.csv_path.empty()) {
        throw parse_error("config: csv dataset needs a \"dataset.csv_path\"");
    }
}

} // namespace detail

// Parse one training run configuration from a JSON document.
inline RunConfig parse_train_config(const nlohmann::json& doc) {
    detail::KeyChecker root(doc, "");
    RunConfig cfg = detail::parse_run_config(doc, root);
    root.finish();
    try {
        cfg.validate();
    } catch (const parameter_error& e) {
        throw parse_error(std::string("config: ") + e.what());
    }
    detail::validate_dataset_config(cfg);
    return cfg;
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw parse_error("config: cannot open " + path);
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("config: ") + e.what());
    }
}

inline RunConfig load_train_config(const std::string& path) {
    return parse_train_config(read_json_file(path));
}

// Serialize the fully resolved config.  Every optional is written
// explicitly (null where unset, resolved stepsizes where defaulted), so the
// manifest is itself a valid config that reproduces the run.
inline nlohmann::json train_manifest(const RunConfig& cfg, double resolved_eta_l,
                                     double resolved_eta_s) {
    nlohmann::json doc;
    doc["schema_version"] = kConfigSchemaVersion;
    doc["mode"] = detail::mode_name(cfg.mode);
    doc["workers"] = cfg.workers;
    doc["rounds"] = cfg.rounds;
    if (cfg.full_precision_period) {
        doc["full_precision_period"] = *cfg.full_precision_period;
    } else {
        doc["full_precision_period"] = nullptr;
    }
    doc["eta_l"] = resolved_eta_l;
    doc["eta_s"] = resolved_eta_s;
    doc["momentum"] = cfg.momentum;
    doc["lr_decay_at_full_sync"] = cfg.lr_decay_at_full_sync;
    doc["local_steps"] = cfg.local_steps;
    if (cfg.batch_size) {
        doc["batch_size"] = *cfg.batch_size;
    } else {
        doc["batch_size"] = nullptr;
    }
    doc["global_seed"] = cfg.global_seed;
    doc["topology"] = {
        {"kind", cfg.topology.kind == Topology::ring ? "ring" : "torus"},
        {"rows", cfg.topology.rows},
        {"cols", cfg.topology.cols},
    };
    doc["model"] = {
        {"kind", detail::model_kind_name(cfg.model.kind)},
        {"hidden", cfg.model.hidden},
    };
    nlohmann::json ds;
    ds["source"] = cfg.dataset.source == DatasetConfig::Source::synthetic ? "synthetic" : "csv";
    ds["n"] = cfg.dataset.n;
    ds["d"] = cfg.dataset.d;
    ds["noise_sigma"] = cfg.dataset.noise_sigma;
    if (cfg.dataset.seed) {
        ds["seed"] = *cfg.dataset.seed;
    } else {
        ds["seed"] = nullptr;
    }
    ds["csv_path"] = cfg.dataset.csv_path;
    doc["dataset"] = ds;
    return doc;
}

// ---------------------------------------------------------------------------
// Benchmark sweeps: a base run configuration plus lists of field values to
// grid over.
// ---------------------------------------------------------------------------

struct BenchSweep {
    RunConfig base;
    std::vector<std::uint32_t> workers;
    std::vector<std::size_t> dims;
    std::vector<SyncMode> modes;
    std::vector<std::optional<std::uint64_t>> periods;

    // Materialize the cartesian product, base fields overridden per axis.
    std::vector<RunConfig> expand() const {
        std::vector<RunConfig> out;
        for (const std::uint32_t m : workers) {
            for (const std::size_t d : dims) {
                for (const SyncMode mode : modes) {
                    for (const auto& period : periods) {
                        RunConfig cfg = base;
                        cfg.workers = m;
                        cfg.dataset.d = d;
                        cfg.mode = mode;
                        cfg.full_precision_period = period;
                        out.push_back(cfg);
                    }
                }
            }
        }
        return out;
    }
};

// Parse a bench configuration: the train schema plus a "sweep" object whose
// axes are lists over workers / dim / mode / full_precision_period.  Axes
// left out fall back to the base config's single value; listing an axis
// with an empty array is an error, as is leaving out the sweep object
// entirely.
inline BenchSweep parse_bench_config(const nlohmann::json& doc) {
    detail::KeyChecker root(doc, "");
    BenchSweep sweep;
    sweep.base = detail::parse_run_config(doc, root);

    const detail::njson* sw = root.find("sweep");
    if (sw == nullptr) {
        throw parse_error("config: bench needs a non-empty \"sweep\" object");
    }
    detail::KeyChecker keys(*sw, "sweep.");
    bool any_axis = false;
    const auto require_list = [&](const detail::njson& v, const std::string& path) {
        if (!v.is_array() || v.empty()) {
            throw parse_error("config: \"" + path + "\" must be a non-empty list");
        }
        any_axis = true;
    };
    if (const detail::njson* v = keys.find("workers")) {
        require_list(*v, keys.path("workers"));
        for (const auto& e : *v) {
            sweep.workers.push_back(detail::get_number<std::uint32_t>(e, keys.path("workers")));
        }
    } else {
        sweep.workers.push_back(sweep.base.workers);
    }
    if (const detail::njson* v = keys.find("dim")) {
        require_list(*v, keys.path("dim"));
        for (const auto& e : *v) {
            sweep.dims.push_back(detail::get_number<std::size_t>(e, keys.path("dim")));
        }
    } else {
        sweep.dims.push_back(sweep.base.dataset.d);
    }
    if (const detail::njson* v = keys.find("mode")) {
        require_list(*v, keys.path("mode"));
        for (const auto& e : *v) {
            sweep.modes.push_back(detail::parse_mode(detail::get_string(e, keys.path("mode")),
                                                     keys.path("mode")));
        }
    } else {
        sweep.modes.push_back(sweep.base.mode);
    }
    if (const detail::njson* v = keys.find("full_precision_period")) {
        require_list(*v, keys.path("full_precision_period"));
        for (const auto& e : *v) {
            if (e.is_null()) {
                sweep.periods.push_back(std::nullopt);
            } else {
                sweep.periods.push_back(
                    detail::parse_period(e, keys.path("full_precision_period")));
            }
        }
    } else {
        sweep.periods.push_back(sweep.base.full_precision_period);
    }
    keys.finish();
    root.finish();
    if (!any_axis) {
        throw parse_error("config: bench \"sweep\" lists no axes");
    }

    for (RunConfig& cfg : sweep.expand()) {
        try {
            cfg.validate();
        } catch (const parameter_error& e) {
            throw parse_error(std::string("config: ") + e.what());
        }
        detail::validate_dataset_config(cfg);
    }
    return sweep;
}

inline BenchSweep load_bench_config(const std::string& path) {
    return parse_bench_config(read_json_file(path));
}

} // namespace marsit
