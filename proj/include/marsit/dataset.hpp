// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "marsit/errors.hpp"
#include "marsit/rng.hpp"

namespace marsit {

enum class LabelKind { regression, binary };

// Row-major supervised dataset.  Shards are index lists so both contiguous
// (synthetic data) and round-robin (CSV ingest) assignment fit; sizes differ
// by at most one across workers either way.
struct Dataset {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> features; // n x d
    std::vector<double> labels;   // n

    enum class ShardPolicy { contiguous, round_robin };
    ShardPolicy shard_policy = ShardPolicy::contiguous;

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * d, d};
    }

    std::vector<std::vector<std::size_t>> shards(std::uint32_t workers) const {
        if (workers == 0) {
            throw parameter_error("Dataset::shards: need at least one worker");
        }
        if (n < workers) {
            throw parameter_error("Dataset::shards: fewer rows than workers");
        }
        std::vector<std::vector<std::size_t>> out(workers);
        if (shard_policy == ShardPolicy::round_robin) {
            for (std::size_t i = 0; i < n; ++i) out[i % workers].push_back(i);
        } else {
            const std::size_t base = n / workers;
            const std::size_t extra = n % workers;
            std::size_t next = 0;
            for (std::uint32_t w = 0; w < workers; ++w) {
                const std::size_t len = base + (w < extra ? 1 : 0);
                for (std::size_t i = 0; i < len; ++i) out[w].push_back(next++);
            }
        }
        return out;
    }
};

// Gaussian features with labels from a hidden ground-truth vector: either
// y = <a, w*> + noise_sigma * eps (regression) or a Bernoulli draw through
// the logistic link (binary).  Fully determined by the seed.
inline Dataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t d, double noise_sigma,
                             LabelKind kind) {
    if (n == 0 || d == 0) {
        throw parameter_error("synth_dataset: n and d must be >= 1");
    }
    if (noise_sigma < 0.0) {
        throw parameter_error("synth_dataset: noise_sigma must be >= 0");
    }
    RngStream rng(seed, RngPurpose::dataset, 0, 0, 0);
    std::vector<double> truth(d);
    for (double& w : truth) w = rng.next_gaussian();

    Dataset out;
    out.n = n;
    out.d = d;
    out.shard_policy = Dataset::ShardPolicy::contiguous;
    out.features.resize(n * d);
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double x = rng.next_gaussian();
            out.features[i * d + j] = x;
            mean += x * truth[j];
        }
        if (kind == LabelKind::regression) {
            out.labels[i] = mean + noise_sigma * rng.next_gaussian();
        } else {
            const double p = 1.0 / (1.0 + std::exp(-mean));
            out.labels[i] = rng.next_bernoulli(p) ? 1.0 : 0.0;
        }
    }
    return out;
}

namespace detail {

inline bool parse_field(const std::string& field, double& value) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    if (begin == end) return false;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc{} && ptr == end;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

} // namespace detail

// Numeric CSV with the label in the last column.  A header row is detected
// by the first line containing any non-numeric field.  Rows are sharded
// round-robin by worker id.
inline Dataset load_csv(const std::string& path) {
    std::ifstream file(path);
    if (!file) {
        throw parse_error("load_csv: cannot open " + path);
    }
    Dataset out;
    out.shard_policy = Dataset::ShardPolicy::round_robin;

    std::string line;
    std::size_t line_number = 0;
    bool header_allowed = true; // only the very first non-empty line may be one
    while (std::getline(file, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = detail::split_csv_line(line);

        std::vector<double> values(fields.size());
        bool numeric = true;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (!detail::parse_field(fields[j], values[j])) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (header_allowed) {
                header_allowed = false;
                continue;
            }
            throw parse_error("load_csv: line " + std::to_string(line_number) +
                              ": malformed row");
        }
        header_allowed = false;
        if (out.n == 0) {
            if (fields.size() < 2) {
                throw parse_error("load_csv: line " + std::to_string(line_number) +
                                  ": need at least one feature and a label");
            }
            out.d = fields.size() - 1;
        } else if (fields.size() != out.d + 1) {
            throw parse_error("load_csv: line " + std::to_string(line_number) +
                              ": malformed row");
        }
        for (std::size_t j = 0; j < out.d; ++j) out.features.push_back(values[j]);
        out.labels.push_back(values[out.d]);
        ++out.n;
    }
    if (out.n == 0) {
        throw parse_error("load_csv: " + path + " contains no data rows");
    }
    return out;
}

} // namespace marsit
