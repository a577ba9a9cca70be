// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "marsit/errors.hpp"

namespace marsit {

enum class Phase { reduce, gather };
enum class Topology { ring, torus };

// What one worker does in one lock step: send one segment, receive one.
struct ScheduleEntry {
    std::uint32_t send_to = 0;
    std::uint32_t recv_from = 0;
    std::uint32_t segment = 0; // segment carried by the send
};

struct ScheduleStep {
    Phase phase = Phase::reduce;
    std::vector<ScheduleEntry> entries; // indexed by worker id
};

// A full synchronization round as a sequence of lock steps.  During a
// reduce step the receiver folds the incoming segment into its own copy;
// during a gather step it replaces its copy.  Every worker sends exactly
// one segment and receives exactly one segment in every step.
struct Schedule {
    Topology topology = Topology::ring;
    std::uint32_t workers = 0;
    std::uint32_t segments = 0;
    std::vector<ScheduleStep> steps;

    // Structural sanity check: per-step send/receive consistency.
    void validate() const {
        for (std::size_t k = 0; k < steps.size(); ++k) {
            const auto& entries = steps[k].entries;
            if (entries.size() != workers) {
                throw protocol_error("Schedule: step entry count != workers");
            }
            for (std::uint32_t w = 0; w < workers; ++w) {
                const auto& e = entries[w];
                if (e.send_to >= workers || e.recv_from >= workers || e.segment >= segments) {
                    throw protocol_error("Schedule: entry out of range");
                }
                if (entries[e.send_to].recv_from != w) {
                    throw protocol_error("Schedule: send/receive mismatch");
                }
            }
        }
    }
};

// Unidirectional ring over m workers and m segments: m-1 reduce-scatter
// steps followed by m-1 all-gather steps.  At reduce step k worker w sends
// segment (w - k) mod m to worker (w + 1) mod m; after the reduce phase
// worker w holds the complete aggregate of segment (w + 1) mod m.
inline Schedule build_ring_schedule(std::uint32_t m) {
    if (m < 2) {
        throw parameter_error("build_ring_schedule: need at least 2 workers");
    }
    Schedule sched;
    sched.topology = Topology::ring;
    sched.workers = m;
    sched.segments = m;

    auto mod = [m](std::int64_t x) { return static_cast<std::uint32_t>(((x % m) + m) % m); };

    for (std::uint32_t k = 0; k + 1 < m; ++k) {
        ScheduleStep step;
        step.phase = Phase::reduce;
        step.entries.resize(m);
        for (std::uint32_t w = 0; w < m; ++w) {
            step.entries[w] = {mod(w + 1), mod(static_cast<std::int64_t>(w) - 1),
                               mod(static_cast<std::int64_t>(w) - k)};
        }
        sched.steps.push_back(std::move(step));
    }
    for (std::uint32_t k = 0; k + 1 < m; ++k) {
        ScheduleStep step;
        step.phase = Phase::gather;
        step.entries.resize(m);
        for (std::uint32_t w = 0; w < m; ++w) {
            step.entries[w] = {mod(w + 1), mod(static_cast<std::int64_t>(w) - 1),
                               mod(static_cast<std::int64_t>(w) + 1 - k)};
        }
        sched.steps.push_back(std::move(step));
    }
    sched.validate();
    return sched;
}

// Two-dimensional torus over rows x cols workers (id = row * cols + col)
// with M = rows * cols segments, grouped into cols super-segments of rows
// consecutive segments each.  Three stages:
//
//   1. horizontal reduce-scatter of super-segments inside each row, each
//      super-segment transfer serialized into `rows` single-segment steps;
//      afterwards worker (r, c) holds the row aggregate of super-segment
//      (c + 1) mod cols,
//   2. vertical reduce-scatter plus all-gather of that super-segment's
//      segments inside each column, completing the global aggregate,
//   3. horizontal all-gather of the finished super-segments inside each row.
//
// Every worker sends exactly 2 * (rows * cols - 1) single segments in
// total, the same wire accounting as the one-dimensional ring.
inline Schedule build_torus_schedule(std::uint32_t rows, std::uint32_t cols) {
    if (rows < 2 || cols < 2) {
        throw parameter_error("build_torus_schedule: grid must be at least 2x2");
    }
    Schedule sched;
    sched.topology = Topology::torus;
    sched.workers = rows * cols;
    sched.segments = rows * cols;

    auto modc = [cols](std::int64_t x) {
        return static_cast<std::uint32_t>(((x % cols) + cols) % cols);
    };
    auto modr = [rows](std::int64_t x) {
        return static_cast<std::uint32_t>(((x % rows) + rows) % rows);
    };
    auto id = [cols](std::uint32_t r, std::uint32_t c) { return r * cols + c; };

    // Stage 1: horizontal reduce-scatter.
    for (std::uint32_t k = 0; k + 1 < cols; ++k) {
        for (std::uint32_t q = 0; q < rows; ++q) {
            ScheduleStep step;
            step.phase = Phase::reduce;
            step.entries.resize(sched.workers);
            for (std::uint32_t r = 0; r < rows; ++r) {
                for (std::uint32_t c = 0; c < cols; ++c) {
                    const std::uint32_t super = modc(static_cast<std::int64_t>(c) - k);
                    step.entries[id(r, c)] = {id(r, modc(c + 1)),
                                              id(r, modc(static_cast<std::int64_t>(c) - 1)),
                                              super * rows + q};
                }
            }
            sched.steps.push_back(std::move(step));
        }
    }

    // Stage 2: vertical reduce-scatter, then vertical all-gather, inside
    // each column on the super-segment that column's workers now own.
    for (std::uint32_t k = 0; k + 1 < rows; ++k) {
        ScheduleStep step;
        step.phase = Phase::reduce;
        step.entries.resize(sched.workers);
        for (std::uint32_t r = 0; r < rows; ++r) {
            for (std::uint32_t c = 0; c < cols; ++c) {
                const std::uint32_t owned_super = modc(c + 1);
                step.entries[id(r, c)] = {id(modr(r + 1), c),
                                          id(modr(static_cast<std::int64_t>(r) - 1), c),
                                          owned_super * rows + modr(static_cast<std::int64_t>(r) - k)};
            }
        }
        sched.steps.push_back(std::move(step));
    }
    for (std::uint32_t k = 0; k + 1 < rows; ++k) {
        ScheduleStep step;
        step.phase = Phase::gather;
        step.entries.resize(sched.workers);
        for (std::uint32_t r = 0; r < rows; ++r) {
            for (std::uint32_t c = 0; c < cols; ++c) {
                const std::uint32_t owned_super = modc(c + 1);
                step.entries[id(r, c)] = {id(modr(r + 1), c),
                                          id(modr(static_cast<std::int64_t>(r) - 1), c),
                                          owned_super * rows + modr(static_cast<std::int64_t>(r) + 1 - k)};
            }
        }
        sched.steps.push_back(std::move(step));
    }

    // Stage 3: horizontal all-gather of completed super-segments.
    for (std::uint32_t k = 0; k + 1 < cols; ++k) {
        for (std::uint32_t q = 0; q < rows; ++q) {
            ScheduleStep step;
            step.phase = Phase::gather;
            step.entries.resize(sched.workers);
            for (std::uint32_t r = 0; r < rows; ++r) {
                for (std::uint32_t c = 0; c < cols; ++c) {
                    const std::uint32_t super = modc(static_cast<std::int64_t>(c) + 1 - k);
                    step.entries[id(r, c)] = {id(r, modc(c + 1)),
                                              id(r, modc(static_cast<std::int64_t>(c) - 1)),
                                              super * rows + q};
                }
            }
            sched.steps.push_back(std::move(step));
        }
    }

    sched.validate();
    return sched;
}

} // namespace marsit
