// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "marsit/schedule.hpp"

namespace marsit {

// Payload bits put on the wire during one collective, attributed to the
// sending worker and broken down by phase.  Only payload is counted; framing
// and addressing are out of scope.
struct BitsAccount {
    std::vector<std::uint64_t> per_worker; // bits sent by each worker
    std::uint64_t reduce_bits = 0;
    std::uint64_t gather_bits = 0;
    std::uint64_t total = 0;

    explicit BitsAccount(std::uint32_t workers = 0) : per_worker(workers, 0) {}

    void add(Phase phase, std::uint32_t sender, std::uint64_t bits) {
        per_worker[sender] += bits;
        (phase == Phase::reduce ? reduce_bits : gather_bits) += bits;
        total += bits;
    }

    void merge(const BitsAccount& other) {
        if (per_worker.size() < other.per_worker.size()) {
            per_worker.resize(other.per_worker.size(), 0);
        }
        for (std::size_t w = 0; w < other.per_worker.size(); ++w) {
            per_worker[w] += other.per_worker[w];
        }
        reduce_bits += other.reduce_bits;
        gather_bits += other.gather_bits;
        total += other.total;
    }
};

} // namespace marsit
