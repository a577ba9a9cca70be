// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "marsit/errors.hpp"

namespace marsit {

// In-memory lock-step message fabric.  Messages queued during a step are
// held back until the step is delivered, then handed to receivers in
// ascending sender order.  Nothing is lost, duplicated, or reordered, so a
// simulated round is a pure function of its inputs.
template <class Payload>
class Transport {
public:
    void send(std::uint32_t from, std::uint32_t to, std::uint32_t segment, Payload payload) {
        pending_.push_back(Envelope{from, to, segment, std::move(payload)});
    }

    // Deliver every queued message, sorted by sender, through
    // receive(from, to, segment, payload).
    template <class Receive>
    void deliver_step(Receive&& receive) {
        std::stable_sort(pending_.begin(), pending_.end(),
                         [](const Envelope& a, const Envelope& b) { return a.from < b.from; });
        for (auto& env : pending_) {
            receive(env.from, env.to, env.segment, std::move(env.payload));
        }
        pending_.clear();
    }

    bool idle() const { return pending_.empty(); }

private:
    struct Envelope {
        std::uint32_t from;
        std::uint32_t to;
        std::uint32_t segment;
        Payload payload;
    };
    std::vector<Envelope> pending_;
};

} // namespace marsit
