// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "marsit/bits_account.hpp"
#include "marsit/dense_vector.hpp"
#include "marsit/elias.hpp"
#include "marsit/errors.hpp"
#include "marsit/merge.hpp"
#include "marsit/rng.hpp"
#include "marsit/schedule.hpp"
#include "marsit/segmentation.hpp"
#include "marsit/sign_vector.hpp"
#include "marsit/ssdm.hpp"
#include "marsit/transport.hpp"

namespace marsit {

// Seed material shared by every randomized collective in one round.
struct RoundContext {
    std::uint64_t global_seed = 0;
    std::uint64_t round = 0;
};

// All workers must leave a collective with bit-identical results; anything
// else is a broken wire protocol, not a numerical issue.
template <class T>
const T& consensus(const std::vector<T>& per_worker) {
    if (per_worker.empty()) {
        throw parameter_error("consensus: empty result set");
    }
    for (std::size_t w = 1; w < per_worker.size(); ++w) {
        if (!(per_worker[w] == per_worker[0])) {
            throw protocol_error("consensus: workers disagree");
        }
    }
    return per_worker[0];
}

namespace detail {

// Drive one schedule: at every step each worker emits the payload for its
// entry's segment, the transport delivers in sender order, and the receiver
// folds (reduce) or replaces (gather).  Payload bits are charged to the
// sender.
template <class Payload, class MakePayload, class PayloadBits, class OnReduce, class OnGather>
BitsAccount run_schedule(const Schedule& sched, MakePayload&& make_payload,
                         PayloadBits&& payload_bits, OnReduce&& on_reduce, OnGather&& on_gather) {
    BitsAccount bits(sched.workers);
    Transport<Payload> transport;
    for (const ScheduleStep& step : sched.steps) {
        for (std::uint32_t w = 0; w < sched.workers; ++w) {
            const ScheduleEntry& e = step.entries[w];
            Payload payload = make_payload(w, e.segment);
            bits.add(step.phase, w, payload_bits(payload));
            transport.send(w, e.send_to, e.segment, std::move(payload));
        }
        transport.deliver_step([&](std::uint32_t /*from*/, std::uint32_t to, std::uint32_t segment,
                                   Payload&& payload) {
            if (step.phase == Phase::reduce) {
                on_reduce(to, segment, std::move(payload));
            } else {
                on_gather(to, segment, std::move(payload));
            }
        });
    }
    return bits;
}

inline void check_inputs(const std::vector<DenseVector>& vectors, const Schedule& sched) {
    if (vectors.size() != sched.workers) {
        throw parameter_error("allreduce: vector count != schedule workers");
    }
    for (const DenseVector& v : vectors) {
        if (v.size() != vectors[0].size()) {
            throw parameter_error("allreduce: inconsistent dimensions");
        }
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Full-precision mean.  Payload is the dense segment at 32 bits per
// coordinate (the wire format models single-precision floats).
// ---------------------------------------------------------------------------

struct DenseAllreduceResult {
    std::vector<DenseVector> per_worker; // arithmetic mean, one copy per worker
    BitsAccount bits;
};

inline DenseAllreduceResult allreduce_dense(const std::vector<DenseVector>& vectors,
                                            const Schedule& sched) {
    detail::check_inputs(vectors, sched);
    auto [seg, first_parts] = segment(vectors[0], sched.segments);

    std::vector<std::vector<DenseVector>> state;
    state.reserve(sched.workers);
    state.push_back(std::move(first_parts));
    for (std::uint32_t w = 1; w < sched.workers; ++w) {
        state.push_back(segment(vectors[w], sched.segments).second);
    }

    BitsAccount bits = detail::run_schedule<DenseVector>(
        sched,
        [&](std::uint32_t w, std::uint32_t s) { return state[w][s]; },
        [&](const DenseVector& p) { return static_cast<std::uint64_t>(p.size()) * 32u; },
        [&](std::uint32_t to, std::uint32_t s, DenseVector&& p) {
            state[to][s] = add(state[to][s], p);
        },
        [&](std::uint32_t to, std::uint32_t s, DenseVector&& p) { state[to][s] = std::move(p); });

    DenseAllreduceResult result{{}, std::move(bits)};
    const double inv_m = 1.0 / static_cast<double>(sched.workers);
    for (std::uint32_t w = 0; w < sched.workers; ++w) {
        std::vector<DenseVector> parts;
        parts.reserve(sched.segments);
        for (std::uint32_t s = 0; s < sched.segments; ++s) {
            parts.push_back(scaled(state[w][s], inv_m));
        }
        result.per_worker.push_back(reassemble(seg, parts));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Sign-bit aggregation with the probabilistic merge operator.  Payload is
// one bit per coordinate; contribution counts ride along for free because
// the lock-step position determines them (they are carried explicitly here
// for clarity, not charged to the wire).
// ---------------------------------------------------------------------------

struct SignAllreduceResult {
    std::vector<std::vector<AggregateSign>> per_worker; // [workers][segments]
    BitsAccount bits;
};

inline bool operator==(const AggregateSign& a, const AggregateSign& b) {
    return a.count == b.count && a.bits == b.bits;
}

inline SignAllreduceResult allreduce_sign(const std::vector<std::vector<PackedSignVector>>& signs,
                                          const Schedule& sched, const RoundContext& ctx) {
    if (signs.size() != sched.workers) {
        throw parameter_error("allreduce_sign: worker count mismatch");
    }
    std::vector<std::vector<AggregateSign>> state(sched.workers);
    for (std::uint32_t w = 0; w < sched.workers; ++w) {
        if (signs[w].size() != sched.segments) {
            throw parameter_error("allreduce_sign: segment count mismatch");
        }
        state[w].reserve(sched.segments);
        for (std::uint32_t s = 0; s < sched.segments; ++s) {
            if (signs[w][s].size() != signs[0][0].size()) {
                throw protocol_error("allreduce_sign: segment length mismatch");
            }
            state[w].push_back(AggregateSign{signs[w][s], 1});
        }
    }

    // One merge-coin stream per (receiver, segment); a worker that merges
    // the same segment in two different stages keeps drawing from the same
    // stream, so the draw sequence is independent of scheduling details.
    std::vector<std::vector<std::optional<RngStream>>> streams(
        sched.workers, std::vector<std::optional<RngStream>>(sched.segments));
    auto stream_for = [&](std::uint32_t w, std::uint32_t s) -> RngStream& {
        if (!streams[w][s]) {
            streams[w][s].emplace(ctx.global_seed, RngPurpose::merge, w, ctx.round, s);
        }
        return *streams[w][s];
    };

    BitsAccount bits = detail::run_schedule<AggregateSign>(
        sched,
        [&](std::uint32_t w, std::uint32_t s) { return state[w][s]; },
        [&](const AggregateSign& p) { return static_cast<std::uint64_t>(p.bits.size()); },
        [&](std::uint32_t to, std::uint32_t s, AggregateSign&& p) {
            state[to][s] = merge_signs(p, state[to][s], stream_for(to, s));
        },
        [&](std::uint32_t to, std::uint32_t s, AggregateSign&& p) { state[to][s] = std::move(p); });

    return SignAllreduceResult{std::move(state), std::move(bits)};
}

// ---------------------------------------------------------------------------
// Cascading compression baseline: along each segment's reduce chain every
// hop decompresses the incoming packet, adds its own dense segment and
// recompresses, for a total of M nested compressions per segment.  Payload
// per hop is one sign bit per coordinate plus a 32-bit norm.
// ---------------------------------------------------------------------------

struct CascadingAllreduceResult {
    std::vector<DenseVector> per_worker; // chain estimate of the mean
    BitsAccount bits;
};

inline bool operator==(const SsdmPacket& a, const SsdmPacket& b) {
    return a.norm == b.norm && a.bits == b.bits;
}

inline CascadingAllreduceResult cascading_allreduce(const std::vector<DenseVector>& vectors,
                                                    const Schedule& sched,
                                                    const RoundContext& ctx) {
    if (sched.topology != Topology::ring) {
        throw unsupported_error("cascading_allreduce: only ring schedules are supported");
    }
    detail::check_inputs(vectors, sched);
    auto seg = segment(vectors[0], sched.segments).first;

    std::vector<std::vector<DenseVector>> raw;
    raw.reserve(sched.workers);
    for (std::uint32_t w = 0; w < sched.workers; ++w) {
        raw.push_back(segment(vectors[w], sched.segments).second);
    }
    std::vector<std::vector<std::optional<SsdmPacket>>> packet(
        sched.workers, std::vector<std::optional<SsdmPacket>>(sched.segments));

    BitsAccount bits = detail::run_schedule<SsdmPacket>(
        sched,
        [&](std::uint32_t w, std::uint32_t s) {
            // Compress lazily at first send; a packet received during the
            // gather phase is forwarded as is.
            if (!packet[w][s]) {
                RngStream rng(ctx.global_seed, RngPurpose::ssdm, w, ctx.round, s);
                packet[w][s] = ssdm_compress(raw[w][s], rng);
            }
            return *packet[w][s];
        },
        [&](const SsdmPacket& p) { return static_cast<std::uint64_t>(p.bits.size()) + 32u; },
        [&](std::uint32_t to, std::uint32_t s, SsdmPacket&& p) {
            raw[to][s] = add(ssdm_decompress(p), raw[to][s]);
        },
        [&](std::uint32_t to, std::uint32_t s, SsdmPacket&& p) { packet[to][s] = std::move(p); });

    CascadingAllreduceResult result{{}, std::move(bits)};
    const double inv_m = 1.0 / static_cast<double>(sched.workers);
    for (std::uint32_t w = 0; w < sched.workers; ++w) {
        std::vector<DenseVector> parts;
        parts.reserve(sched.segments);
        for (std::uint32_t s = 0; s < sched.segments; ++s) {
            parts.push_back(scaled(ssdm_decompress(*packet[w][s]), inv_m));
        }
        result.per_worker.push_back(reassemble(seg, parts));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Sum-accumulation baseline: every worker compresses its vector once and
// the ring carries per-coordinate integer sums of the +-1 signs, so the
// payload width grows with the hop index.  Bits per hop are the Elias gamma
// lengths of the zigzag-shifted sums plus a 32-bit norm; the value returned
// to every worker is the mean of the M decompressed packets (the simulator
// reconstructs it directly rather than modelling a norm side channel).
// ---------------------------------------------------------------------------

struct SumSsdmAllreduceResult {
    std::vector<DenseVector> per_worker;
    BitsAccount bits;
    std::vector<std::int64_t> max_abs_per_step; // largest |sum| on the wire, per step
};

inline SumSsdmAllreduceResult sum_ssdm_allreduce(const std::vector<DenseVector>& vectors,
                                                 const Schedule& sched, const RoundContext& ctx) {
    if (sched.topology != Topology::ring) {
        throw unsupported_error("sum_ssdm_allreduce: only ring schedules are supported");
    }
    detail::check_inputs(vectors, sched);
    auto seg = segment(vectors[0], sched.segments).first;

    std::vector<std::vector<SsdmPacket>> packets(sched.workers);
    std::vector<std::vector<std::vector<std::int64_t>>> sums(sched.workers);
    for (std::uint32_t w = 0; w < sched.workers; ++w) {
        auto parts = segment(vectors[w], sched.segments).second;
        packets[w].reserve(sched.segments);
        sums[w].resize(sched.segments);
        for (std::uint32_t s = 0; s < sched.segments; ++s) {
            RngStream rng(ctx.global_seed, RngPurpose::ssdm, w, ctx.round, s);
            packets[w].push_back(ssdm_compress(parts[s], rng));
            sums[w][s].resize(seg.segment_len);
            for (std::size_t j = 0; j < seg.segment_len; ++j) {
                sums[w][s][j] = packets[w][s].bits.bit(j) ? 1 : -1;
            }
        }
    }

    SumSsdmAllreduceResult result;
    std::int64_t step_max = 0;
    std::size_t steps_seen = 0;
    BitsAccount bits = detail::run_schedule<std::vector<std::int64_t>>(
        sched,
        [&](std::uint32_t w, std::uint32_t s) { return sums[w][s]; },
        [&](const std::vector<std::int64_t>& p) {
            std::uint64_t total = 32; // norm side channel
            for (std::int64_t v : p) {
                total += signed_sum_code_length(v);
                std::int64_t mag = v < 0 ? -v : v;
                if (mag > step_max) step_max = mag;
            }
            ++steps_seen;
            if (steps_seen == sched.workers) { // all sends of this step are costed
                result.max_abs_per_step.push_back(step_max);
                step_max = 0;
                steps_seen = 0;
            }
            return total;
        },
        [&](std::uint32_t to, std::uint32_t s, std::vector<std::int64_t>&& p) {
            for (std::size_t j = 0; j < p.size(); ++j) sums[to][s][j] += p[j];
        },
        [&](std::uint32_t to, std::uint32_t s, std::vector<std::int64_t>&& p) {
            sums[to][s] = std::move(p);
        });
    result.bits = std::move(bits);

    // The estimate every worker ends with: mean of the individually
    // decompressed packets, identical at each worker by construction.
    std::vector<DenseVector> mean_parts;
    mean_parts.reserve(sched.segments);
    const double inv_m = 1.0 / static_cast<double>(sched.workers);
    for (std::uint32_t s = 0; s < sched.segments; ++s) {
        std::vector<double> acc(seg.segment_len, 0.0);
        for (std::uint32_t w = 0; w < sched.workers; ++w) {
            DenseVector dec = ssdm_decompress(packets[w][s]);
            for (std::size_t j = 0; j < seg.segment_len; ++j) acc[j] += dec[j];
        }
        for (double& v : acc) v *= inv_m;
        mean_parts.push_back(DenseVector(std::move(acc)));
    }
    DenseVector estimate = reassemble(seg, mean_parts);
    result.per_worker.assign(sched.workers, estimate);
    return result;
}

} // namespace marsit
