// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "marsit/allreduce.hpp"
#include "marsit/dense_vector.hpp"
#include "marsit/errors.hpp"
#include "marsit/schedule.hpp"
#include "marsit/segmentation.hpp"
#include "marsit/sign_vector.hpp"

namespace marsit {

// Synchronization policy for one training run.  full_precision_period is
// the K in "every K-th round is synchronized densely"; an empty optional
// means the dense path is never taken.
struct SyncConfig {
    std::optional<std::uint64_t> full_precision_period; // K >= 1, or never
    double eta_s = 0.0;                                 // sign-round stepsize, > 0

    void validate() const {
        if (full_precision_period && *full_precision_period == 0) {
            throw parameter_error("SyncConfig: full-precision period must be >= 1");
        }
        if (!(eta_s > 0.0)) {
            throw parameter_error("SyncConfig: eta_s must be > 0");
        }
    }
};

// Per-worker residual between what the worker wanted to apply and what the
// sign round actually applied.  Reset to zero by every dense round.
struct CompensationState {
    DenseVector c;
};

struct MarsitRoundResult {
    DenseVector global_update;               // g_t, identical at every worker
    std::vector<CompensationState> compensation;
    BitsAccount bits;
    bool full_precision = false;
    std::optional<PackedSignVector> aggregate_bits; // sign rounds only, truncated to D
};

// One synchronization round.  Inputs are the locally scaled gradients
// (eta_l already applied) and the carried compensation.  A round is dense
// when a period K is configured and t % K == 0 — so round 0 of a periodic
// run starts from an exact average — and a sign round otherwise:
//
//   sign round:  u_m = grad_m + c_m, signs of u_m are merged across the
//                ring/torus, g_t = eta_s * (+-1 per coordinate),
//                c'_m = u_m - g_t
//   dense round: g_t = mean(u_m), c'_m = 0
inline MarsitRoundResult marsit_round(std::uint64_t t, const SyncConfig& cfg,
                                      const std::vector<DenseVector>& scaled_grads,
                                      const std::vector<CompensationState>& comp,
                                      const Schedule& sched, std::uint64_t global_seed) {
    cfg.validate();
    if (scaled_grads.size() != sched.workers || comp.size() != sched.workers) {
        throw parameter_error("marsit_round: worker count mismatch");
    }
    const std::size_t dim = scaled_grads[0].size();
    std::vector<DenseVector> u;
    u.reserve(sched.workers);
    for (std::uint32_t w = 0; w < sched.workers; ++w) {
        if (scaled_grads[w].size() != dim || comp[w].c.size() != dim) {
            throw parameter_error("marsit_round: dimension mismatch");
        }
        u.push_back(add(scaled_grads[w], comp[w].c));
    }

    const bool dense = cfg.full_precision_period && (t % *cfg.full_precision_period == 0);
    if (dense) {
        DenseAllreduceResult res = allreduce_dense(u, sched);
        const DenseVector& mean = consensus(res.per_worker);
        MarsitRoundResult out{mean, {}, std::move(res.bits), true, std::nullopt};
        for (std::uint32_t w = 0; w < sched.workers; ++w) {
            out.compensation.push_back(CompensationState{DenseVector::zeros(dim)});
        }
        return out;
    }

    // Sign path.  Segment the padded coordinate space, aggregate one bit
    // per coordinate, then expand to +-eta_s and truncate the padding away.
    Segmentation seg;
    std::vector<std::vector<PackedSignVector>> signs(sched.workers);
    for (std::uint32_t w = 0; w < sched.workers; ++w) {
        auto [s, parts] = segment(u[w], sched.segments);
        seg = s;
        signs[w].reserve(parts.size());
        for (const DenseVector& part : parts) signs[w].push_back(pack_signs(part));
    }

    SignAllreduceResult res = allreduce_sign(signs, sched, RoundContext{global_seed, t});
    const std::vector<AggregateSign>& agg = consensus(res.per_worker);

    PackedSignVector full_bits = PackedSignVector::zeros(dim);
    for (std::uint32_t s = 0; s < sched.segments; ++s) {
        if (agg[s].count != sched.workers) {
            throw protocol_error("marsit_round: aggregate is missing contributions");
        }
        for (std::size_t j = 0; j < seg.segment_len; ++j) {
            const std::size_t coord = s * seg.segment_len + j;
            if (coord < dim && agg[s].bits.bit(j)) full_bits.set_bit(coord, true);
        }
    }
    DenseVector g = unpack_to_update(full_bits, cfg.eta_s);

    MarsitRoundResult out{g, {}, std::move(res.bits), false, std::move(full_bits)};
    for (std::uint32_t w = 0; w < sched.workers; ++w) {
        out.compensation.push_back(CompensationState{subtract(u[w], g)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exact expectation oracle for the merge chain.
// ---------------------------------------------------------------------------

namespace detail {

// Small exact rational; denominators stay below M! for chains of length M.
struct Fraction {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Fraction of(std::int64_t n, std::int64_t d) {
        Fraction f{n, d};
        f.reduce();
        return f;
    }

    void reduce() {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    Fraction operator*(const Fraction& o) const {
        const __int128 n = static_cast<__int128>(num) * o.num;
        const __int128 d = static_cast<__int128>(den) * o.den;
        return reduce128(n, d);
    }

    Fraction operator+(const Fraction& o) const {
        const __int128 n =
            static_cast<__int128>(num) * o.den + static_cast<__int128>(o.num) * den;
        const __int128 d = static_cast<__int128>(den) * o.den;
        return reduce128(n, d);
    }

    double to_double() const {
        return static_cast<double>(num) / static_cast<double>(den);
    }

private:
    static Fraction reduce128(__int128 n, __int128 d) {
        if (d < 0) {
            n = -n;
            d = -d;
        }
        __int128 a = n < 0 ? -n : n;
        __int128 b = d;
        while (b != 0) {
            const __int128 t = a % b;
            a = b;
            b = t;
        }
        if (a > 1) {
            n /= a;
            d /= a;
        }
        return Fraction{static_cast<std::int64_t>(n), static_cast<std::int64_t>(d)};
    }
};

// Walk every transient-coin outcome of the fold
// merge(...merge(merge(b0, b1), b2)..., b_{M-1}) and accumulate the exact
// probability that the final bit is 1.
inline Fraction enumerate_chain(const std::vector<bool>& bits, std::size_t index, bool state,
                                std::int64_t count, Fraction weight) {
    if (index == bits.size()) {
        return state ? weight : Fraction::of(0, 1);
    }
    const bool local = bits[index];
    if (local == state) {
        return enumerate_chain(bits, index + 1, state, count + 1, weight);
    }
    // Disagreement: the running aggregate of `count` workers keeps its bit
    // with probability count / (count + 1), the newcomer wins otherwise.
    Fraction keep = enumerate_chain(bits, index + 1, state, count + 1,
                                    weight * Fraction::of(count, count + 1));
    Fraction take = enumerate_chain(bits, index + 1, local, count + 1,
                                    weight * Fraction::of(1, count + 1));
    return keep + take;
}

} // namespace detail

// Exhaustively enumerate the transient coins of a sequential merge chain
// over M workers' sign vectors and return, per coordinate, the exact
// probability that the aggregated bit is 1.  Every probability equals
// (number of 1-votes) / M; this oracle recomputes it from the chain
// mechanics rather than from that closed form.  Chains longer than 12
// workers are rejected (the enumeration would be needlessly large).
inline std::vector<double> expected_update_check(const std::vector<PackedSignVector>& worker_signs) {
    if (worker_signs.empty()) {
        throw parameter_error("expected_update_check: need at least one worker");
    }
    if (worker_signs.size() > 12) {
        throw unsupported_error("expected_update_check: enumeration limited to 12 workers");
    }
    const std::size_t len = worker_signs[0].size();
    for (const PackedSignVector& v : worker_signs) {
        if (v.size() != len) {
            throw parameter_error("expected_update_check: length mismatch");
        }
    }
    std::vector<double> out(len);
    for (std::size_t j = 0; j < len; ++j) {
        std::vector<bool> bits(worker_signs.size());
        for (std::size_t m = 0; m < worker_signs.size(); ++m) bits[m] = worker_signs[m].bit(j);
        out[j] = detail::enumerate_chain(bits, 1, bits[0], 1, detail::Fraction::of(1, 1)).to_double();
    }
    return out;
}

} // namespace marsit
