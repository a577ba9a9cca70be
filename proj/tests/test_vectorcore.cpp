// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense vectors, packed sign vectors, and segmentation.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "marsit/dense_vector.hpp"
#include "marsit/rng.hpp"
#include "marsit/segmentation.hpp"
#include "marsit/sign_vector.hpp"

using namespace marsit;

namespace {

DenseVector random_vector(std::size_t dim, std::uint64_t seed) {
    RngStream rng(seed, RngPurpose::trial, 0, 0, 0);
    std::vector<double> v(dim);
    for (double& x : v) x = rng.next_gaussian();
    return DenseVector(std::move(v));
}

} // namespace

TEST_CASE("dense vector validates contents", "[vectorcore]") {
    REQUIRE_THROWS_AS(DenseVector(std::vector<double>{}), parameter_error);
    REQUIRE_THROWS_AS(DenseVector({1.0, std::numeric_limits<double>::quiet_NaN()}),
                      non_finite_error);
    REQUIRE_THROWS_AS(DenseVector({std::numeric_limits<double>::infinity()}), non_finite_error);
    const DenseVector v({1.0, -2.0});
    REQUIRE(v.size() == 2);
    REQUIRE(v[1] == -2.0);
}

TEST_CASE("pack_signs maps zero to plus", "[vectorcore]") {
    const PackedSignVector bits = pack_signs(DenseVector({3.0, -4.0, 0.0}));
    REQUIRE(bits.size() == 3);
    REQUIRE(bits.bit(0));
    REQUIRE_FALSE(bits.bit(1));
    REQUIRE(bits.bit(2)); // sgn(0) = +1
}

TEST_CASE("unpack_to_update expands bits to +-eta", "[vectorcore]") {
    PackedSignVector bits = PackedSignVector::zeros(2);
    bits.set_bit(0, true);
    const DenseVector update = unpack_to_update(bits, 0.5);
    REQUIRE(update[0] == 0.5);
    REQUIRE(update[1] == -0.5);

    REQUIRE_THROWS_AS(unpack_to_update(bits, 0.0), parameter_error);
    REQUIRE_THROWS_AS(unpack_to_update(bits, -1.0), parameter_error);
}

TEST_CASE("unpacked update always has norm eta * sqrt(D)", "[vectorcore]") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const std::size_t dim = 1 + static_cast<std::size_t>(seed) * 17;
        RngStream rng(seed, RngPurpose::trial, 1, 2, 3);
        PackedSignVector bits = PackedSignVector::zeros(dim);
        for (std::size_t j = 0; j < dim; ++j) bits.set_bit(j, rng.next_bernoulli(0.5));
        const double eta = 0.25;
        const DenseVector update = unpack_to_update(bits, eta);
        const double norm = update.l2_norm();
        REQUIRE(norm == Catch::Approx(eta * std::sqrt(static_cast<double>(dim))).epsilon(1e-12));
    }
}

TEST_CASE("packing round trip preserves signs", "[vectorcore]") {
    const DenseVector v = random_vector(130, 7);
    const PackedSignVector bits = pack_signs(v);
    const DenseVector update = unpack_to_update(bits, 1.0);
    for (std::size_t j = 0; j < v.size(); ++j) {
        REQUIRE((update[j] > 0) == (v[j] >= 0));
    }
}

TEST_CASE("packed sign vector keeps storage padding at zero", "[vectorcore]") {
    PackedSignVector bits = PackedSignVector::zeros(65);
    for (std::size_t j = 0; j < 65; ++j) bits.set_bit(j, true);
    REQUIRE(bits.words().size() == 2);
    REQUIRE(bits.words()[1] == 1u); // only logical bit 64 may be set
    REQUIRE(bits.popcount() == 65);

    PackedSignVector other = PackedSignVector::zeros(65);
    for (std::size_t j = 0; j < 65; ++j) other.set_bit(j, true);
    REQUIRE(bits == other);
    other.set_bit(64, false);
    REQUIRE_FALSE(bits == other);

    REQUIRE_THROWS_AS(bits.bit(65), parameter_error);
    REQUIRE_THROWS_AS(bits.set_bit(65, true), parameter_error);
}

TEST_CASE("segmentation splits evenly without padding", "[vectorcore]") {
    std::vector<double> raw(12);
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<double>(i);
    auto [seg, parts] = segment(DenseVector(raw), 3);
    REQUIRE(seg.dim == 12);
    REQUIRE(seg.segments == 3);
    REQUIRE(seg.segment_len == 4);
    REQUIRE(seg.padded_dim() == 12);
    REQUIRE(parts.size() == 3);
    REQUIRE(parts[1][0] == 4.0);
    REQUIRE(parts[2][3] == 11.0);
    REQUIRE(seg.boundaries() == std::vector<std::size_t>{0, 4, 8, 12});
}

TEST_CASE("segmentation zero-pads the tail", "[vectorcore]") {
    std::vector<double> raw(10, 1.0);
    auto [seg, parts] = segment(DenseVector(raw), 3);
    REQUIRE(seg.segment_len == 4); // ceil(10 / 3)
    REQUIRE(parts[2][0] == 1.0);
    REQUIRE(parts[2][1] == 1.0);
    REQUIRE(parts[2][2] == 0.0);
    REQUIRE(parts[2][3] == 0.0);

    REQUIRE_THROWS_AS(segment(DenseVector(raw), 0), parameter_error);
}

TEST_CASE("reassemble inverts segment for any D and M", "[vectorcore]") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const std::size_t dim = 1 + (seed * 37) % 100;
        const std::size_t m = 1 + seed % 7;
        const DenseVector v = random_vector(dim, seed + 100);
        auto [seg, parts] = segment(v, m);
        REQUIRE(reassemble(seg, parts) == v);
    }
}
