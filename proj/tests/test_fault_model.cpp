/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include <doctest.h>

#include <cstdlib>
#include <random>

#include "rrsa/fault_model.hpp"

using namespace rrsa;

namespace {

// Bit flip on the two's-complement encoding, sign-extended back.
std::int64_t flip_oracle(std::int64_t value, int bit, int width) {
    const std::uint64_t mask = width == 64 ? ~0ULL : ((1ULL << width) - 1);
    std::uint64_t u = static_cast<std::uint64_t>(value) & mask;
    u ^= 1ULL << bit;
    if (u & (1ULL << (width - 1))) u |= ~mask;
    return static_cast<std::int64_t>(u);
}

std::int32_t majority_oracle(std::int32_t a, std::int32_t b, std::int32_t c) {
    std::uint32_t out = 0;
    for (int k = 0; k < 32; ++k) {
        const int votes = ((static_cast<std::uint32_t>(a) >> k) & 1) + ((static_cast<std::uint32_t>(b) >> k) & 1) +
                          ((static_cast<std::uint32_t>(c) >> k) & 1);
        if (votes >= 2) out |= 1u << k;
    }
    return static_cast<std::int32_t>(out);
}

}  // namespace

TEST_SUITE("fault_model") {

TEST_CASE("transient error terms") {
    ErrorTerm t = error_term_transient(10, 3, 8);
    CHECK(t.gamma == -1);
    CHECK(t.epsilon == -8);
    CHECK(10 + t.epsilon == 2);

    t = error_term_transient(10, 7, 8);
    CHECK(t.gamma == -1);
    CHECK(t.epsilon == -128);
    CHECK(t.sign_bit == 7);
    CHECK(10 + t.epsilon == -118);

    t = error_term_transient(-1, 0, 8);
    CHECK(t.epsilon == -1);
    CHECK(-1 + t.epsilon == -2);
}

TEST_CASE("transient error term equals the bit flip at widths 8 and 32") {
    std::mt19937_64 rng(8);
    for (int v = -128; v <= 127; ++v)
        for (int bit = 0; bit < 8; ++bit) CHECK(v + error_term_transient(v, bit, 8).epsilon == flip_oracle(v, bit, 8));
    for (int trial = 0; trial < 5000; ++trial) {
        const auto v = static_cast<std::int32_t>(rng());
        const int bit = static_cast<int>(rng() % 32);
        const ErrorTerm t = error_term_transient(v, bit, 32);
        CHECK(v + t.epsilon == flip_oracle(v, bit, 32));
        CHECK(std::llabs(t.epsilon) == (1LL << bit));
    }
}

TEST_CASE("permanent error terms") {
    CHECK(error_term_permanent(10, 1, 1, 8).epsilon == 0);
    CHECK(error_term_permanent(10, 1, 0, 8).epsilon == -2);
    CHECK(error_term_permanent(0, 7, 1, 8).epsilon == -128);
    for (int v = -128; v <= 127; ++v)
        for (int bit = 0; bit < 8; ++bit)
            for (int s : {0, 1}) CHECK(v + error_term_permanent(v, bit, s, 8).epsilon == force_bit(v, bit, s, 8));
}

TEST_CASE("flip_bit and force_bit") {
    CHECK(flip_bit(10, 3, 8) == 2);
    CHECK(flip_bit(127, 7, 8) == -1);
    CHECK(force_bit(-1, 7, 0, 8) == 127);
    CHECK(force_bit(0, 31, 1, 32) == std::numeric_limits<std::int32_t>::min());
}

TEST_CASE("DRG0 correction") {
    CHECK(correct_drg0(42, 42) == 42);
    CHECK(correct_drg0(0b0110, 0b0010) == 0b0010);
    std::mt19937_64 rng(0);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto x = static_cast<std::int32_t>(rng());
        const int k = static_cast<int>(rng() % 32);
        const auto flipped = static_cast<std::int32_t>(static_cast<std::uint32_t>(x) ^ (1u << k));
        const auto cleared = static_cast<std::int32_t>(static_cast<std::uint32_t>(x) & ~(1u << k));
        CHECK(correct_drg0(x, flipped) == cleared);
        CHECK(correct_drg0(flipped, x) == cleared);
    }
}

TEST_CASE("DRGA correction") {
    CHECK(correct_drga(42, 42) == 42);
    CHECK(correct_drga(100, 116) == 108);
    CHECK(correct_drga(-5, -6) == -6);
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 5000; ++trial) {
        const auto x = static_cast<std::int32_t>(rng());
        const std::int64_t e = static_cast<std::int64_t>(rng() % (1ULL << 31)) * (trial % 2 ? 1 : -1);
        const std::int64_t y = x + e;
        if (y < std::numeric_limits<std::int32_t>::min() || y > std::numeric_limits<std::int32_t>::max()) continue;
        const std::int64_t residual = correct_drga(x, static_cast<std::int32_t>(y)) - static_cast<std::int64_t>(x);
        CHECK(std::llabs(residual) <= (std::llabs(e) + 1) / 2);
    }
}

TEST_CASE("TRG voting") {
    CHECK(correct_trg(7, 7, 7) == 7);
    CHECK(correct_trg(7, 7, 999) == 7);
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto a = static_cast<std::int32_t>(rng());
        const auto b = static_cast<std::int32_t>(rng());
        const auto c = static_cast<std::int32_t>(rng());
        CHECK(correct_trg(a, b, c) == majority_oracle(a, b, c));
        CHECK(correct_trg(a, a, b) == a);
        CHECK(correct_trg(b, a, a) == a);
        CHECK(correct_trg(a, b, a) == a);
    }
}

TEST_CASE("target names round-trip") {
    for (FaultTarget t : kAllTargets) CHECK(parse_target(to_string(t)) == t);
    CHECK_FALSE(parse_target("acc").has_value());
    CHECK(target_width(FaultTarget::Ireg) == 8);
    CHECK(target_width(FaultTarget::Mult) == 32);
}

}  // TEST_SUITE
