/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef RRSA_FAULT_MODEL_HPP
#define RRSA_FAULT_MODEL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace rrsa {

/// Storage a fault lands in.
enum class FaultTarget { Ireg, Wreg, Oreg, Mult };

inline constexpr std::array<FaultTarget, 4> kAllTargets = {FaultTarget::Ireg, FaultTarget::Wreg, FaultTarget::Oreg,
                                                           FaultTarget::Mult};

/// Bit width of the storage: 8 for operand registers, 32 for the
/// accumulator and the multiplier product.
constexpr int target_width(FaultTarget t) {
    return (t == FaultTarget::Ireg || t == FaultTarget::Wreg) ? 8 : 32;
}

std::string_view to_string(FaultTarget t);
std::optional<FaultTarget> parse_target(std::string_view s);

/// Single bit flip at one cycle of one tile step.
///
/// Tile indices follow the 1-based convention (1 <= tile_a <= T_a);
/// `cycle` is the 0-based cycle within the tile execution. PE coordinates
/// are physical and 0-based.
struct TransientFault {
    FaultTarget target = FaultTarget::Ireg;
    int cycle = 0;
    int tile_w = 1;
    int tile_a = 1;
    int p_row = 0;
    int p_col = 0;
    int bit = 0;

    friend bool operator==(const TransientFault&, const TransientFault&) = default;
};

/// Stuck-at fault present for the whole execution.
struct PermanentFault {
    FaultTarget target = FaultTarget::Ireg;
    int p_row = 0;
    int p_col = 0;
    int bit = 0;
    int stuck = 1;  // 0 or 1

    friend bool operator==(const PermanentFault&, const PermanentFault&) = default;
};

using FaultSpec = std::variant<TransientFault, PermanentFault>;

std::string describe(const FaultSpec& f);

/// Additive error a bit fault contributes to the stored value.
struct ErrorTerm {
    std::int64_t epsilon = 0;  // 0 or +-2^bit
    int gamma = 1;             // sign coefficient
    int sign_bit = 7;
};

/// Error term of inverting bit `bit` of `value` interpreted as a
/// `width`-bit two's-complement integer: value + epsilon equals the
/// flipped value. Preconditions: 0 <= bit < width <= 32 and value
/// representable in `width` bits.
ErrorTerm error_term_transient(std::int64_t value, int bit, int width);

/// Error term of forcing bit `bit` to `stuck`; zero when already equal.
ErrorTerm error_term_permanent(std::int64_t value, int bit, int stuck, int width);

/// Value with bit `bit` forced to `stuck`, sign-extended from `width` bits.
std::int64_t force_bit(std::int64_t value, int bit, int stuck, int width);
std::int64_t flip_bit(std::int64_t value, int bit, int width);

// Redundancy correction rules applied to the copies of one group.

/// Bits where the two sums disagree are cleared.
constexpr std::int32_t correct_drg0(std::int32_t main_sum, std::int32_t shadow_sum) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(main_sum) & static_cast<std::uint32_t>(shadow_sum));
}

/// floor((main + shadow) / 2) on the exact 33-bit sum.
constexpr std::int32_t correct_drga(std::int32_t main_sum, std::int32_t shadow_sum) {
    const std::int64_t s = static_cast<std::int64_t>(main_sum) + shadow_sum;
    return static_cast<std::int32_t>(s >> 1);  // arithmetic shift is floor division
}

/// Bitwise majority vote.
constexpr std::int32_t correct_trg(std::int32_t a, std::int32_t b, std::int32_t c) {
    const auto x = static_cast<std::uint32_t>(a);
    const auto y = static_cast<std::uint32_t>(b);
    const auto z = static_cast<std::uint32_t>(c);
    return static_cast<std::int32_t>((x & y) | (x & z) | (y & z));
}

}  // namespace rrsa

#endif  // RRSA_FAULT_MODEL_HPP
