/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "rrsa/fault_model.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

namespace rrsa {

std::string_view to_string(FaultTarget t) {
    switch (t) {
        case FaultTarget::Ireg: return "IREG";
        case FaultTarget::Wreg: return "WREG";
        case FaultTarget::Oreg: return "OREG";
        case FaultTarget::Mult: return "MULT";
    }
    return "?";
}

std::optional<FaultTarget> parse_target(std::string_view s) {
    for (auto t : kAllTargets) {
        const auto name = to_string(t);
        if (s.size() == name.size()) {
            bool eq = true;
            for (std::size_t i = 0; i < s.size(); ++i) eq = eq && (std::toupper(static_cast<unsigned char>(s[i])) == name[i]);
            if (eq) return t;
        }
    }
    return std::nullopt;
}

std::string describe(const FaultSpec& f) {
    std::ostringstream os;
    if (const auto* t = std::get_if<TransientFault>(&f)) {
        os << "transient{" << to_string(t->target) << " ts=" << t->cycle << " t_w=" << t->tile_w
           << " t_a=" << t->tile_a << " pe=(" << t->p_row << "," << t->p_col << ") bit=" << t->bit << "}";
    } else {
        const auto& p = std::get<PermanentFault>(f);
        os << "permanent{" << to_string(p.target) << " pe=(" << p.p_row << "," << p.p_col << ") bit=" << p.bit
           << " stuck-at-" << p.stuck << "}";
    }
    return os.str();
}

namespace {

void check_bit(int bit, int width) {
    if (width < 1 || width > 32 || bit < 0 || bit >= width)
        throw std::invalid_argument("bit index " + std::to_string(bit) + " outside width " + std::to_string(width));
}

std::uint64_t raw_bits(std::int64_t value, int width) {
    const std::uint64_t mask = (width == 64) ? ~0ULL : ((1ULL << width) - 1);
    return static_cast<std::uint64_t>(value) & mask;
}

std::int64_t sign_extend(std::uint64_t bits, int width) {
    const std::uint64_t sign = 1ULL << (width - 1);
    return static_cast<std::int64_t>((bits ^ sign)) - static_cast<std::int64_t>(sign);
}

}  // namespace

std::int64_t flip_bit(std::int64_t value, int bit, int width) {
    check_bit(bit, width);
    return sign_extend(raw_bits(value, width) ^ (1ULL << bit), width);
}

std::int64_t force_bit(std::int64_t value, int bit, int stuck, int width) {
    check_bit(bit, width);
    std::uint64_t bits = raw_bits(value, width);
    bits = stuck ? (bits | (1ULL << bit)) : (bits & ~(1ULL << bit));
    return sign_extend(bits, width);
}

ErrorTerm error_term_transient(std::int64_t value, int bit, int width) {
    check_bit(bit, width);
    ErrorTerm t;
    t.sign_bit = width - 1;
    const bool set = (raw_bits(value, width) >> bit) & 1U;
    const bool is_sign = bit == t.sign_bit;
    // A set magnitude bit or a cleared sign bit lowers the value.
    t.gamma = (set != is_sign) ? -1 : 1;
    t.epsilon = static_cast<std::int64_t>(t.gamma) * (std::int64_t{1} << bit);
    return t;
}

ErrorTerm error_term_permanent(std::int64_t value, int bit, int stuck, int width) {
    if (stuck != 0 && stuck != 1) throw std::invalid_argument("stuck-at value must be 0 or 1");
    ErrorTerm t = error_term_transient(value, bit, width);
    const int current = static_cast<int>((raw_bits(value, width) >> bit) & 1U);
    if (current == stuck) t.epsilon = 0;
    return t;
}

}  // namespace rrsa
