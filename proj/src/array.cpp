/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "rrsa/array.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>

namespace rrsa {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::PM: return "pm";
        case Mode::DRG: return "drg";
        case Mode::TRG: return "trg";
    }
    return "?";
}

std::string_view to_string(ExecMode m) {
    switch (m) {
        case ExecMode::PM: return "pm";
        case ExecMode::DRG0: return "drg0";
        case ExecMode::DRGA: return "drga";
        case ExecMode::TRG3: return "trg3";
        case ExecMode::TRG4: return "trg4";
    }
    return "?";
}

std::optional<Mode> parse_mode(std::string_view s) {
    const auto l = lower(s);
    if (l == "pm") return Mode::PM;
    if (l == "drg") return Mode::DRG;
    if (l == "trg") return Mode::TRG;
    return std::nullopt;
}

std::optional<ExecMode> parse_exec_mode(std::string_view s) {
    const auto l = lower(s);
    for (auto m : kAllExecModes)
        if (l == to_string(m)) return m;
    return std::nullopt;
}

bool supports(int n, ExecMode m) {
    if (n < 1) return false;
    switch (m) {
        case ExecMode::PM: return true;
        case ExecMode::DRG0:
        case ExecMode::DRGA:
        case ExecMode::TRG4: return n % 2 == 0;
        case ExecMode::TRG3: return n % 6 == 0;
    }
    return false;
}

EffectiveSize effective_size(int n, ExecMode m) {
    switch (m) {
        case ExecMode::PM: return {n, n};
        case ExecMode::DRG0:
        case ExecMode::DRGA: return {n, n / 2};
        case ExecMode::TRG3: return {2 * n / 3, n / 2};
        case ExecMode::TRG4: return {n / 2, n / 2};
    }
    return {n, n};
}

int copies(ExecMode m) {
    switch (base_mode(m)) {
        case Mode::PM: return 1;
        case Mode::DRG: return 2;
        case Mode::TRG: return 3;
    }
    return 1;
}

void ArrayConfig::validate() const {
    if (n < 1) throw std::invalid_argument("array size must be >= 1");
    if (mode != Mode::PM && n % 2 != 0) throw std::invalid_argument("redundant modes need an even array size");
    if (!supports(n, exec_mode()))
        throw std::invalid_argument("array size " + std::to_string(n) + " does not support mode " +
                                    std::string(to_string(exec_mode())));
    if (!(clock_mhz > 0) || !(power_w > 0)) throw std::invalid_argument("clock and power must be positive");
}

ArrayConfig ArrayConfig::make(int n, ExecMode m) {
    ArrayConfig c;
    c.n = n;
    c.mode = base_mode(m);
    c.drg = m == ExecMode::DRGA ? DrgOption::Average : DrgOption::Zero;
    c.trg = m == ExecMode::TRG4 ? TrgOption::Four : TrgOption::Three;
    return c;
}

Geometry::Geometry(int n, ExecMode mode)
    : n_(n), mode_(mode), eff_(effective_size(n, mode)), copies_(rrsa::copies(mode)) {
    if (!supports(n, mode))
        throw std::invalid_argument("array size " + std::to_string(n) + " does not support mode " +
                                    std::string(to_string(mode)));
    pes_.resize(static_cast<std::size_t>(n) * n);
    lanes_.assign(static_cast<std::size_t>(eff_.rows) * eff_.cols * copies_, -1);

    switch (mode) {
        case ExecMode::PM:
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) assign(r, c, {PeRole::Standalone, r, c, 0});
            break;
        case ExecMode::DRG0:
        case ExecMode::DRGA:
            for (int r = 0; r < n; ++r)
                for (int g = 0; g < n / 2; ++g) {
                    assign(r, 2 * g, {PeRole::Main, r, g, 0});
                    assign(r, 2 * g + 1, {PeRole::Shadow, r, g, 1});
                }
            break;
        case ExecMode::TRG4:
            for (int br = 0; br < n / 2; ++br)
                for (int bc = 0; bc < n / 2; ++bc) {
                    const int r = 2 * br;
                    const int c = 2 * bc;
                    assign(r, c, {PeRole::Voter, br, bc, -1});
                    assign(r, c + 1, {PeRole::Shadow, br, bc, 0});
                    assign(r + 1, c, {PeRole::Shadow, br, bc, 1});
                    assign(r + 1, c + 1, {PeRole::Shadow, br, bc, 2});
                }
            break;
        case ExecMode::TRG3:
            for (int b = 0; b < n / 3; ++b)
                for (int bc = 0; bc < n / 2; ++bc) {
                    const int r = 3 * b;
                    const int c = 2 * bc;
                    const int up = 2 * b;
                    const int lo = 2 * b + 1;
                    assign(r, c, {PeRole::Main, up, bc, 0});
                    assign(r, c + 1, {PeRole::Shadow, up, bc, 1});
                    assign(r + 1, c, {PeRole::Shadow, up, bc, 2});
                    assign(r + 2, c + 1, {PeRole::Main, lo, bc, 0});
                    assign(r + 2, c, {PeRole::Shadow, lo, bc, 1});
                    assign(r + 1, c + 1, {PeRole::Shadow, lo, bc, 2});
                }
            break;
    }
}

void Geometry::assign(int p_row, int p_col, PeAssignment a) {
    pes_[static_cast<std::size_t>(p_row) * n_ + p_col] = a;
    if (a.computes())
        lanes_[(static_cast<std::size_t>(a.lrow) * eff_.cols + a.lcol) * copies_ + a.copy] = p_row * n_ + p_col;
}

}  // namespace rrsa
