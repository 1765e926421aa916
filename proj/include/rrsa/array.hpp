/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef RRSA_ARRAY_HPP
#define RRSA_ARRAY_HPP

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rrsa {

/// Run-time execution mode of the reconfigurable array.
enum class Mode { PM, DRG, TRG };
/// Design-time correction rule of the DRG mode.
enum class DrgOption { Zero, Average };
/// Design-time group size of the TRG mode.
enum class TrgOption { Three, Four };

/// A mode with its implementation option resolved.
enum class ExecMode { PM, DRG0, DRGA, TRG3, TRG4 };

inline constexpr std::array<ExecMode, 5> kAllExecModes = {ExecMode::PM, ExecMode::DRG0, ExecMode::DRGA,
                                                          ExecMode::TRG3, ExecMode::TRG4};

std::string_view to_string(Mode m);
std::string_view to_string(ExecMode m);
std::optional<Mode> parse_mode(std::string_view s);
std::optional<ExecMode> parse_exec_mode(std::string_view s);

constexpr Mode base_mode(ExecMode m) {
    switch (m) {
        case ExecMode::PM: return Mode::PM;
        case ExecMode::DRG0:
        case ExecMode::DRGA: return Mode::DRG;
        default: return Mode::TRG;
    }
}

constexpr ExecMode resolve(Mode m, DrgOption d, TrgOption t) {
    switch (m) {
        case Mode::PM: return ExecMode::PM;
        case Mode::DRG: return d == DrgOption::Zero ? ExecMode::DRG0 : ExecMode::DRGA;
        case Mode::TRG: return t == TrgOption::Three ? ExecMode::TRG3 : ExecMode::TRG4;
    }
    return ExecMode::PM;
}

/// True when an N x N array can run `m` with integral group tiling.
bool supports(int n, ExecMode m);

struct ArrayConfig {
    int n = 8;
    Mode mode = Mode::PM;
    DrgOption drg = DrgOption::Zero;
    TrgOption trg = TrgOption::Three;
    double clock_mhz = 357.0;
    double power_w = 0.177;

    [[nodiscard]] ExecMode exec_mode() const { return resolve(mode, drg, trg); }
    void validate() const;

    static ArrayConfig make(int n, ExecMode m);
};

/// Rows x columns of the logical array computing unique outputs.
struct EffectiveSize {
    int rows = 0;
    int cols = 0;
};

EffectiveSize effective_size(int n, ExecMode m);

/// Number of redundant copies of each output computed in the mode.
int copies(ExecMode m);

enum class PeRole { Standalone, Main, Shadow, Voter };

/// Assignment of one physical PE to the logical array. Computing PEs carry
/// a (logical row, logical column, copy) triple; the idle TRG4 voter PE
/// carries its group's logical coordinates and copy = -1.
struct PeAssignment {
    PeRole role = PeRole::Standalone;
    int lrow = 0;
    int lcol = 0;
    int copy = 0;

    [[nodiscard]] bool computes() const { return copy >= 0; }
};

/// Grouping geometry of an N x N array in one execution mode.
///
///  - PM: every PE standalone, logical == physical.
///  - DRG: PEs (r, 2c) and (r, 2c+1) form a pair, the left one is main.
///  - TRG4: each 2 x 2 block is a group; the top-left PE votes and does not
///    compute, the other three compute copies 0..2.
///  - TRG3: each 3-row x 2-column block holds two triads. Upper triad
///    (logical row 2b): (0,0) main, (0,1), (1,0). Lower triad (logical row
///    2b+1): (2,1) main, (2,0), (1,1). Both share logical column c.
///
/// Operands travel along per-copy lanes: copy k of logical row r visits the
/// copy-k PEs of logical columns 0, 1, ... in order, one hop per cycle, and
/// likewise down the columns for weights. Copies therefore never share a
/// register.
class Geometry {
public:
    Geometry(int n, ExecMode mode);

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] ExecMode mode() const { return mode_; }
    [[nodiscard]] EffectiveSize effective() const { return eff_; }
    [[nodiscard]] int copies() const { return copies_; }

    [[nodiscard]] const PeAssignment& at(int p_row, int p_col) const {
        return pes_[static_cast<std::size_t>(p_row) * n_ + p_col];
    }
    /// Physical PE index (row * n + col) computing copy `copy` of (lrow, lcol).
    [[nodiscard]] int physical(int lrow, int lcol, int copy) const {
        return lanes_[(static_cast<std::size_t>(lrow) * eff_.cols + lcol) * copies_ + copy];
    }

private:
    void assign(int p_row, int p_col, PeAssignment a);

    int n_;
    ExecMode mode_;
    EffectiveSize eff_;
    int copies_;
    std::vector<PeAssignment> pes_;
    std::vector<int> lanes_;
};

}  // namespace rrsa

#endif  // RRSA_ARRAY_HPP
