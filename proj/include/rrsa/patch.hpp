/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef RRSA_PATCH_HPP
#define RRSA_PATCH_HPP

#include <cstdint>
#include <string_view>
#include <vector>

namespace rrsa {

/// Shape of the corruption a single fault leaves in a layer output.
enum class PatternKind { Empty, Point, Line, Bullet, Multi };

std::string_view to_string(PatternKind p);

struct PatchEntry {
    int channel = 0;  // output channel, 0-based
    int u = 0;        // output row
    int v = 0;        // output column
    std::int32_t error = 0;

    friend bool operator==(const PatchEntry&, const PatchEntry&) = default;
};

/// Sparse additive delta on one conv layer's (C_out, H_out, W_out) output.
struct ErrorPatch {
    std::vector<PatchEntry> entries;
    PatternKind pattern = PatternKind::Empty;

    [[nodiscard]] bool empty() const { return entries.empty(); }
    [[nodiscard]] std::size_t size() const { return entries.size(); }

    /// Entry-wise negation; applying a patch and then its inverse is the identity.
    [[nodiscard]] ErrorPatch negated() const;

    /// Recomputes `pattern` from the entry coordinates.
    void classify_pattern();
};

}  // namespace rrsa

#endif  // RRSA_PATCH_HPP
