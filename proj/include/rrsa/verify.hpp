/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef RRSA_VERIFY_HPP
#define RRSA_VERIFY_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rrsa/array.hpp"
#include "rrsa/fault_model.hpp"
#include "rrsa/propagation.hpp"
#include "rrsa/qnn.hpp"
#include "rrsa/sa_oracle.hpp"

namespace rrsa {

/// Conv layer output computed on the register-level array with `faults`,
/// bias added after drain.
AccTensor oracle_conv(const QTensor& input, const ConvLayerSpec& layer, const QTensor& weights, int n, ExecMode mode,
                      const std::vector<CycleFault>& faults = {});

struct VerifyOptions {
    std::vector<int> sizes = {4, 6, 8, 12};
    std::size_t cases = 1000;
    std::uint64_t seed = 1;
    Mutation mutation = Mutation::None;
    unsigned threads = 1;
};

struct Counterexample {
    FaultSpec fault;
    int n = 0;
    ExecMode mode = ExecMode::PM;
    ConvLayerSpec layer;
};

struct VerifyResult {
    std::size_t cases = 0;
    std::size_t passed = 0;
    std::size_t failed = 0;
    std::size_t visible = 0;  // cases whose fault changed the layer output
    std::optional<Counterexample> first_failure;
};

/// Randomized propagation-vs-array equivalence sweep over every size in
/// `sizes`, every mode it supports, all fault targets, transient and
/// permanent. Half of the transient faults target a live PE and slot.
VerifyResult run_verification(const VerifyOptions& opts);

}  // namespace rrsa

#endif  // RRSA_VERIFY_HPP
