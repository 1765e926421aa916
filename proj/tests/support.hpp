/*
 * Copyright 2026 The rrsa Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef RRSA_TESTS_SUPPORT_HPP
#define RRSA_TESTS_SUPPORT_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "rrsa/fault_model.hpp"
#include "rrsa/qnn.hpp"
#include "rrsa/sa_oracle.hpp"

namespace rrsa::testing {

inline QTensor random_qtensor(std::mt19937_64& rng, Shape shape, int lo = -128, int hi = 127) {
    std::uniform_int_distribution<int> d(lo, hi);
    QTensor t(std::move(shape));
    for (auto& v : t.data()) v = static_cast<std::int8_t>(d(rng));
    return t;
}

struct LayerCase {
    ConvLayerSpec geom;
    QTensor input;
    QTensor weights;
};

inline LayerCase random_layer(std::mt19937_64& rng, int max_c_in = 3, int max_c_out = 14, int max_hw = 7) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    LayerCase lc;
    ConvLayerSpec& g = lc.geom;
    g.c_in = pick(1, max_c_in);
    g.c_out = pick(1, max_c_out);
    g.h_k = pick(1, 3);
    g.w_k = pick(1, 3);
    g.padding = pick(0, 1);
    g.stride = pick(1, 2);
    g.h_in = pick(std::max(1, g.h_k - 2 * g.padding), max_hw);
    g.w_in = pick(std::max(1, g.w_k - 2 * g.padding), max_hw);
    g.bias.resize(static_cast<std::size_t>(g.c_out));
    for (auto& b : g.bias) b = pick(-500, 500);
    lc.input = random_qtensor(rng, Shape{g.c_in, g.h_in, g.w_in});
    lc.weights = random_qtensor(rng, Shape{g.c_out, g.c_in, g.h_k, g.w_k});
    return lc;
}

/// Layer output computed by streaming the lowered operands through the
/// register-level array with the given faults, bias added afterwards.
inline AccTensor oracle_layer(const LayerCase& lc, int n, ExecMode mode, const std::vector<CycleFault>& faults) {
    const Lowered low = im2col(lc.input, lc.geom);
    const Matrix<std::int8_t> w = lower_weights(lc.weights);
    SystolicArray sa(n, mode);
    const MatmulResult r = sa.run_matmul(low.matrix, w, faults, low.padding);
    AccTensor out(Shape{lc.geom.c_out, lc.geom.h_out(), lc.geom.w_out()});
    const int wo = lc.geom.w_out();
    for (int p = 0; p < lc.geom.windows(); ++p)
        for (int k = 0; k < lc.geom.c_out; ++k)
            out.at(k, p / wo, p % wo) = wrap_add(r.out(p, k), lc.geom.bias_at(k));
    return out;
}

}  // namespace rrsa::testing

#endif  // RRSA_TESTS_SUPPORT_HPP
