# Copyright 2026 The rrsa Authors.
# SPDX-License-Identifier: Apache-2.0
"""Fault injection and latency models for redundant systolic arrays."""

import json

import numpy as np

from . import _core
from ._core import IoError, effective_size, make_fixture, mode_latency, reference_network, sample_size, verify, wilson_interval

__all__ = [
    "IoError",
    "conv_pair",
    "effective_size",
    "explore",
    "make_fixture",
    "mode_latency",
    "propagate",
    "reference_network",
    "run_campaign",
    "sample_size",
    "simulate",
    "verify",
    "wilson_interval",
]


def simulate(a, w, n, mode="pm", faults=()):
    """Run ``a @ w`` on the register-level array; returns (output, cycles)."""
    return _core.simulate(
        np.asarray(a, dtype=np.int8), np.asarray(w, dtype=np.int8), n, mode, [json.dumps(f) for f in faults]
    )


def propagate(fault, layer, input, weights, n, mode="pm"):
    """Analytic error patch of one fault on one conv layer, as a dict."""
    return json.loads(
        _core.propagate(json.dumps(fault), layer, np.asarray(input, np.int8), np.asarray(weights, np.int8), n, mode)
    )


def conv_pair(fault, layer, input, weights, n, mode="pm"):
    """Faulty conv output from the analytic patch and from the array: (analytic, array)."""
    return _core.conv_pair(json.dumps(fault), layer, np.asarray(input, np.int8), np.asarray(weights, np.int8), n, mode)


def run_campaign(network, inputs, config):
    """Fault-injection campaign; returns the AVF report as a dict."""
    return json.loads(_core.run_campaign(str(network), str(inputs), json.dumps(config)))


def explore(layers, avf_table, n=48, modes=("pm", "drg", "trg"), drg="drg0", trg="trg3"):
    """Enumerate mode-layer mappings; returns one dict per mapping."""
    return json.loads(_core.explore(list(layers), json.dumps(avf_table), n, list(modes), drg, trg))
