"""Brick-wall circuit schedule with periodic boundaries and depth-by-depth evolution."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import channels
from .gates import (
    GateSet,
    RngStream,
    fixed_sqrt_iswap,
    sample_haar_unitary,
    sample_single_qubit_gate,
)
from .negativity import Bipartition, negativity_measures
from .qstate import DensityMatrix, check_num_qubits, init_product_state, state_diagnostics

SQRT_ISWAP = fixed_sqrt_iswap()


class InvariantViolation(AssertionError):
    pass


@dataclass
class CircuitSpec:
    num_qubits: int
    max_depth: int
    error_rate: float = 0.0
    gate_set: GateSet = GateSet.HAAR
    seed: int = 0
    record_every: int = 1
    # stop once log-negativity stays below early_stop * running max for
    # early_stop_patience consecutive recorded depths; ignored when p == 0
    early_stop: float | None = None
    early_stop_patience: int = 4
    noisy_single_qubit_layers: bool = False
    check_invariants: bool = False

    def __post_init__(self):
        self.num_qubits = check_num_qubits(self.num_qubits)
        self.gate_set = GateSet(self.gate_set)
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        channels.NoiseModel(self.error_rate).check()


@dataclass(frozen=True)
class LayerSchedule:
    depth: int
    pairs: tuple[channels.QubitPair, ...]


@dataclass
class SampleTrace:
    """Log-negativity of one circuit realization at the recorded depths."""

    depths: np.ndarray
    log_negativity: np.ndarray
    stopped_early: bool = False
    gates: list = field(default_factory=list, repr=False)


def layer_pairs(depth: int, num_qubits: int) -> LayerSchedule:
    """Odd depths couple (1,2),(3,4),...; even depths (2,3),...,(N-2,N-1),(N,1)."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    n = int(num_qubits)
    if n < 2 or n % 2:
        raise ValueError(f"brick-wall layers need an even number of qubits, got {n}")
    QP = channels.QubitPair
    if depth % 2:
        pairs = tuple(QP(l, l + 1) for l in range(1, n, 2))
    elif n == 2:
        # the (2,3) bonds are empty and the wrap pair is (2,1)
        pairs = (QP(2, 1),)
    else:
        pairs = tuple(QP(l + 1, l + 2) for l in range(1, n - 1, 2)) + (QP(n, 1),)
    return LayerSchedule(depth, pairs)


def evolve_one_depth(
    state: DensityMatrix,
    spec: CircuitSpec,
    depth: int,
    rng: np.random.Generator,
    record: list | None = None,
) -> DensityMatrix:
    """Apply one brick-wall layer; gates drawn from ``rng`` are appended to ``record``."""
    noise = channels.NoiseModel(spec.error_rate)
    if spec.gate_set is GateSet.SQRT_ISWAP:
        for q in range(1, spec.num_qubits + 1):
            g = sample_single_qubit_gate(rng)
            channels.apply_one_qubit_unitary(state, g, q)
            if spec.noisy_single_qubit_layers:
                channels.apply_single_depolarizing(state, noise, q)
            if record is not None:
                record.append((q, g))
    for pair in layer_pairs(depth, spec.num_qubits).pairs:
        if spec.gate_set is GateSet.HAAR:
            g = sample_haar_unitary(rng, 4)
        else:
            g = SQRT_ISWAP
        channels.apply_noisy_gate(state, g, noise, pair)
        if record is not None:
            record.append((pair, g))
    return state


def _check(state: DensityMatrix, depth: int) -> None:
    diag = state_diagnostics(state)
    if not diag.is_valid():
        raise InvariantViolation(f"state invalid after depth {depth}: {diag}")


def run_circuit(
    spec: CircuitSpec,
    rng: RngStream | np.random.Generator | None = None,
    *,
    observer: Callable[[int, DensityMatrix], None] | None = None,
    keep_gates: bool = False,
) -> SampleTrace:
    """Evolve |0..0> through depths 1..max_depth, recording half-chain log-negativity."""
    if rng is None:
        rng = RngStream(spec.seed)
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    state = init_product_state(spec.num_qubits)
    cut = Bipartition.half_chain(spec.num_qubits)
    use_stop = spec.early_stop is not None and spec.error_rate > 0
    depths, values, gates = [], [], []
    running_max, below = 0.0, 0
    stopped = False
    for d in range(1, spec.max_depth + 1):
        evolve_one_depth(state, spec, d, gen, gates if keep_gates else None)
        if spec.check_invariants:
            _check(state, d)
        if observer is not None:
            observer(d, state)
        if d % spec.record_every and d != spec.max_depth:
            continue
        e = negativity_measures(state, cut).log_negativity
        depths.append(d)
        values.append(e)
        running_max = max(running_max, e)
        if use_stop:
            below = below + 1 if running_max > 0 and e < spec.early_stop * running_max else 0
            if below >= spec.early_stop_patience and d < spec.max_depth:
                stopped = True
                break
    return SampleTrace(np.array(depths), np.array(values), stopped, gates)
