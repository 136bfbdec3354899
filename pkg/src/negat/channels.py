"""Unitary conjugation and depolarizing noise on dense density matrices.

Every operation updates ``state.data`` in place with one O(4^N) sweep. Rows are
processed in groups that differ only in the target bits; each group is mixed by
the gate, then each row is mixed column-wise by the conjugate gate. Scratch
memory is a (4, 2^N) row buffer.

The two-qubit depolarizing channel is applied through its twirl form

    W(rho) = (1 - q) rho + q * (I/4 (x) Tr_pair rho),    q = 16 p / 15,

which equals the 15-term Pauli sum (kept in :func:`apply_depolarizing_pauli_sum`
as a reference path). The pair trace of a 4x4 block is unitarily invariant, so
gate and noise fuse into one pass and commute.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numba import njit

from .gates import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z
from .qstate import DensityMatrix


class QubitPair(NamedTuple):
    """Ordered 1-based qubit pair; ``a`` is the first tensor factor of a 4x4 gate."""

    a: int
    b: int


class NoiseModel(NamedTuple):
    error_rate: float = 0.0

    def check(self) -> "NoiseModel":
        p = float(self.error_rate)
        if not 0.0 <= p <= 1.0 or np.isnan(p):
            raise ValueError(f"error rate must lie in [0, 1], got {self.error_rate!r}")
        return self


def _bit(state: DensityMatrix, qubit: int) -> int:
    if not 1 <= qubit <= state.num_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.num_qubits} qubits")
    return 1 << (qubit - 1)


def _pair_bits(state: DensityMatrix, pair) -> tuple[int, int]:
    a, b = pair
    if a == b:
        raise ValueError(f"qubit pair must be distinct, got {pair}")
    return _bit(state, a), _bit(state, b)


def _noise_weight(noise) -> float:
    if isinstance(noise, NoiseModel):
        return noise.check().error_rate
    return NoiseModel(float(noise)).check().error_rate


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True, nogil=True)
def _bases(dim, mask, count):
    out = np.empty(count, np.int64)
    k = 0
    for x in range(dim):
        if (x & mask) == 0:
            out[k] = x
            k += 1
    return out


@njit(cache=True, nogil=True, fastmath=True)
def _pair_kernel(rho, u, sa, sb, keep, mix):
    # rho <- keep * U B U^dag + mix * Tr(B) I  on every 4x4 pair block B
    dim = rho.shape[0]
    nb = dim >> 2
    bases = _bases(dim, sa | sb, nb)
    off0 = 0
    off1 = sb
    off2 = sa
    off3 = sa + sb
    uc = np.conj(u) * keep
    rows = np.empty((4, dim), np.complex128)
    traces = np.empty(nb, np.complex128)
    for ir in range(nb):
        r0 = bases[ir]
        a0 = rho[r0 + off0]
        a1 = rho[r0 + off1]
        a2 = rho[r0 + off2]
        a3 = rho[r0 + off3]
        if mix != 0.0:
            for ic in range(nb):
                c0 = bases[ic]
                traces[ic] = a0[c0 + off0] + a1[c0 + off1] + a2[c0 + off2] + a3[c0 + off3]
        for i in range(4):
            g0 = u[i, 0]
            g1 = u[i, 1]
            g2 = u[i, 2]
            g3 = u[i, 3]
            out = rows[i]
            for c in range(dim):
                out[c] = g0 * a0[c] + g1 * a1[c] + g2 * a2[c] + g3 * a3[c]
        for i in range(4):
            src = rows[i]
            dst = rho[r0 + (off0, off1, off2, off3)[i]]
            for ic in range(nb):
                c0 = bases[ic]
                b0 = src[c0 + off0]
                b1 = src[c0 + off1]
                b2 = src[c0 + off2]
                b3 = src[c0 + off3]
                dst[c0 + off0] = b0 * uc[0, 0] + b1 * uc[0, 1] + b2 * uc[0, 2] + b3 * uc[0, 3]
                dst[c0 + off1] = b0 * uc[1, 0] + b1 * uc[1, 1] + b2 * uc[1, 2] + b3 * uc[1, 3]
                dst[c0 + off2] = b0 * uc[2, 0] + b1 * uc[2, 1] + b2 * uc[2, 2] + b3 * uc[2, 3]
                dst[c0 + off3] = b0 * uc[3, 0] + b1 * uc[3, 1] + b2 * uc[3, 2] + b3 * uc[3, 3]
            if mix != 0.0:
                oi = (off0, off1, off2, off3)[i]
                for ic in range(nb):
                    dst[bases[ic] + oi] += mix * traces[ic]


@njit(cache=True, nogil=True, fastmath=True)
def _single_kernel(rho, u, s, keep, mix):
    # rho <- keep * U B U^dag + mix * Tr(B) I  on every 2x2 single-qubit block B
    dim = rho.shape[0]
    nb = dim >> 1
    bases = _bases(dim, s, nb)
    uc = np.conj(u) * keep
    rows = np.empty((2, dim), np.complex128)
    traces = np.empty(nb, np.complex128)
    for ir in range(nb):
        r0 = bases[ir]
        a0 = rho[r0]
        a1 = rho[r0 + s]
        if mix != 0.0:
            for ic in range(nb):
                c0 = bases[ic]
                traces[ic] = a0[c0] + a1[c0 + s]
        for i in range(2):
            g0 = u[i, 0]
            g1 = u[i, 1]
            out = rows[i]
            for c in range(dim):
                out[c] = g0 * a0[c] + g1 * a1[c]
        for i in range(2):
            src = rows[i]
            dst = rho[r0 + i * s]
            for ic in range(nb):
                c0 = bases[ic]
                b0 = src[c0]
                b1 = src[c0 + s]
                dst[c0] = b0 * uc[0, 0] + b1 * uc[0, 1]
                dst[c0 + s] = b0 * uc[1, 0] + b1 * uc[1, 1]
            if mix != 0.0:
                for ic in range(nb):
                    dst[bases[ic] + i * s] += mix * traces[ic]


_EYE4 = np.eye(4, dtype=np.complex128)
_EYE2 = np.eye(2, dtype=np.complex128)


def _gate(gate, dim) -> np.ndarray:
    u = np.ascontiguousarray(gate, dtype=np.complex128)
    if u.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} gate, got shape {u.shape}")
    return u


# ---------------------------------------------------------------------------
# public operations


def apply_two_qubit_unitary(state: DensityMatrix, gate, pair) -> DensityMatrix:
    """rho <- U rho U^dag with the 4x4 ``gate`` acting on qubits ``pair = (a, b)``."""
    sa, sb = _pair_bits(state, pair)
    _pair_kernel(state.data, _gate(gate, 4), sa, sb, 1.0, 0.0)
    return state


def apply_one_qubit_unitary(state: DensityMatrix, gate, qubit: int) -> DensityMatrix:
    s = _bit(state, qubit)
    _single_kernel(state.data, _gate(gate, 2), s, 1.0, 0.0)
    return state


def apply_depolarizing(state: DensityMatrix, noise, pair) -> DensityMatrix:
    """Two-qubit depolarizing channel with error rate p on ``pair``."""
    p = _noise_weight(noise)
    sa, sb = _pair_bits(state, pair)
    if p == 0.0:
        return state
    q = 16.0 * p / 15.0
    _pair_kernel(state.data, _EYE4, sa, sb, 1.0 - q, q / 4.0)
    return state


def apply_noisy_gate(state: DensityMatrix, gate, noise, pair) -> DensityMatrix:
    """Gate followed by depolarizing noise on the same pair, fused in one sweep."""
    p = _noise_weight(noise)
    sa, sb = _pair_bits(state, pair)
    q = 16.0 * p / 15.0
    _pair_kernel(state.data, _gate(gate, 4), sa, sb, 1.0 - q, q / 4.0)
    return state


def apply_single_depolarizing(state: DensityMatrix, noise, qubit: int) -> DensityMatrix:
    """One-qubit depolarizing ``(1-p) rho + p/3 sum_P P rho P``; only used when
    noise is enabled on the single-qubit layers of the sqrt(iSWAP) gate set."""
    p = _noise_weight(noise)
    s = _bit(state, qubit)
    if p == 0.0:
        return state
    q = 4.0 * p / 3.0
    _single_kernel(state.data, _EYE2, s, 1.0 - q, q / 2.0)
    return state


# ---------------------------------------------------------------------------
# reference path

PAULIS_2Q = tuple(
    np.kron(p1, p2)
    for p1 in (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)
    for p2 in (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)
)[1:]


def apply_depolarizing_pauli_sum(state: DensityMatrix, noise, pair) -> DensityMatrix:
    """``(1-p) rho + p/15 sum_W W rho W`` evaluated term by term (slow reference)."""
    p = _noise_weight(noise)
    _pair_bits(state, pair)
    acc = (1.0 - p) * state.data
    for w in PAULIS_2Q:
        term = state.copy()
        apply_two_qubit_unitary(term, w, pair)
        acc += (p / 15.0) * term.data
    state.data[...] = acc
    return state
