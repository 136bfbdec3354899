"""Gate sampling: Haar-random unitaries and the sqrt(iSWAP) + random single-qubit set."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

SQRT2 = np.sqrt(2.0)

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


class GateSet(str, enum.Enum):
    HAAR = "haar"
    SQRT_ISWAP = "sqrt_iswap"


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by ``(seed, stream)``.

    ``stream`` is mixed into numpy's SeedSequence as a spawn key, so streams
    that share a master seed are statistically independent.
    """

    seed: int
    stream: tuple[int, ...] = ()
    algorithm: str = "PCG64"

    def generator(self) -> np.random.Generator:
        if self.algorithm != "PCG64":
            raise ValueError(f"unsupported bit generator {self.algorithm!r}")
        ss = np.random.SeedSequence(int(self.seed) & (2**64 - 1), spawn_key=tuple(self.stream))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *key: int) -> "RngStream":
        return RngStream(self.seed, tuple(self.stream) + tuple(int(k) for k in key), self.algorithm)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return np.random.default_rng(rng)


def sample_haar_unitary(rng, dim: int = 4) -> np.ndarray:
    """Haar-distributed ``dim x dim`` unitary via Gaussian QR with phase fix.

    Columns of Q are rescaled by the phases of diag(R); without this the QR
    gauge makes the distribution non-uniform.
    """
    if dim not in (2, 4):
        raise ValueError(f"dim must be 2 or 4, got {dim}")
    gen = _as_generator(rng)
    while True:
        z = (gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))) / SQRT2
        q, r = np.linalg.qr(z)
        diag = np.diagonal(r)
        if np.min(np.abs(diag)) > 1e-12:
            break
    return q * (diag / np.abs(diag))


def fixed_sqrt_iswap() -> np.ndarray:
    s = 1 / SQRT2
    return np.array(
        [
            [1, 0, 0, 0],
            [0, s, 1j * s, 0],
            [0, 1j * s, s, 0],
            [0, 0, 0, 1],
        ],
        dtype=np.complex128,
    )


def _half_turn(axis: np.ndarray) -> np.ndarray:
    # exp(-i pi/4 n.sigma) for a unit Pauli combination n.sigma
    return np.cos(np.pi / 4) * PAULI_I - 1j * np.sin(np.pi / 4) * axis


SQRT_X = _half_turn(PAULI_X)
SQRT_Y = _half_turn(PAULI_Y)
SQRT_XY = _half_turn((PAULI_X + PAULI_Y) / SQRT2)
SINGLE_QUBIT_GATES = (SQRT_X, SQRT_Y, SQRT_XY)


def sample_single_qubit_gate(rng) -> np.ndarray:
    """Uniform draw from {sqrt(X), sqrt(Y), sqrt(X+Y)}."""
    gen = _as_generator(rng)
    return SINGLE_QUBIT_GATES[int(gen.integers(3))]


def is_unitary(u: np.ndarray, atol: float = 1e-12) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= atol)
