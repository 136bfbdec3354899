"""Dense density-matrix storage and state diagnostics.

Basis convention: computational index ``x = sum_i x_i * 2**(i-1)``, so qubit 1
is the least-significant bit. Subsystem A = qubits ``1..N_A`` is therefore the
contiguous low-bit block of the index.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 14


def max_qubits() -> int:
    """Upper bound on N; ``NEGAT_MAX_QUBITS`` overrides the default of 14."""
    env = os.environ.get("NEGAT_MAX_QUBITS")
    return int(env) if env else MAX_QUBITS


def check_num_qubits(num_qubits: int, *, require_even: bool = True) -> int:
    n = int(num_qubits)
    if n != num_qubits:
        raise ValueError(f"num_qubits must be an integer, got {num_qubits!r}")
    limit = max_qubits()
    if not 2 <= n <= limit:
        raise ValueError(f"num_qubits must lie in [2, {limit}], got {n}")
    if require_even and n % 2:
        raise ValueError(f"num_qubits must be even for a half-chain cut, got {n}")
    return n


@dataclass
class DensityMatrix:
    """Mixed state of ``num_qubits`` qubits held as one dense complex128 array.

    Channel operations mutate ``data`` in place; use :meth:`copy` to branch.
    """

    num_qubits: int
    data: np.ndarray

    def __post_init__(self):
        dim = 1 << self.num_qubits
        self.data = np.ascontiguousarray(self.data, dtype=np.complex128)
        if self.data.shape != (dim, dim):
            raise ValueError(
                f"expected a {dim}x{dim} matrix for {self.num_qubits} qubits, "
                f"got shape {self.data.shape}"
            )

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.num_qubits, self.data.copy())

    @classmethod
    def from_array(cls, data) -> "DensityMatrix":
        data = np.asarray(data)
        n = int(round(np.log2(data.shape[0])))
        if data.ndim != 2 or data.shape[0] != 1 << n:
            raise ValueError(f"matrix side must be a power of two, got {data.shape}")
        return cls(n, data)

    @classmethod
    def from_pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=np.complex128).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls.from_array(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, num_qubits: int) -> "DensityMatrix":
        dim = 1 << num_qubits
        return cls(num_qubits, np.eye(dim, dtype=np.complex128) / dim)


@dataclass(frozen=True)
class StateDiagnostics:
    trace_deviation: float
    hermiticity_deviation: float
    min_eigenvalue: float
    purity: float

    def is_valid(self, trace_tol=1e-10, herm_tol=1e-10, psd_floor=-1e-9) -> bool:
        return (
            self.trace_deviation <= trace_tol
            and self.hermiticity_deviation <= herm_tol
            and self.min_eigenvalue >= psd_floor
        )


def init_product_state(num_qubits: int) -> DensityMatrix:
    """Projector onto |0...0>."""
    n = check_num_qubits(num_qubits)
    dim = 1 << n
    data = np.zeros((dim, dim), dtype=np.complex128)
    data[0, 0] = 1.0
    return DensityMatrix(n, data)


def diag_probabilities(state: DensityMatrix) -> np.ndarray:
    """Basis-state probabilities ``q_ii = <i|rho|i>``."""
    return np.real(np.diagonal(state.data)).copy()


def basis_index(bits) -> int:
    """Index of the basis string ``(x_1, ..., x_N)`` with qubit 1 least significant."""
    return sum(int(b) << i for i, b in enumerate(bits))


def basis_bits(index: int, num_qubits: int) -> tuple[int, ...]:
    return tuple((index >> i) & 1 for i in range(num_qubits))


def state_diagnostics(state: DensityMatrix) -> StateDiagnostics:
    rho = state.data
    trace = np.trace(rho)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    # eigvalsh reads one triangle only, so symmetrize first to keep the floor honest
    evals = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    purity = float(np.vdot(rho, rho).real)
    return StateDiagnostics(
        trace_deviation=float(abs(trace - 1.0)),
        hermiticity_deviation=herm,
        min_eigenvalue=float(evals[0]),
        purity=purity,
    )
