import itertools

import numpy as np
import pytest

from negat.gates import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z
from negat.qstate import DensityMatrix


def random_density_matrix(num_qubits, rng, rank=None):
    """Ginibre-ensemble mixed state: G G^dag / Tr."""
    dim = 2**num_qubits
    rank = rank or dim
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return DensityMatrix(num_qubits, rho / np.trace(rho))


def embed_two_qubit(u, pair, num_qubits):
    """Dense 2^N x 2^N operator with ``u`` on ``pair`` built entry by entry.

    Independent of the kernels: loops over basis pairs, checks the spectator
    bits agree, and reads the 4x4 entry at (2 x'_a + x'_b, 2 x_a + x_b).
    """
    a, b = pair
    dim = 2**num_qubits
    full = np.zeros((dim, dim), dtype=complex)
    others = [q for q in range(1, num_qubits + 1) if q not in pair]
    bit = lambda x, q: (x >> (q - 1)) & 1
    for xo, xi in itertools.product(range(dim), repeat=2):
        if any(bit(xo, q) != bit(xi, q) for q in others):
            continue
        full[xo, xi] = u[2 * bit(xo, a) + bit(xo, b), 2 * bit(xi, a) + bit(xi, b)]
    return full


def embed_one_qubit(u, qubit, num_qubits):
    """Kronecker product with qubit N as the leftmost factor."""
    ops = [u if q == qubit else np.eye(2) for q in range(num_qubits, 0, -1)]
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


def pauli_sum_oracle(rho, p, pair, num_qubits):
    """(1-p) rho + p/15 sum_{W != II} W rho W with dense embedded Paulis."""
    acc = (1 - p) * rho
    for l1, l2 in itertools.product("IXYZ", repeat=2):
        if l1 == l2 == "I":
            continue
        w = embed_two_qubit(np.kron(PAULIS[l1], PAULIS[l2]), pair, num_qubits)
        acc = acc + p / 15 * (w @ rho @ w.conj().T)
    return acc


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Records one PASS/FAIL line per acceptance criterion and echoes it."""

    def record(tag, ok, detail):
        status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
        line = f"criterion {tag:<8} {status:<5} {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
