import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_density_matrix
from negat.channels import apply_two_qubit_unitary
from negat.gates import sample_haar_unitary
from negat.negativity import (
    Bipartition,
    NegativityError,
    bell_state,
    hermitian_eigenvalues,
    negativity_from_spectrum,
    negativity_measures,
    partial_transpose,
    werner_state,
)
from negat.qstate import DensityMatrix


def test_pt_involution(rng):
    s = random_density_matrix(4, rng)
    cut = Bipartition(4, 2)
    once = DensityMatrix(4, partial_transpose(s, cut))
    np.testing.assert_array_equal(partial_transpose(once, cut), s.data)


def test_pt_index_rule(rng):
    # entry (r_A r_B, c_A c_B) moves to (c_A r_B, r_A c_B); A = low bits
    s = random_density_matrix(3, rng)
    cut = Bipartition(3, 1)
    pt = partial_transpose(s, cut)
    for r in range(8):
        for c in range(8):
            ra, rb, ca, cb = r & 1, r >> 1, c & 1, c >> 1
            assert pt[ca | (rb << 1), ra | (cb << 1)] == s.data[r, c]


def test_pt_product_state(rng):
    rho_a = random_density_matrix(2, rng).data
    rho_b = random_density_matrix(1, rng).data
    # A = low bits, so the Kronecker order is (B, A)
    s = DensityMatrix(3, np.kron(rho_b, rho_a))
    pt = partial_transpose(s, Bipartition(3, 2))
    np.testing.assert_allclose(pt, np.kron(rho_b, rho_a.T), atol=1e-15)
    assert np.linalg.eigvalsh(pt)[0] >= -1e-12


def test_pt_bell_spectrum():
    pt = partial_transpose(bell_state(), Bipartition(2, 1))
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]) / 2
    np.testing.assert_allclose(pt, swap, atol=1e-15)
    np.testing.assert_allclose(np.linalg.eigvalsh(pt), [-0.5, 0.5, 0.5, 0.5], atol=1e-15)


def test_pt_hermitian_unit_trace(rng):
    s = random_density_matrix(4, rng)
    pt = partial_transpose(s, Bipartition(4, 2))
    assert np.max(np.abs(pt - pt.conj().T)) <= 1e-15
    assert np.trace(pt) == pytest.approx(1, abs=1e-12)


def test_bell_negativity():
    r = negativity_measures(bell_state())
    assert r.negativity == pytest.approx(0.5, abs=1e-10)
    assert r.log_negativity == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("w", [0.0, 0.2, 1 / 3, 0.5, 0.8, 1.0])
def test_werner_negativity(w):
    # brute-force 4x4 diagonalization of the explicit PT matrix
    rho = werner_state(w).data
    pt = rho.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
    evals = np.linalg.eigvalsh(pt)
    expected_n = -evals[evals < 0].sum()
    r = negativity_measures(werner_state(w))
    assert r.negativity == pytest.approx(expected_n, abs=1e-12)
    assert r.negativity == pytest.approx(max(0.0, (3 * w - 1) / 4), abs=1e-12)
    assert r.log_negativity == pytest.approx(np.log2(2 * r.negativity + 1), abs=1e-12)


def test_werner_half():
    r = negativity_measures(werner_state(0.5))
    assert r.negativity == pytest.approx(0.125, abs=1e-10)
    assert r.log_negativity == pytest.approx(np.log2(1.25), abs=1e-10)


def test_product_states_zero(rng):
    for n in (2, 4, 6):
        psi = np.array([1.0 + 0j])
        for _ in range(n):
            v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            psi = np.kron(psi, v / np.linalg.norm(v))
        for n_a in range(1, n):
            r = negativity_measures(DensityMatrix.from_pure(psi), Bipartition(n, n_a))
            assert abs(r.negativity) <= 1e-10
            assert abs(r.log_negativity) <= 1e-10


def test_swap_symmetry(rng):
    s = random_density_matrix(4, rng, rank=2)
    apply_two_qubit_unitary(s, sample_haar_unitary(rng, 4), (2, 3))
    cut = Bipartition(4, 2)
    a = negativity_from_spectrum(np.linalg.eigvalsh(partial_transpose(s, cut, "A")))
    b = negativity_from_spectrum(np.linalg.eigvalsh(partial_transpose(s, cut, "B")))
    assert a.negativity == pytest.approx(b.negativity, abs=1e-10)


def test_trace_norm_at_least_one(rng):
    for _ in range(10):
        s = random_density_matrix(4, rng, rank=1)
        evals = np.linalg.eigvalsh(partial_transpose(s, Bipartition(4, 2)))
        assert np.abs(evals).sum() >= 1 - 1e-12
        assert evals.sum() == pytest.approx(1, abs=1e-10)


def test_pure_state_half_chain_bounded(rng):
    psi = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    r = negativity_measures(DensityMatrix.from_pure(psi))
    assert 0 < r.log_negativity <= 3 + 1e-12


def test_unnormalized_state_diagnosed():
    s = DensityMatrix(2, 2 * bell_state().data)
    with pytest.raises(NegativityError) as info:
        negativity_measures(s)
    assert info.value.residual > 0


def test_cut_validation():
    with pytest.raises(ValueError):
        Bipartition(4, 0)
    with pytest.raises(ValueError):
        negativity_measures(bell_state(), Bipartition(4, 2))


@pytest.mark.parametrize("backend", ["scipy", "numpy", "auto"])
def test_backends_agree(rng, backend):
    s = random_density_matrix(8, rng, rank=3)
    pt = partial_transpose(s, Bipartition(8, 4))
    ref = np.linalg.eigvalsh(pt)
    np.testing.assert_allclose(hermitian_eigenvalues(pt, backend), ref, atol=1e-12)


def test_torch_backend(rng):
    pytest.importorskip("torch")
    s = random_density_matrix(8, rng, rank=3)
    pt = partial_transpose(s, Bipartition(8, 4))
    np.testing.assert_allclose(hermitian_eigenvalues(pt, "torch"), np.linalg.eigvalsh(pt), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=2, max_value=5).flatmap(
        lambda n: st.tuples(st.just(n), st.integers(1, n - 1), st.integers(1, 2**n), st.integers(0, 2**32 - 1))
    )
)
def test_negativity_properties(case):
    n, n_a, rank, seed = case
    s = random_density_matrix(n, np.random.default_rng(seed), rank=rank)
    cut = Bipartition(n, n_a)
    pt = partial_transpose(s, cut)
    np.testing.assert_array_equal(partial_transpose(DensityMatrix(n, pt), cut), s.data)
    r = negativity_measures(s, cut)
    assert r.negativity >= 0 and r.log_negativity >= 0
    # log-negativity never exceeds log2 of the smaller side's dimension
    assert r.log_negativity <= min(n_a, n - n_a) + 1e-10
    other = negativity_from_spectrum(np.linalg.eigvalsh(partial_transpose(s, cut, "B")))
    assert other.negativity == pytest.approx(r.negativity, abs=1e-10)
