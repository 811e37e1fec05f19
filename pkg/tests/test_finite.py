import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from psqha.finite import (
    FiniteOp,
    check_equivalences,
    finite_convolve,
    finite_parity,
    finite_weyl,
    finite_weyl_transform,
    injectivity_defect,
    product_weyl,
    random_finite_state,
    regularity_rank,
)

dims = st.integers(2, 6)


def loop_weyl(d, a, b):
    """Entry-by-entry clock-and-shift: W[k+a, k] = phase * w^(b k)."""
    w = np.exp(2j * np.pi / d)
    M = np.zeros((d, d), dtype=complex)
    for k in range(d):
        M[(k + a) % d, k] = w ** (b * k)
    if d % 2:
        M *= w ** (-(a * b * (d + 1) // 2))
    return M


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_weyl_matches_loop_construction(d):
    for a, b in itertools.product(range(d), repeat=2):
        assert np.abs(finite_weyl(d, a, b) - loop_weyl(d, a, b)).max() < 1e-12


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_weyl_basis_properties(d):
    assert np.array_equal(finite_weyl(d, 0, 0), np.eye(d))
    ops = [finite_weyl(d, a, b) for a, b in itertools.product(range(d), repeat=2)]
    for i, A in enumerate(ops):
        assert np.abs(A @ A.conj().T - np.eye(d)).max() < 1e-12
        assert abs(np.trace(A) - (d if i == 0 else 0)) < 1e-12
        for j, B in enumerate(ops):
            assert abs(np.trace(A.conj().T @ B) - (d if i == j else 0)) < 1e-10


def test_weyl_index_range():
    with pytest.raises(IndexError):
        finite_weyl(3, 3, 0)
    with pytest.raises(ValueError):
        finite_weyl(1, 0, 0)


@given(dims, st.integers(0, 2**31 - 1))
def test_parseval(d, seed):
    T = random_finite_state(d, "random-mixed", seed)
    table = finite_weyl_transform(T).values
    assert abs((np.abs(table) ** 2).sum() - d * (np.abs(T) ** 2).sum()) < 1e-10


@given(dims, st.integers(0, 2**31 - 1))
def test_defect_is_zero_count(d, seed):
    T = random_finite_state(d, "basis", seed)
    table = finite_weyl_transform(T)
    nonzero = d * d - len(table.zero_set())
    assert injectivity_defect(T) == d * d - nonzero


def test_maximally_mixed():
    for d in (2, 3, 5):
        T = np.eye(d) / d
        table = finite_weyl_transform(T).values
        ref = np.zeros((d, d))
        ref[0, 0] = 1
        assert np.abs(table - ref).max() < 1e-12
        assert regularity_rank(T) == 1
        assert injectivity_defect(T) == d * d - 1
        rep = check_equivalences(T)
        assert rep["ok"] and not rep["zero_set_empty"] and not rep["full_rank"] and not rep["injective"]


def test_qubit_basis_state():
    T = np.diag([1.0, 0.0])
    assert sorted(finite_weyl_transform(T).zero_set()) == [(1, 0), (1, 1)]
    assert regularity_rank(T) == 2
    rep = check_equivalences(T)
    assert rep["ok"] and rep["injectivity_defect"] == 2
    A = FiniteOp.from_json(rep["witness"]["op"]).entries
    assert np.abs(A).max() > 0
    assert np.abs(finite_convolve(A, T)).max() < 1e-12


def test_generic_pure_states(rng):
    T = random_finite_state(3, "random-pure", rng)
    assert finite_weyl_transform(T).zero_set() == []
    assert regularity_rank(random_finite_state(4, "random-pure", rng)) == 16
    assert injectivity_defect(random_finite_state(4, "random-mixed", rng)) == 0


def test_rank_by_explicit_translates():
    T = random_finite_state(3, "basis", 0)
    rows = [(finite_weyl(3, a, b) @ T @ finite_weyl(3, a, b).conj().T).ravel() for a, b in itertools.product(range(3), repeat=2)]
    assert regularity_rank(T) == np.linalg.matrix_rank(np.array(rows), tol=1e-10)


def test_convolution_matches_definition(rng):
    d = 3
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    B = random_finite_state(d, "random-mixed", rng)
    out = finite_convolve(A, B)
    Bm = finite_parity(B)
    for a, b in itertools.product(range(d), repeat=2):
        W = finite_weyl(d, a, b)
        assert abs(out[a, b] - np.trace(A @ W @ Bm @ W.conj().T) / d) < 1e-12
    # transform of the convolution factorizes into the two transforms
    ta = finite_weyl_transform(A).values
    tb = finite_weyl_transform(B).values
    conv_hat = np.zeros((d, d), dtype=complex)
    w = np.exp(2j * np.pi / d)
    for a, b in itertools.product(range(d), repeat=2):
        for x, y in itertools.product(range(d), repeat=2):
            conv_hat[a, b] += out[x, y] * w ** (-(a * y - x * b)) / d
    assert np.allclose(np.abs(conv_hat), np.abs(ta * tb) / d, atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_equivalences_random(d):
    rng = np.random.default_rng(d)
    for kind in ("random-mixed", "random-pure", "basis", "maximally-mixed"):
        for _ in range(25):
            rep = check_equivalences(random_finite_state(d, kind, rng))
            assert rep["agree"] and rep["ok"]


def test_product_weyl():
    W = product_weyl(2, 3, (1, 0), (2, 1))
    assert np.abs(W - np.kron(finite_weyl(2, 1, 0), finite_weyl(3, 2, 1))).max() == 0
    assert np.abs(W @ W.conj().T - np.eye(6)).max() < 1e-12


def test_finite_op_validation():
    with pytest.raises(ValueError):
        FiniteOp(3, np.eye(2))
    with pytest.raises(ValueError):
        random_finite_state(3, "unknown")
    op = FiniteOp(2, np.eye(2) / 2)
    assert np.array_equal(FiniteOp.from_json(op.to_json()).entries, op.entries)
