import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.stats import poisson

from psqha.fock import (
    Slit,
    check_density,
    coherent_state,
    displacement_blocks,
    embed,
    hermite_functions,
    number_state,
    operator_from_json,
    operator_to_json,
    parity_conjugate,
    projector,
    random_density,
    schatten_norm,
    slit_state,
    translate,
    weyl_operator,
)

coord = st.floats(-3.0, 3.0, allow_nan=False)


def position_element(m, n, q, p):
    """<m|W(q,p)|n> from (W psi)(t) = e^{-iqp/2} e^{ipt} psi(t - q), by quadrature."""
    k = max(m, n) + 1

    def f(t):
        return hermite_functions(k, t)[m] * np.exp(-0.5j * q * p + 1j * p * t) * hermite_functions(k, t - q)[n]

    re = quad(lambda t: f(t).real, -20, 20, limit=400)[0]
    im = quad(lambda t: f(t).imag, -20, 20, limit=400)[0]
    return re + 1j * im


def ladder(N):
    return np.diag(np.sqrt(np.arange(1, N)), 1)


def test_vacuum_element_matches_quadrature():
    assert abs(position_element(0, 0, 2.0, 0.0) - math.exp(-1.0)) < 1e-12
    assert abs(weyl_operator((2.0, 0.0), 64)[0, 0] - math.exp(-1.0)) < 1e-14


@pytest.mark.parametrize("q,p", [(1.1, -0.6), (-0.4, 2.3), (2.5, 1.5)])
def test_matrix_elements_match_position_action(q, p):
    W = weyl_operator((q, p), 5)
    for m in range(5):
        for n in range(5):
            assert abs(W[m, n] - position_element(m, n, q, p)) < 1e-10


def test_matches_matrix_exponential():
    N = 120
    a = ladder(N)
    Q = (a + a.T) / math.sqrt(2)
    P = (a - a.T) / (1j * math.sqrt(2))
    q, p = 0.8, -1.3
    ref = expm(1j * (p * Q - q * P))
    assert np.abs(weyl_operator((q, p), 20) - ref[:20, :20]).max() < 1e-10


def test_origin_is_identity():
    assert np.array_equal(weyl_operator((0.0, 0.0), 7), np.eye(7))


@given(coord, coord, coord, coord)
def test_commutation_phase(q1, p1, q2, p2):
    N = 80
    Wx, Wy = weyl_operator((q1, p1), N), weyl_operator((q2, p2), N)
    sigma = q2 * p1 - q1 * p2
    lhs = (Wx @ Wy)[:8, :8]
    rhs = np.exp(1j * sigma) * (Wy @ Wx)[:8, :8]
    assert np.abs(lhs - rhs).max() < 1e-9


@given(coord, coord)
def test_inverse_is_negative_point(q, p):
    N = 80
    prod = weyl_operator((q, p), N) @ weyl_operator((-q, -p), N)
    assert np.abs(prod[:10, :10] - np.eye(10)).max() < 1e-10
    assert np.array_equal(weyl_operator((-q, -p), 12), weyl_operator((q, p), 12).conj().T)


def test_columns_are_truncated_unit_vectors():
    W = weyl_operator((1.5, 0.5), 40)
    norms = np.linalg.norm(W, axis=0)
    assert np.all(norms <= 1 + 1e-12)
    assert abs(norms[0] - 1) < 1e-12


def test_blocks_agree_with_weyl_operator(rng):
    pts = rng.normal(size=(5, 2)) * 2
    alpha = (pts[:, 0] + 1j * pts[:, 1]) / math.sqrt(2)
    blocks = displacement_blocks(alpha, 9, 6)
    for b, (q, p) in zip(blocks, pts):
        assert np.abs(b - weyl_operator((q, p), 9)[:, :6]).max() < 1e-13


def test_high_cutoff_stays_finite():
    W = weyl_operator((6.0, -4.0), 300)
    assert np.all(np.isfinite(W))
    b = displacement_blocks(np.array([(6.0 - 4.0j) / math.sqrt(2)]), 300, 300)[0]
    assert np.abs(b - W).max() < 1e-10


def test_translate_vacuum_is_poisson():
    q, p = 1.2, -0.7
    T = translate(projector(number_state(0, 1)), (q, p), cutoff=40)
    lam = (q * q + p * p) / 2
    assert np.abs(np.diag(T).real - poisson.pmf(np.arange(40), lam)).max() < 1e-14
    coh = projector(coherent_state((q + 1j * p) / math.sqrt(2), 40))
    assert np.abs(T - coh).max() < 1e-12


def test_translate_identity_and_trace(rng):
    A = random_density(16, 3, levels=8, rng=rng)
    assert np.abs(translate(A, (0.0, 0.0)) - A).max() < 1e-15
    for _ in range(5):
        x = rng.uniform(-3, 3, size=2) / math.sqrt(2)
        assert abs(np.trace(translate(A, x, cutoff=64)) - 1.0) < 1e-6


def test_parity():
    vac = projector(number_state(0, 3))
    assert np.array_equal(parity_conjugate(vac), vac)
    E01 = np.zeros((2, 2))
    E01[0, 1] = 1
    assert np.array_equal(parity_conjugate(E01), -E01)


@given(st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_parity_involution(N, seed):
    r = np.random.default_rng(seed)
    A = r.normal(size=(N, N)) + 1j * r.normal(size=(N, N))
    assert np.array_equal(parity_conjugate(parity_conjugate(A)), A)


def test_schatten_examples():
    vac = projector(number_state(0, 4))
    for p in (1, 1.5, 2, 3, math.inf):
        assert abs(schatten_norm(vac, p) - 1) < 1e-15
    assert abs(schatten_norm(np.diag([3.0, 4.0]), 2) - 5) < 1e-15
    with pytest.raises(ValueError):
        schatten_norm(vac, 0.5)


@given(st.integers(0, 2**31 - 1))
def test_schatten_decreasing_in_p(seed):
    r = np.random.default_rng(seed)
    A = r.normal(size=(5, 5)) + 1j * r.normal(size=(5, 5))
    vals = [schatten_norm(A, p) for p in (1, 1.5, 2, 4, math.inf)]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_states():
    assert np.array_equal(number_state(0, 4), np.array([1, 0, 0, 0], dtype=complex))
    assert np.array_equal(coherent_state(0, 5), number_state(0, 5))
    with pytest.raises(ValueError):
        number_state(4, 4)


def test_check_density_rejects():
    with pytest.raises(ValueError):
        check_density(np.diag([0.5, 0.6]))
    with pytest.raises(ValueError):
        check_density(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        check_density(np.array([[0.5, 0.1], [0.0, 0.5]]))
    check_density(random_density(6, 2, rng=1))


def test_operator_json_round_trip(rng):
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.array_equal(operator_from_json(operator_to_json(A)), A)
    assert np.array_equal(embed(A, 6)[:4, :4], A)


def test_slit_transform_matches_position_integral():
    a = 1.0
    s = Slit(a)
    for q, p in [(0.3, 1.7), (-1.2, -0.4), (1.9, 5.0), (2.5, 1.0)]:
        # <phi|W(q,p)|phi> = (1/2a) \int_{[-a,a] n [q-a,q+a]} e^{-iqp/2} e^{ipt} dt
        lo, hi = max(-a, q - a), min(a, q + a)
        if hi <= lo:
            ref = 0.0
        else:
            ref = (quad(lambda t: np.cos(p * t - q * p / 2), lo, hi)[0]
                   + 1j * quad(lambda t: np.sin(p * t - q * p / 2), lo, hi)[0]) / (2 * a)
        assert abs(s.weyl_transform(q, p) - ref) < 1e-12
    assert s.strip_edge == 2.0


def test_slit_overlaps_match_quadrature():
    a = 1.0
    s = Slit(a)
    qs, ps = np.array([0.0, 0.7, -2.5]), np.array([0.0, -0.3, 4.0])
    u = s.displaced_overlaps(qs, ps, 8)
    for i, q in enumerate(qs):
        for j, p in enumerate(ps):
            for n in range(8):
                def f(t):
                    return hermite_functions(n + 1, t)[n] * np.exp(-0.5j * q * p + 1j * p * t) / math.sqrt(2 * a)

                ref = quad(lambda t: f(t).real, q - a, q + a)[0] + 1j * quad(lambda t: f(t).imag, q - a, q + a)[0]
                assert abs(u[i, j, n] - ref) < 1e-12


def test_slit_state_coefficients():
    c = slit_state(1.0, 40)
    raw = np.array([quad(lambda t: hermite_functions(n + 1, t)[n], -1, 1)[0] / math.sqrt(2) for n in range(40)])
    assert np.abs(c - raw / np.linalg.norm(raw)).max() < 1e-9
    # odd Hermite functions integrate to zero over a symmetric slit
    assert np.abs(c[1::2]).max() < 1e-12
