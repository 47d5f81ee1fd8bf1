import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gadgetlattice.errors import GammaTooSmall, InvalidGamma
from gadgetlattice.pauli import PauliTerm, dense
from gadgetlattice.wstate import (
    WChainSpec,
    build_hw,
    build_hw0,
    compute_constants,
    correlation_through_chain,
    delta_overlap_bruteforce,
    delta_overlap_exact,
    gap_estimate,
    hw0_gap_exact,
    martingale_exponent,
    martingale_gap_bound,
    measure_gap,
    pair_projector,
    product_chain,
    w_state,
    zero_state,
)


def test_pair_projector_matrix():
    # |11><11| + singlet projector, written out by hand
    P = np.array([[0, 0, 0, 0], [0, .5, -.5, 0], [0, -.5, .5, 0], [0, 0, 0, 1]])
    assert np.allclose(dense(pair_projector(0, 1, 2)), P)


@pytest.mark.parametrize("n", range(2, 9))
def test_uncle_ground_space(n):
    M = dense(build_hw0(n))
    w, v = np.linalg.eigh(M)
    assert np.sum(np.abs(w) < 1e-10) == 2
    for psi in (zero_state(n), w_state(n)):
        assert np.linalg.norm(M @ psi) < 1e-12


@pytest.mark.parametrize("n", range(3, 10))
def test_uncle_gap_closed_form(n):
    # one-particle hopping band: 1 - cos(pi k / n), lowest nonzero at k = 1
    assert measure_gap(build_hw0(n), 3)[2] == pytest.approx(1 - math.cos(math.pi / n), abs=1e-10)
    assert hw0_gap_exact(n) == pytest.approx(1 - math.cos(math.pi / n))


@pytest.mark.parametrize("n", range(2, 9))
def test_chain_with_policy_gamma_has_w_ground_state(n):
    M = dense(build_hw(WChainSpec.for_length(n)))
    w, v = np.linalg.eigh(M)
    # the gap equals 1 exactly (the |0...0> level); allow round-off only
    assert abs(w[0]) < 1e-9 and w[1] - w[0] >= 1 - 1e-12
    assert abs(v[:, 0] @ w_state(n)) ** 2 >= 1 - 1e-10


def test_two_site_constants_closed_form():
    # Gamma = 10: the only excited two-particle mode has energy 10*1 - 1 = 9
    spec = WChainSpec.for_length(2)
    assert spec.gamma_coupling == 10
    k = compute_constants(spec, 1, 2)
    assert k.C == pytest.approx(10 / 9, abs=1e-12)
    assert k.D == pytest.approx(10 / 9, abs=1e-12)


@pytest.mark.parametrize("n", range(2, 11))
def test_constant_bounds(n):
    k = compute_constants(WChainSpec.for_length(n), 1, n)
    assert k.C >= 1 / n
    assert k.D <= 2


@pytest.mark.parametrize("n", [3, 5, 8])
def test_constant_methods_agree(n):
    spec = WChainSpec.for_length(n)
    a = compute_constants(spec, 1, n, "dense")
    b = compute_constants(spec, 1, n, "sector")
    c = compute_constants(spec, 1, n, "fermion")
    for x, y in ((a, b), (a, c)):
        assert x.C == pytest.approx(y.C, rel=1e-9)
        assert x.D == pytest.approx(y.D, rel=1e-9)


def test_small_gamma_rejected():
    with pytest.raises(GammaTooSmall):
        WChainSpec(4, 1.0, gap_estimate(4))


@pytest.mark.parametrize("n", range(2, 10))
def test_correlation_two_over_n(n):
    H = build_hw(WChainSpec.for_length(n))
    c = correlation_through_chain(H, PauliTerm(1.0, {0: "X"}), PauliTerm(1.0, {n - 1: "X"}))
    assert c == pytest.approx(2 / n, abs=1e-10)


def test_product_chain_is_uncorrelated():
    H = product_chain(5)
    assert correlation_through_chain(H, PauliTerm(1.0, {0: "X"}), PauliTerm(1.0, {4: "X"})) == 0


@pytest.mark.parametrize("gamma", [0.5, 0.552, 0.6, 0.75, 0.9])
@pytest.mark.parametrize("m", range(4, 9))
def test_overlap_closed_form_matches_matrices(m, gamma):
    try:
        rep = delta_overlap_exact(m, gamma)
    except Exception:
        pytest.skip("degenerate split")
    brute = delta_overlap_bruteforce(m, rep.a, rep.b)
    assert rep.delta_AB == pytest.approx(brute, abs=1e-9)
    assert rep.delta_AB <= 5 * (1 - gamma) / (1 + gamma) + 2 / m


def test_martingale_exponent_near_published_value():
    assert martingale_exponent(0.552) == pytest.approx(-6.13, abs=0.01)


def test_martingale_bound_below_true_gap():
    for n in (5, 8, 12):
        assert martingale_gap_bound(n, 0.75, "exact") <= hw0_gap_exact(n)
    with pytest.raises(InvalidGamma):
        martingale_gap_bound(8, 0.7, "crude")


@given(st.integers(1, 12))
def test_w_state_normalized_weight_one(n):
    v = w_state(n)
    assert np.isclose(v @ v, 1)
    support = np.nonzero(v)[0]
    assert all(bin(int(i)).count("1") == 1 for i in support)
