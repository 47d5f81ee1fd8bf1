import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gadgetlattice.errors import BoundViolated, InvalidMeasurement, NotLowEnergy, UnsupportedEncoding
from gadgetlattice.gadgets import AncillaState
from gadgetlattice.pauli import Hamiltonian, PauliTerm
from gadgetlattice.verify import (
    Encoding,
    completeness_check,
    dynamics_compare,
    gap_scaling_study,
    gentle_measurement_bound,
    gadget_suite,
    match_indices,
    nogo_demo,
    partition_compare,
    principal_sine,
    random_density,
    run_gadget_suite,
    sample_low_states,
    soundness_check,
    spectral_compare,
    toy_end_to_end,
)

P = PauliTerm


@pytest.fixture(scope="module")
def sub():
    g = gadget_suite()["subdivision"]
    return g, spectral_compare(g.target, g, epsilon=0.1, eta=0.1)


def test_match_indices_single_copy():
    # (i-1) <= j <= i with 1-based j >= 1, shown 0-based
    assert match_indices(3) == [(0, [0]), (1, [0, 1]), (2, [1, 2])]
    assert match_indices(2, 1, 1)[1] == (1, [1, 2, 3])


def test_principal_sine_of_known_angle():
    a = np.array([[1.0], [0.0]])
    b = np.array([[np.cos(0.3)], [np.sin(0.3)]])
    assert principal_sine(a, b) == pytest.approx(np.sin(0.3))
    assert principal_sine(a, a) == pytest.approx(0.0, abs=1e-12)


def test_complex_conjugate_encodings_rejected():
    with pytest.raises(UnsupportedEncoding):
        Encoding.from_state(3, AncillaState.basis(2), p=1, q=1)


def test_spectral_report_of_gadget(sub):
    g, rep = sub
    assert rep.passed
    assert rep.epsilon_hat <= 0.1 and rep.eta_hat <= 0.1
    assert len(rep.pairs) == 2 ** len(g.data_qubits)


def test_spectral_accuracy_improves_with_delta(sub):
    g, rep = sub
    big = g.with_delta(g.delta * 100)
    rep2 = spectral_compare(big.target, big)
    assert rep2.epsilon_hat <= rep.epsilon_hat and rep2.eta_hat <= rep.eta_hat


def test_soundness_and_completeness_on_gadget(sub):
    g, rep = sub
    for w in sample_low_states(rep, 20, seed=1):
        assert soundness_check(g.target, rep, w).passed
    rng = np.random.default_rng(2)
    for _ in range(20):
        assert completeness_check(g.target, rep, random_density(rep.encoding.d, rng)).passed


def test_high_energy_state_is_not_low_energy(sub):
    g, rep = sub
    fake = rep.__class__(rep.pairs, rep.epsilon_hat, rep.eta_hat, 1e-6, rep.tilde_T_error,
                         None, None, rep.method, rep.low, rep.target_eig, rep.encoding)
    w = np.zeros(len(rep.low.values))
    w[-1] = 1
    with pytest.raises(NotLowEnergy):
        soundness_check(g.target, fake, w)


def test_partition_and_dynamics_bounds(sub):
    g, rep = sub
    for beta in (0.1, 1.0, 10.0):
        assert partition_compare(g.target, g, beta, report=rep).passed
    sigma = random_density(rep.encoding.d, np.random.default_rng(0))
    for t in (0.0, 0.5, 2.0):
        assert dynamics_compare(g.target, g, sigma, t, report=rep).passed


def test_gentle_measurement_exact_cases():
    rho = np.diag([1.0, 0.0])
    post, dist, bound = gentle_measurement_bound(rho, np.diag([1.0, 0.0]))
    assert dist == pytest.approx(0) and bound == 0
    rho = np.full((2, 2), 0.5)
    post, dist, bound = gentle_measurement_bound(rho, np.diag([1.0, 0.0]))
    # collapses |+> onto |0>: trace distance sqrt(2) against 2 sqrt(1/2)
    assert dist == pytest.approx(np.sqrt(2)) and bound == pytest.approx(np.sqrt(2))
    with pytest.raises(InvalidMeasurement):
        gentle_measurement_bound(rho, np.diag([2.0, 0.0]))


@given(st.integers(2, 16), st.integers(0, 2 ** 31))
def test_gentle_measurement_never_violated(d, seed):
    rng = np.random.default_rng(seed)
    rho = random_density(d, rng)
    U, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    M = (U * rng.uniform(0.01, 1, size=d)) @ U.conj().T
    M = (M + M.conj().T) / 2
    _, dist, bound = gentle_measurement_bound(rho, M)
    assert dist <= bound + 1e-10


def test_gap_study_slope_and_control():
    st_ = gap_scaling_study(range(4, 10))
    assert st_.passed and -2.2 < st_.slope < -1.8
    assert st_.csv().splitlines()[0] == "n,lambda2,lambda3,gap"

    def flat(n):
        terms = [P(1.0, ())] + [P(-0.5, {k: "Z"}) for k in range(n)] + [P(n / 2, ())]
        return Hamiltonian(n, tuple(terms))
    ctrl = gap_scaling_study(range(4, 9), family=flat, degeneracy=1, assert_slope=False)
    assert abs(ctrl.slope) < 1e-9


def test_nogo_families():
    rows = nogo_demo(range(2, 7))
    assert all(abs(r.correlation - 2 / r.n) < 1e-10 for r in rows)
    assert all(r.c_prime >= 1 / r.n for r in rows)
    assert all(r.correlation == 0 for r in nogo_demo(range(2, 6), "product"))


def test_gadget_suite_rows_pass():
    for row in run_gadget_suite():
        assert row.passed(0.1, 0.1), row


def test_toy_end_to_end():
    res = toy_end_to_end(n_samples=10)
    assert res.n_total <= 16 and res.passed
