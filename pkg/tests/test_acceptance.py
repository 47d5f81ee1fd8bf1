"""Acceptance suite: one test per criterion.

Each test prints nothing itself; ``conftest.py`` prints one PASS/FAIL line per
criterion at the end of the session. Run directly with
``python3 tests/test_acceptance.py`` or through ``pytest``.
"""
import itertools
import sys
import time

import numpy as np
import pytest

from gadgetlattice.codes import build_code_hamiltonian, builtin
from gadgetlattice.compiler import (BUILTIN_INSTANCES, compile_hamiltonian,
                                    random_sparse_hamiltonian, write_artifacts)
from gadgetlattice.config import default_policy
from gadgetlattice.gadgets import residual_check
from gadgetlattice.pauli import graph_stats, neighbour_degree, realize
from gadgetlattice.verify import (calibrate_gadget_constants, gap_scaling_study, gentle_trials,
                                  gadget_suite, nogo_demo, physical_checks, run_gadget_suite,
                                  toy_end_to_end)
from gadgetlattice.wstate import (WChainSpec, build_hw, build_hw0, compute_constants,
                                  delta_overlap_bruteforce, delta_overlap_exact)

EPS = np.finfo(float).eps


def basis_zero(n):
    v = np.zeros(1 << n)
    v[0] = 1.0
    return v


def basis_w(n):
    # qubit 0 is the most significant bit; W is symmetric so the order is irrelevant
    v = np.zeros(1 << n)
    for k in range(n):
        v[1 << k] = 1.0
    return v / np.sqrt(n)


def test_criterion_01_w_chain_ground_space():
    """W-chain ground space for n = 2..12."""
    t0 = time.perf_counter()
    for n in range(2, 13):
        M = realize(build_hw0(n), backend="dense").dense()
        vals, vecs = np.linalg.eigh(M)
        zero, w = basis_zero(n), basis_w(n)
        assert np.sum(np.abs(vals) <= 1e-10) == 2, n
        assert np.linalg.norm(M @ zero) <= 1e-12 and np.linalg.norm(M @ w) <= 1e-12
        # ||P - Q|| for equal-rank projectors is the largest principal sine
        B, V = np.stack([zero, w], axis=1), vecs[:, :2]
        assert np.linalg.norm(B - V @ (V.conj().T @ B), 2) <= 1e-12, n

        spec = WChainSpec.for_length(n)
        M = realize(build_hw(spec), backend="dense").dense()
        vals, vecs = np.linalg.eigh(M)
        tol = 64 * EPS * np.max(np.abs(vals))
        assert abs(vals[0]) <= tol, n
        assert abs(vecs[:, 0] @ w) ** 2 >= 1 - 1e-10, n
        assert vals[1] - vals[0] >= 1 - tol, n
    assert time.perf_counter() - t0 < 60


def test_criterion_02_gadget_constants():
    """C >= 1/n and D <= 2 for n = 2..10, endpoints (1, n)."""
    for n in range(2, 11):
        spec = WChainSpec.for_length(n)
        assert spec.gamma_coupling * spec.gap_estimate + 1 > 5 * n
        k = compute_constants(spec, 1, n)
        assert k.C >= 1 / n, (n, k.C)
        assert k.D <= 2, (n, k.D)


def test_criterion_03_correlation_law():
    """<W|X_1 Pi_+ X_n|W> = 2/n for n = 2..12."""
    for n in range(2, 13):
        w = basis_w(n)
        X1 = np.kron(np.array([[0, 1], [1, 0]]), np.eye(1 << (n - 1)))
        Xn = np.kron(np.eye(1 << (n - 1)), np.array([[0, 1], [1, 0]]))
        Pi = np.eye(1 << n) - np.outer(w, w)
        assert abs(w @ X1 @ Pi @ Xn @ w - 2 / n) <= 1e-10
    rows = nogo_demo(range(2, 13))
    for r in rows:
        assert abs(r.correlation - 2 / r.n) <= 1e-10


def test_criterion_04_overlap_closed_form():
    """Closed-form overlap norm equals brute force; bound 5(1-g)/(1+g) + 2/m."""
    for m, g in itertools.product(range(3, 11), (0.5, 0.552, 0.6, 0.75, 0.9)):
        rep = delta_overlap_exact(m, g)
        brute = delta_overlap_bruteforce(m, rep.a, rep.b)
        assert abs(rep.delta_AB - brute) <= 1e-9, (m, g)
        assert rep.delta_AB <= 5 * (1 - g) / (1 + g) + 2 / m, (m, g)


def test_criterion_05_gap_scaling():
    """Log-log gap slope over n = 4..12 is at least -6.13."""
    t0 = time.perf_counter()
    st = gap_scaling_study(range(4, 13), backend="iterative", assert_slope=False)
    assert st.slope >= -6.13, st.slope
    for n, _, _, g in st.rows:
        assert abs(g - (1 - np.cos(np.pi / n))) <= 1e-8
    assert time.perf_counter() - t0 < 300


def test_criterion_06_gadget_residuals():
    """Effective-Hamiltonian residual <= 1e-8 for every gadget."""
    suite = gadget_suite()
    expected = {"subdivision", "three_to_two", "triangle", "crossing",
                "long_range_2", "long_range_3", "long_range_4"}
    assert expected <= set(suite)
    for name, app in suite.items():
        assert residual_check(app) <= 1e-8, name


def test_criterion_07_gadget_spectral_accuracy():
    """eps_hat, eta_hat <= 0.1 at policy Delta, weakly decreasing at 10x and 100x."""
    rows = run_gadget_suite(epsilon=0.1, eta=0.1, factors=(1, 10, 100))
    for r in rows:
        assert r.epsilon_hat[0] <= 0.1 and r.eta_hat[0] <= 0.1, r
        assert r.monotone, r
    pol = default_policy()
    assert calibrate_gadget_constants() == (pol.c2, pol.c3)


def test_criterion_08_toy_end_to_end():
    """X0X1 + Z1Z2 compiles to <= 16 qubits and verifies densely."""
    t0 = time.perf_counter()
    assert default_policy().c_s == 4.0
    res = toy_end_to_end(n_samples=100, tolerance=0.2)
    assert res.n_total <= 16
    assert res.spectral.epsilon_hat <= 0.2 and res.spectral.eta_hat <= 0.2
    assert len(res.soundness) == 100 and all(s.passed for s in res.soundness)
    assert len(res.completeness) == 100 and all(c.passed for c in res.completeness)
    assert time.perf_counter() - t0 < 600


def random_instances():
    # mixed family: n = 3..12, kappa = 2..4, delta = 2..4
    for k in range(50):
        yield random_sparse_hamiltonian(3 + k % 10, 2 + k % 3, 2 + (k // 3) % 3, seed=k)


def structural_failures(H):
    res = compile_hamiltonian(H, 0.1, 0.1)
    F, lay, r = res.hamiltonian, res.layout, res.report
    bad = []
    if max(t.weight for t in F.terms) > 2:
        bad.append("kappa")
    if max(neighbour_degree(F).values()) > 4:
        bad.append("degree")
    pos = lay.positions
    if len(set(pos.values())) != F.n_qubits:
        bad.append("positions")
    for t in F.terms:
        if t.weight == 2:
            a, b = t.support
            if abs(pos[a][0] - pos[b][0]) + abs(pos[a][1] - pos[b][1]) != 1:
                bad.append("nearest-neighbour")
                break
    if r.crossings_remaining:
        bad.append("crossings")
    if not r.n_bound_ok:
        bad.append(f"N={r.n_total} > {r.n_bound}")
    if not r.chain_ok:
        bad.append("certificate chain")
    if not r.passed:
        bad.append("report")
    return bad


def test_criterion_09_structural_pipeline(tmp_path):
    """Builtin codes and 50 random sparse Hamiltonians compile to valid lattices."""
    t0 = time.perf_counter()
    failures = {}
    for name in BUILTIN_INSTANCES:
        bad = structural_failures(build_code_hamiltonian(builtin(name)))
        if bad:
            failures[name] = bad
    n_random = 0
    for H in random_instances():
        g = graph_stats(H)
        assert g.kappa <= 4 and g.delta <= 4 and H.n_qubits <= 12
        n_random += 1
        bad = structural_failures(H)
        if bad:
            failures[H.label] = bad
    assert n_random == 50
    assert not failures, failures
    for H in (build_code_hamiltonian(builtin("surface2")), random_sparse_hamiltonian(9, 4, 4)):
        for d in ("a", "b"):
            write_artifacts(compile_hamiltonian(H, 0.1, 0.1), tmp_path / d, "x")
        for p in (tmp_path / "a").iterdir():
            assert (tmp_path / "b" / p.name).read_bytes() == p.read_bytes(), p.name
    assert time.perf_counter() - t0 < 300


def test_criterion_10_physical_bounds():
    """Partition-function and dynamics bounds on subdivision and long-range gadgets."""
    rows = physical_checks(names=("subdivision", "long_range_2", "long_range_3",
                                  "long_range_4"),
                           betas=(0.1, 1.0, 10.0), times=(0.0, 0.5, 1.0, 2.0))
    for r in rows:
        assert len(r.partition) == 3 and len(r.dynamics) == 4
        assert r.passed, r.name


def test_criterion_11_gentle_measurement():
    """2 sqrt(eps) bound holds over 1000 random (rho, M), dimension <= 16."""
    bad, worst = gentle_trials(1000, seed=0, max_dim=16)
    assert bad == 0 and worst <= 1.0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
