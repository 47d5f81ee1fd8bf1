"""Numerical certification of simulations at desk scale.

All checks work in a data-first qubit ordering: the simulator register is
permuted so the data qubits (the target's qubits) come first and the
ancillas last. The ideal encoding then reads ``T = I (x) |anc>``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm, polar
from scipy.optimize import brentq
from scipy.special import logsumexp

from .config import Policy, default_policy
from .errors import (
    BoundViolated,
    CapExceeded,
    ConvergenceFailure,
    InvalidMeasurement,
    NotLowEnergy,
    SpectrumMismatch,
    UnsupportedEncoding,
)
from .gadgets import AncillaState, GadgetApplication, assemble
from .pauli import Hamiltonian, PauliTerm, realize, to_float
from .wstate import (
    build_hw,
    build_hw0,
    c_prime,
    correlation_through_chain,
    loglog_slope,
    measure_gap,
    product_chain,
    WChainSpec,
)

C_S = 4.0


# -- encodings ------------------------------------------------------------

@dataclass(frozen=True)
class Encoding:
    """State-attachment isometry ``T|psi> = |psi> (x) |anc>``.

    Attributes
    ----------
    n_qubits : int
        Simulator register size.
    data : tuple of int
        Data qubits in the order matching the target's qubits ``0..n-1``.
    ancillas : tuple of int
    anc : ndarray
        Ancilla state with qubits in ``ancillas`` order.
    """

    n_qubits: int
    data: tuple
    ancillas: tuple
    anc: np.ndarray
    p: int = 1
    q: int = 0

    @classmethod
    def from_state(cls, n_qubits: int, state: AncillaState, p: int = 1, q: int = 0) -> "Encoding":
        if q != 0 or p != 1:
            raise UnsupportedEncoding("only p = 1, q = 0 state-attachment encodings are supported")
        anc = tuple(state.qubits())
        data = tuple(k for k in range(n_qubits) if k not in set(anc))
        return cls(n_qubits, data, anc, state.vector(anc))

    @property
    def order(self) -> list[int]:
        return list(self.data) + list(self.ancillas)

    @property
    def mapping(self) -> dict[int, int]:
        return {qb: i for i, qb in enumerate(self.order)}

    @property
    def d(self) -> int:
        return 1 << len(self.data)

    def isometry(self) -> np.ndarray:
        return np.kron(np.eye(self.d), self.anc.reshape(-1, 1))

    def partial_trace(self, rho: np.ndarray) -> np.ndarray:
        """Trace out the ancillas of a data-first density matrix."""
        da = 1 << len(self.ancillas)
        r = rho.reshape(self.d, da, self.d, da)
        return np.einsum("iaja->ij", r)


def _as_encoding(H_s, anc_state, n_qubits: int) -> Encoding:
    if isinstance(anc_state, Encoding):
        return anc_state
    if anc_state is None and isinstance(H_s, GadgetApplication):
        anc_state = H_s.pi_minus
    if anc_state is None:
        raise ValueError("an ancilla state is needed to define the encoding")
    return Encoding.from_state(n_qubits, anc_state)


def _dense_target(H_t: Hamiltonian, enc: Encoding) -> np.ndarray:
    n = len(enc.data)
    if H_t.n_qubits > n and H_t.support() - set(range(n)):
        raise ValueError("target acts outside the data register")
    return realize(H_t.with_n_qubits(n), backend="dense").dense()


def _check_cap(n: int, policy: Policy):
    if n > policy.dense_cap:
        raise CapExceeded(f"{n} qubits exceeds the dense cap {policy.dense_cap}")


# -- low eigensystem ------------------------------------------------------

@dataclass(frozen=True)
class LowEigensystem:
    """Lowest ``d`` eigenpairs of the simulator (data-first ordering)."""

    values: np.ndarray
    vectors: np.ndarray
    next_value: float
    method: str


def _dense_sim(H: Hamiltonian, enc: Encoding) -> np.ndarray:
    return realize(H.relabeled(enc.mapping, enc.n_qubits), backend="dense").dense()


def low_eigensystem(H_s, enc: Encoding, d: int | None = None, *,
                    policy: Policy | None = None) -> LowEigensystem:
    """Lowest ``d`` eigenpairs of ``H_s``.

    For a ``GadgetApplication`` the heavy part is diagonalized separately and
    the low block is found from the exact Schur complement
    ``S(l) = V_-- - V_-+ (Delta E + V_++ - l)^(-1) V_+-``, iterated to its
    fixed points. This keeps the low eigenvalues accurate to machine
    precision relative to ``||V||`` rather than ``Delta``.
    """
    pol = policy or default_policy()
    _check_cap(enc.n_qubits, pol)
    d = enc.d if d is None else d
    if isinstance(H_s, GadgetApplication):
        return _schur_low(H_s, enc, d)
    M = _dense_sim(H_s, enc)
    w, v = np.linalg.eigh(M)
    nxt = float(w[d]) if d < len(w) else math.inf
    return LowEigensystem(w[:d], v[:, :d], nxt, "dense")


def _schur_root(S, i: int, start: float, ceiling: float, scale: float, max_iter: int) -> float:
    """Root of ``f(l) = eig_i(S(l)) - l``; ``f`` is strictly decreasing below ``ceiling``."""
    def f(lam):
        return float(np.linalg.eigvalsh(S(lam))[i]) - lam

    lam = start
    for _ in range(max_iter):
        if lam >= ceiling:
            break
        new = lam + f(lam)
        if abs(new - lam) <= 1e-15 * scale:
            return new
        lam = new
    # fixed-point iteration stalled: bracket and bisect
    hi_cap = ceiling - 1e-9 * max(1.0, abs(ceiling))
    lo, hi = start, start
    step = scale
    while f(lo) < 0:
        lo -= step
        step *= 2
    step = scale
    while hi < hi_cap and f(hi) > 0:
        hi = min(hi + step, hi_cap)
        step *= 2
    if f(hi) > 0:
        raise SpectrumMismatch("low block reaches the excited band")
    if lo == hi:
        return lo
    return float(brentq(f, lo, hi, xtol=1e-15 * scale, rtol=4 * np.finfo(float).eps, maxiter=500))


def _schur_low(g: GadgetApplication, enc: Encoding, d: int, max_iter: int = 200) -> LowEigensystem:
    nd, na = len(enc.data), len(enc.ancillas)
    da = 1 << na
    local = {qb: i for i, qb in enumerate(enc.ancillas)}
    H0a = realize(g.H0.relabeled(local, na), backend="dense").dense()
    e, U = np.linalg.eigh(H0a)
    v = enc.anc
    if abs(e[0]) > 1e-9 or abs(abs(np.vdot(U[:, 0], v)) - 1) > 1e-9:
        raise SpectrumMismatch("ancilla ground state does not match the encoding")
    U = U.astype(complex if np.iscomplexobj(U) or np.iscomplexobj(v) else float)
    U[:, 0] = v
    e = e.copy()
    e[0] = 0.0
    Delta = to_float(g.delta)
    V = _dense_sim(assemble(g) - g.H0.scaled(g.delta), enc)
    W = np.kron(np.eye(1 << nd), U)
    Vt = W.conj().T @ V @ W
    idx = np.arange(1 << (nd + na))
    minus = idx[idx % da == 0]
    plus = idx[idx % da != 0]
    Vmm = Vt[np.ix_(minus, minus)]
    Vpm = Vt[np.ix_(plus, minus)]
    Vpp = Vt[np.ix_(plus, plus)]
    E = np.array([e[k % da] for k in plus])
    mu, Q = np.linalg.eigh(Delta * np.diag(E) + Vpp)
    B = Q.conj().T @ Vpm
    if d > len(minus):
        raise SpectrumMismatch("requested more low states than the encoded space holds")

    def S(lam):
        return Vmm - B.conj().T @ (B / (mu - lam)[:, None])

    vals = np.empty(d)
    xs = np.empty((len(minus), d), dtype=complex)
    guess = np.linalg.eigvalsh(S(0.0))
    scale = max(1.0, float(np.max(np.abs(guess))))
    for i in range(d):
        vals[i] = _schur_root(S, i, float(guess[i]), float(mu[0]), scale, max_iter)
    # one eigh per near-degenerate cluster keeps its vectors orthogonal
    i = 0
    while i < d:
        j = i + 1
        while j < d and vals[j] - vals[i] <= 1e-10 * max(1.0, abs(vals[i])):
            j += 1
        _, X = np.linalg.eigh(S(float(np.mean(vals[i:j]))))
        xs[:, i:j] = X[:, i:j]
        i = j
    # reassemble full vectors in the rotated basis, then orthonormalize
    full = np.zeros((len(idx), d), dtype=complex)
    for i in range(d):
        xp = -Q @ ((B @ xs[:, i]) / (mu - vals[i]))
        full[minus, i] = xs[:, i]
        full[plus, i] = xp
    full = W @ full
    s, u = np.linalg.eigh(full.conj().T @ full)
    full = full @ (u @ np.diag(s ** -0.5) @ u.conj().T)
    if np.allclose(full.imag, 0, atol=1e-13):
        full = full.real
    return LowEigensystem(vals, full, float(mu[0]), "schur")


# -- spectral comparison --------------------------------------------------

@dataclass
class SpectralReport:
    """Matched low spectra of target and simulator.

    ``pairs`` holds ``(i, j, lambda_i(H_t), lambda_j(H_s))`` with ``j = i``
    (``p + q = 1``).
    """

    pairs: list
    epsilon_hat: float
    eta_hat: float
    delta: float
    tilde_T_error: float = float("nan")
    epsilon_target: float | None = None
    eta_target: float | None = None
    method: str = "dense"
    low: LowEigensystem | None = field(default=None, repr=False)
    target_eig: tuple | None = field(default=None, repr=False)
    encoding: Encoding | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        ok = True
        if self.epsilon_target is not None:
            ok &= self.epsilon_hat <= self.epsilon_target
        if self.eta_target is not None:
            ok &= self.eta_hat <= self.eta_target
        return bool(ok)

    def as_dict(self) -> dict:
        return {
            "epsilon_hat": self.epsilon_hat,
            "eta_hat": self.eta_hat,
            "delta": self.delta,
            "tilde_T_error": self.tilde_T_error,
            "epsilon_target": self.epsilon_target,
            "eta_target": self.eta_target,
            "method": self.method,
            "passed": self.passed,
            "pairs": [[i, j, float(a), float(b)] for i, j, a, b in self.pairs],
        }


def match_indices(n_target: int, p: int = 1, q: int = 0) -> list[tuple[int, list[int]]]:
    """Admissible simulator indices for each target index (0-based).

    Target level ``i`` (1-based) may be matched to any ``j`` with
    ``(i - 1)(p + q) <= j <= i (p + q)``, restricted to ``j >= 1``.
    """
    r = p + q
    out = []
    for i in range(1, n_target + 1):
        js = [j - 1 for j in range((i - 1) * r, i * r + 1) if j >= 1]
        out.append((i - 1, js))
    return out


def principal_sine(A: np.ndarray, B: np.ndarray) -> float:
    """Sine of the largest principal angle between two equal-dimension column spaces."""
    qa, _ = np.linalg.qr(A)
    qb, _ = np.linalg.qr(B)
    # residual of B off span(A): avoids the cancellation in sqrt(1 - cos^2)
    return float(np.linalg.norm(qb - qa @ (qa.conj().T @ qb), 2))


def spectral_compare(H_t: Hamiltonian, H_s, delta=None, anc_state=None, *,
                     epsilon: float | None = None, eta: float | None = None,
                     policy: Policy | None = None) -> SpectralReport:
    """Compare the low spectrum of ``H_s`` with the target spectrum.

    Parameters
    ----------
    H_t : Hamiltonian
        Target on the data qubits.
    H_s : Hamiltonian or GadgetApplication
        Simulator. A gadget application uses the Schur solver and supplies
        ``delta`` (half the gadget scale) and the ancilla state by default.
    delta : float, optional
        Low-energy cutoff; the ``2^n`` lowest simulator levels must lie below it.
    anc_state : AncillaState or Encoding, optional
    epsilon, eta : float, optional
        Targets recorded for the pass flag.
    """
    n_s = H_s.n_qubits
    enc = _as_encoding(H_s, anc_state, n_s)
    if delta is None:
        if not isinstance(H_s, GadgetApplication):
            raise ValueError("delta is required for a plain simulator Hamiltonian")
        delta = to_float(H_s.delta) / 2
    delta = to_float(delta)
    low = low_eigensystem(H_s, enc, policy=policy)
    Ht = _dense_target(H_t, enc)
    tw, tv = np.linalg.eigh(Ht)
    d = enc.d
    if low.values[-1] >= delta:
        raise SpectrumMismatch(
            f"only {int(np.sum(low.values < delta))} of {d} levels lie below Delta = {delta:g}")
    pairs = [(i, i, tw[i], low.values[i]) for i in range(d)]
    eps_hat = float(max(abs(a - b) for _, _, a, b in pairs))
    T = enc.isometry()
    P = low.vectors
    eta_hat = float(np.linalg.norm(T - P @ (P.conj().T @ T), 2))
    Ttil = tilde_T(T, P, tv, tw)
    err = float(np.linalg.norm(Ttil - T, 2))
    return SpectralReport(pairs, eps_hat, min(eta_hat, 1.0), delta, err, epsilon, eta,
                          low.method, low, (tw, tv), enc)


def tilde_T(T: np.ndarray, low_vecs: np.ndarray, t_vecs: np.ndarray, t_vals: np.ndarray,
            tol: float = 1e-9) -> np.ndarray:
    """Isometry onto the low space that maps target eigenvectors to simulator ones.

    Target level ``i`` goes to simulator level ``i``. Inside each exactly
    degenerate target cluster the simulator vectors are rotated by the polar
    factor closest to ``T``.
    """
    d = len(t_vals)
    out = np.zeros((T.shape[0], d), dtype=complex)
    i = 0
    while i < d:
        j = i + 1
        while j < d and abs(t_vals[j] - t_vals[i]) <= tol * max(1.0, abs(t_vals[i])):
            j += 1
        S = low_vecs[:, i:j]
        tc = t_vecs[:, i:j]
        R, _ = polar(S.conj().T @ T @ tc)
        out += S @ R @ tc.conj().T
        i = j
    return out.real if np.allclose(out.imag, 0, atol=1e-13) else out


def polar_tilde_T(T: np.ndarray, low_vecs: np.ndarray) -> np.ndarray:
    """Closest isometry into the low space: polar part of ``P T``."""
    R, _ = polar(low_vecs.conj().T @ T)
    return low_vecs @ R


# -- soundness and completeness -------------------------------------------

def sample_low_states(report: SpectralReport, n_samples: int, seed: int = 0,
                      cutoff: float | None = None) -> list[np.ndarray]:
    """Dirichlet weights over simulator eigenvectors below ``cutoff`` (default ``Delta/2``)."""
    rng = np.random.default_rng(seed)
    cut = report.delta / 2 if cutoff is None else cutoff
    k = int(np.sum(report.low.values < cut))
    if k == 0:
        raise NotLowEnergy("no simulator level lies below the cutoff")
    return [rng.dirichlet(np.ones(k)) for _ in range(n_samples)]


@dataclass(frozen=True)
class SoundnessResult:
    energy: float
    epsilon_prime: float
    bound: float
    passed: bool


def soundness_check(H_t: Hamiltonian, report: SpectralReport, weights: np.ndarray,
                    c_s: float = C_S, *, raise_on_fail: bool = True) -> SoundnessResult:
    """Energy of the reduced state of a low-energy simulator state.

    ``rho = sum_k w_k |s_k><s_k|`` over simulator eigenvectors. Both
    Hamiltonians are shifted by ``lambda_min(H_t)`` so that ``epsilon'``
    measures the energy above the target ground level. Asserts
    ``tr(tr_A(rho) H_t) <= 5 eps' + eps_hat + c_s sqrt(eta_hat) ||H_t||``.
    """
    enc = report.encoding
    tw, _ = report.target_eig
    shift = float(tw[0])
    w = np.asarray(weights, dtype=float)
    k = len(w)
    vals = report.low.values[:k]
    eps_p = max(float(w @ vals) - shift, 0.0)
    if eps_p > report.delta / 2:
        raise NotLowEnergy(f"tr(rho H_s) - E0 = {eps_p:g} is not small against Delta")
    vecs = report.low.vectors[:, :k]
    rho = (vecs * w) @ vecs.conj().T
    red = enc.partial_trace(rho)
    Ht = _dense_target(H_t, enc) - shift * np.eye(enc.d)
    energy = float(np.real(np.trace(red @ Ht)))
    norm = float(np.max(np.abs(np.linalg.eigvalsh(Ht))))
    bound = 5 * eps_p + report.epsilon_hat + c_s * math.sqrt(report.eta_hat) * norm
    ok = energy <= bound + 1e-12
    if raise_on_fail and not ok:
        raise BoundViolated(f"soundness: {energy:g} > {bound:g}")
    return SoundnessResult(energy, eps_p, bound, ok)


@dataclass(frozen=True)
class CompletenessResult:
    trace_distance: float
    energy_gap: float
    trace_bound: float
    energy_bound: float
    passed: bool


def completeness_check(H_t: Hamiltonian, report: SpectralReport, sigma: np.ndarray, *,
                       raise_on_fail: bool = True) -> CompletenessResult:
    """Embed ``sigma`` as ``T~ sigma T~^dag`` and compare reduced state and energy.

    Asserts ``|tr(s~ H_s) - tr(sigma H_t)| <= eps_hat`` and
    ``||tr_A(s~) - sigma||_1 <= 2 ||T~ - T||``.
    """
    enc = report.encoding
    tw, tv = report.target_eig
    sigma = np.asarray(sigma)
    if not np.allclose(sigma, sigma.conj().T, atol=1e-10) or abs(np.trace(sigma) - 1) > 1e-9:
        raise ValueError("sigma must be a Hermitian unit-trace matrix")
    P = report.low.vectors
    T = enc.isometry()
    Tt = tilde_T(T, P, tv, tw)
    st = Tt @ sigma @ Tt.conj().T
    # energy of the embedded state from the accurate low eigenpairs
    coeff = P.conj().T @ st @ P
    e_sim = float(np.real(np.sum(np.diag(coeff) * report.low.values)))
    e_t = float(np.real(np.trace(sigma @ _dense_target(H_t, enc))))
    gap = abs(e_sim - e_t)
    red = enc.partial_trace(st)
    dist = float(np.sum(np.abs(np.linalg.eigvalsh((red - sigma + (red - sigma).conj().T) / 2))))
    tb = 2 * float(np.linalg.norm(Tt - T, 2))
    eb = report.epsilon_hat + 1e-9
    ok = gap <= eb and dist <= tb + 1e-10
    if raise_on_fail and not ok:
        raise BoundViolated(f"completeness: gap {gap:g} (<= {eb:g}), distance {dist:g} (<= {tb:g})")
    return CompletenessResult(dist, gap, tb, eb, ok)


# -- gentle measurement ---------------------------------------------------

def trace_norm(A: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(A, compute_uv=False)))


def gentle_measurement_bound(rho: np.ndarray, M: np.ndarray, *, tol: float = 1e-10,
                             raise_on_fail: bool = True) -> tuple[np.ndarray, float, float]:
    """Post-measurement state, its trace distance to ``rho`` and ``2 sqrt(1 - tr(M rho))``."""
    rho = np.asarray(rho)
    M = np.asarray(M)
    if not np.allclose(M, M.conj().T, atol=tol):
        raise InvalidMeasurement("M is not Hermitian")
    w, v = np.linalg.eigh(M)
    if w[0] < -tol or w[-1] > 1 + tol:
        raise InvalidMeasurement("need 0 <= M <= 1")
    p = float(np.real(np.trace(M @ rho)))
    if p <= 0:
        raise InvalidMeasurement("tr(M rho) must be positive")
    sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    post = sq @ rho @ sq / p
    dist = trace_norm(rho - post)
    bound = 2 * math.sqrt(max(0.0, 1 - p))
    if raise_on_fail and dist > bound + 1e-10:
        raise BoundViolated(f"gentle measurement: {dist:g} > {bound:g}")
    return post, dist, bound


# -- physical properties --------------------------------------------------

@dataclass(frozen=True)
class PartitionResult:
    beta: float
    relative_error: float
    bound: float
    passed: bool


def partition_compare(H_t: Hamiltonian, H_s, beta: float, delta=None, epsilon_hat=None,
                      anc_state=None, *, report: SpectralReport | None = None,
                      raise_on_fail: bool = True) -> PartitionResult:
    """Relative error of ``Z_s`` against ``Z_t`` and its bound (``p + q = 1``).

    Bound: ``2^m e^(-beta Delta) / (2^n e^(-beta ||H_t||)) + e^(eps beta) - 1``.
    Low simulator levels come from the accurate low eigensystem, the rest
    from a dense solve.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if report is None:
        report = spectral_compare(H_t, H_s, delta, anc_state)
    enc = report.encoding
    delta = report.delta if delta is None else to_float(delta)
    eps = report.epsilon_hat if epsilon_hat is None else float(epsilon_hat)
    tw, _ = report.target_eig
    Hs = assemble(H_s) if isinstance(H_s, GadgetApplication) else H_s
    all_s = np.linalg.eigvalsh(_dense_sim(Hs, enc))
    levels = np.concatenate([report.low.values, all_s[enc.d:]])
    logZs = logsumexp(-beta * levels)
    logZt = logsumexp(-beta * tw)
    rel = abs(math.expm1(logZs - logZt))
    normH = float(np.max(np.abs(tw)))
    m, n = enc.n_qubits, len(enc.data)
    first = math.exp((m - n) * math.log(2) - beta * delta + beta * normH)
    bound = first + math.expm1(eps * beta)
    ok = rel <= bound * (1 + 1e-9) + 1e-14
    if raise_on_fail and not ok:
        raise BoundViolated(f"partition function: {rel:g} > {bound:g} at beta = {beta}")
    return PartitionResult(beta, rel, bound, ok)


@dataclass(frozen=True)
class DynamicsResult:
    t: float
    distance: float
    bound: float
    passed: bool


def dynamics_compare(H_t: Hamiltonian, H_s, sigma: np.ndarray, t: float, *,
                     report: SpectralReport | None = None, delta=None, anc_state=None,
                     raise_on_fail: bool = True) -> DynamicsResult:
    """Trace distance between ``e^(-iH_s t) rho' e^(iH_s t)`` and the encoded evolution.

    ``rho' = T sigma T^dag`` lies in the encoded subspace; the reference
    evolution is generated by ``E(H_t) = T H_t T^dag``. Bound:
    ``2 eps_hat t + 4 eta_hat``.
    """
    if report is None:
        report = spectral_compare(H_t, H_s, delta, anc_state)
    enc = report.encoding
    T = enc.isometry()
    rho = T @ sigma @ T.conj().T
    Hs = assemble(H_s) if isinstance(H_s, GadgetApplication) else H_s
    w, v = np.linalg.eigh(_dense_sim(Hs, enc))
    Us = (v * np.exp(-1j * w * t)) @ v.conj().T
    Ut = expm(-1j * t * _dense_target(H_t, enc))
    Ue = T @ Ut @ T.conj().T + (np.eye(T.shape[0]) - T @ T.conj().T)
    a = Us @ rho @ Us.conj().T
    b = Ue @ rho @ Ue.conj().T
    dist = trace_norm(a - b)
    bound = 2 * report.epsilon_hat * t + 4 * report.eta_hat
    ok = dist <= bound + 1e-9
    if raise_on_fail and not ok:
        raise BoundViolated(f"dynamics: {dist:g} > {bound:g} at t = {t}")
    return DynamicsResult(t, dist, bound, ok)


# -- studies --------------------------------------------------------------

@dataclass(frozen=True)
class GapStudy:
    rows: list
    slope: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.slope >= self.threshold

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "lambda2", "lambda3", "gap"])
        for n, l2, l3, g in self.rows:
            w.writerow([n, repr(l2), repr(l3), repr(g)])
        return buf.getvalue()


def gap_scaling_study(ns: Sequence[int], *, family: Callable[[int], Hamiltonian] | None = None,
                      degeneracy: int = 2, backend: str = "auto", fit_from: int = 4,
                      policy: Policy | None = None, assert_slope: bool = True) -> GapStudy:
    """Gaps of a chain family and the log-log slope over ``n >= fit_from``.

    The default family is the uncle chain with its two-fold ground space, so
    ``gap = lambda3``. For a family with a ``k``-fold ground space pass
    ``degeneracy = k``.
    """
    pol = policy or default_policy()
    build = family or build_hw0
    rows = []
    for n in ns:
        lam = measure_gap(build(n), degeneracy + 1, backend=backend, policy=pol)
        lam = np.concatenate([lam, [np.nan] * (3 - len(lam))]) if len(lam) < 3 else lam
        gap = float(lam[degeneracy] - lam[0])
        rows.append((int(n), float(lam[1]), float(lam[2]), gap))
    fit = [(n, g) for n, _, _, g in rows if n >= fit_from]
    if len(fit) < 2:
        fit = [(n, g) for n, _, _, g in rows]
    slope = loglog_slope([n for n, _ in fit], [g for _, g in fit]) if len(fit) >= 2 else 0.0
    study = GapStudy(rows, slope, pol.gap_exponent)
    if any(g <= 0 for *_, g in rows):
        raise ConvergenceFailure("non-positive gap measured")
    if assert_slope and not study.passed:
        raise BoundViolated(f"gap slope {slope:.3f} below {pol.gap_exponent}")
    return study


@dataclass(frozen=True)
class NogoRow:
    n: int
    correlation: float
    c_prime: float
    expected: float | None


def nogo_demo(ns: Sequence[int], family: str = "w", *, tol: float = 1e-10) -> list[NogoRow]:
    """Correlation through the chain and the resolvent constant versus ``n``.

    ``family`` is ``"w"`` (the W chain, correlation ``2/n`` asserted) or
    ``"product"`` (the product chain, correlation ``0`` asserted).
    """
    rows = []
    for n in ns:
        if family == "w":
            H = build_hw(WChainSpec.for_length(n))
            expected = 2.0 / n
        elif family == "product":
            H = product_chain(n)
            expected = 0.0
        else:
            raise ValueError(f"unknown family {family!r}")
        gi = PauliTerm(1.0, {0: "X"})
        gj = PauliTerm(1.0, {n - 1: "X"})
        corr = correlation_through_chain(H, gi, gj)
        cp = c_prime(H, gi, gj)
        if abs(corr - expected) > tol:
            raise BoundViolated(f"n = {n}: correlation {corr!r} != {expected!r}")
        rows.append(NogoRow(int(n), corr, cp, expected))
    return rows


# -- gadget suite and constant calibration --------------------------------

def gadget_suite(policy: Policy | None = None, epsilon: float = 0.1,
                 eta: float = 0.1) -> dict[str, GadgetApplication]:
    """Desk-scale instances of every gadget at the policy ``Delta``."""
    from .gadgets import (crossing, long_range, split_product, split_three, subdivide,
                          three_to_two, triangle, xy_crossing)

    kw = dict(epsilon=epsilon, eta=eta, policy=policy)
    P = PauliTerm
    suite = {
        "subdivision": subdivide(Hamiltonian(4, (P(0.3, {0: "Z"}),)),
                                 *split_product(P(-0.7, {0: "X", 1: "X", 2: "Z", 3: "Z"})), **kw),
        "three_to_two": three_to_two(Hamiltonian(3, (P(0.2, {0: "X"}),)),
                                     *split_three(P(-0.8, {0: "Z", 1: "Z", 2: "Z"})), **kw),
        "triangle": triangle(Hamiltonian(3), P(1.0, {0: "Z"}), P(1.0, {1: "X"}),
                             P(1.0, {2: "Z"}), 1.0, 1.0, **kw),
        "crossing": crossing(Hamiltonian(4), P(1.0, {0: "Z"}), P(1.0, {1: "X"}),
                             P(1.0, {2: "Z"}), P(1.0, {3: "Y"}), 1.0, 1.0, **kw),
        "xy_crossing": xy_crossing(Hamiltonian(4), 0, 1, 2, 3, 0.5, -0.5, **kw),
    }
    for n in (2, 3, 4):
        suite[f"long_range_{n}"] = long_range(
            Hamiltonian(2, (P(0.25, {0: "Z"}),)), P(1.0, {0: "X"}), P(1.0, {1: "Z"}),
            WChainSpec.for_length(n, policy), **kw)
    return suite


@dataclass(frozen=True)
class SuiteRow:
    name: str
    delta: float
    epsilon_hat: tuple
    eta_hat: tuple

    @property
    def monotone(self) -> bool:
        e, h = self.epsilon_hat, self.eta_hat
        return all(e[k + 1] <= e[k] * (1 + 1e-9) + 1e-13 for k in range(len(e) - 1)) and \
            all(h[k + 1] <= h[k] * (1 + 1e-9) + 1e-13 for k in range(len(h) - 1))

    def passed(self, epsilon: float, eta: float) -> bool:
        return self.epsilon_hat[0] <= epsilon and self.eta_hat[0] <= eta and self.monotone


def run_gadget_suite(policy: Policy | None = None, epsilon: float = 0.1, eta: float = 0.1,
                     factors: Sequence[float] = (1, 10, 100)) -> list[SuiteRow]:
    """Measured ``(eps_hat, eta_hat)`` per gadget at ``Delta`` times each factor."""
    rows = []
    for name, g in gadget_suite(policy, epsilon, eta).items():
        es, hs = [], []
        for f in factors:
            gg = g.with_delta(g.delta * f)
            r = spectral_compare(gg.target, gg)
            es.append(r.epsilon_hat)
            hs.append(r.eta_hat)
        rows.append(SuiteRow(name, to_float(g.delta), tuple(es), tuple(hs)))
    return rows


def calibrate_gadget_constants(accuracies: Sequence[tuple[float, float]] = (
        (0.1, 0.1), (0.1, 0.02), (0.02, 0.1), (0.02, 0.02)),
        exponents: Sequence[int] = tuple(range(-12, 9))) -> tuple[float, float]:
    """Smallest powers of two ``(c2, c3)`` for which the gadget suite passes.

    Every ``(epsilon, eta)`` pair in ``accuracies`` must pass. Second-order
    gadgets only see ``c2`` and the third-order gadget only ``c3``, so the
    two constants are scanned independently.
    """
    base = default_policy()
    found = {}
    for which in ("c2", "c3"):
        for k in sorted(exponents):
            pol = base.with_(**{which: 2.0 ** k})
            ok = True
            for eps, eta in accuracies:
                try:
                    rows = run_gadget_suite(pol, eps, eta)
                except (SpectrumMismatch, ConvergenceFailure):
                    ok = False
                    break
                rel = [r for r in rows if (r.name == "three_to_two") == (which == "c3")]
                if not all(r.passed(eps, eta) for r in rel):
                    ok = False
                    break
            if ok:
                found[which] = 2.0 ** k
                break
        else:
            raise ConvergenceFailure(f"no power of two in range works for {which}")
    return found["c2"], found["c3"]


# -- end-to-end drivers ---------------------------------------------------

def toy_hamiltonian() -> Hamiltonian:
    """``X0 X1 + Z1 Z2`` on three qubits."""
    return Hamiltonian(3, (PauliTerm(1.0, {0: "X", 1: "X"}), PauliTerm(1.0, {1: "Z", 2: "Z"})),
                       "toy")


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix of the given rank (Ginibre construction)."""
    r = int(rng.integers(1, d + 1)) if rank is None else rank
    G = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


@dataclass
class ToyResult:
    n_total: int
    spectral: SpectralReport
    soundness: list
    completeness: list

    @property
    def passed(self) -> bool:
        return (self.spectral.passed and all(s.passed for s in self.soundness)
                and all(c.passed for c in self.completeness))

    def as_dict(self) -> dict:
        return {
            "n_total": self.n_total,
            "spectral": self.spectral.as_dict(),
            "soundness_passed": sum(s.passed for s in self.soundness),
            "completeness_passed": sum(c.passed for c in self.completeness),
            "samples": len(self.soundness),
            "passed": self.passed,
        }


def toy_end_to_end(H: Hamiltonian | None = None, epsilon: float = 0.1, eta: float = 0.1,
                   n_samples: int = 100, seed: int = 0, tolerance: float = 0.2) -> ToyResult:
    """Compile a small target and verify the result densely.

    The compiled simulator must come from a single round, whose gadget
    application provides the ancilla state. Soundness uses ``n_samples``
    Dirichlet mixtures of low simulator eigenstates and completeness
    ``n_samples`` random target states.
    """
    from .compiler import compile_hamiltonian

    H = toy_hamiltonian() if H is None else H
    res = compile_hamiltonian(H, epsilon, eta)
    if res.report.rounds != 1:
        raise CapExceeded("dense end-to-end check needs a one-round compilation")
    app = res.report.stages[0].app
    if assemble(app).terms != res.hamiltonian.terms:
        raise SpectrumMismatch("compiled Hamiltonian differs from its round")
    rep = spectral_compare(H, app, epsilon=tolerance, eta=tolerance)
    rng = np.random.default_rng(seed)
    sound = [soundness_check(H, rep, w, raise_on_fail=False)
             for w in sample_low_states(rep, n_samples, seed)]
    comp = [completeness_check(H, rep, random_density(rep.encoding.d, rng), raise_on_fail=False)
            for _ in range(n_samples)]
    return ToyResult(res.hamiltonian.n_qubits, rep, sound, comp)


@dataclass(frozen=True)
class PhysicalRow:
    name: str
    partition: tuple
    dynamics: tuple

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.partition + self.dynamics)


def physical_checks(names: Sequence[str] = ("subdivision", "long_range_3"),
                    betas: Sequence[float] = (0.1, 1.0, 10.0),
                    times: Sequence[float] = (0.0, 0.5, 1.0, 2.0), seed: int = 0,
                    policy: Policy | None = None) -> list[PhysicalRow]:
    """Partition-function and dynamics bounds on gadget suite instances."""
    suite = gadget_suite(policy)
    rng = np.random.default_rng(seed)
    rows = []
    for name in names:
        app = suite[name]
        rep = spectral_compare(app.target, app)
        part = tuple(partition_compare(app.target, app, b, report=rep, raise_on_fail=False)
                     for b in betas)
        sigma = random_density(rep.encoding.d, rng)
        dyn = tuple(dynamics_compare(app.target, app, sigma, t, report=rep, raise_on_fail=False)
                    for t in times)
        rows.append(PhysicalRow(name, part, dyn))
    return rows


def gentle_trials(n_trials: int = 1000, seed: int = 0, max_dim: int = 16) -> tuple[int, float]:
    """Random ``(rho, M)`` pairs; returns the violation count and the worst distance/bound."""
    rng = np.random.default_rng(seed)
    bad = 0
    worst = 0.0
    for _ in range(n_trials):
        d = int(rng.integers(2, max_dim + 1))
        rho = random_density(d, rng)
        U, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
        # bias the spectrum toward 1 so that tr(M rho) spans small and large values
        u = rng.uniform(0, 1, size=d) ** rng.uniform(0.05, 1)
        M = (U * u) @ U.conj().T
        M = (M + M.conj().T) / 2
        _, dist, bound = gentle_measurement_bound(rho, M, raise_on_fail=False)
        if dist > bound + 1e-10:
            bad += 1
        if bound > 0:
            worst = max(worst, dist / bound)
    return bad, worst
