"""W-state chains: parent Hamiltonians, gaps, overlap norms and gadget constants.

Chain sites in this module are 1-based (site ``k`` is qubit ``k - 1``).
The uncle Hamiltonian ``H_W0 = sum_k P_{k,k+1}`` is a free-fermion hopping
chain: it conserves Hamming weight and its one-particle energies are
``1 - cos(pi m / n)``. That structure gives closed forms for the gadget
constants of long chains, which are checked against sector solves.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .config import Policy, default_policy
from .errors import (
    CapExceeded,
    ConvergenceFailure,
    DegenerateGroundSpace,
    DegenerateSplit,
    GammaTooSmall,
    InvalidGamma,
    SingularRestriction,
)
from .pauli import Hamiltonian, PauliTerm, realize

RESTRICT_CUTOFF = 1e-10


# -- states and Hamiltonians ----------------------------------------------

def w_state(n: int) -> np.ndarray:
    """Uniform superposition of the ``n`` weight-one basis states."""
    if n < 1:
        raise ValueError("n >= 1 required")
    v = np.zeros(1 << n)
    for k in range(n):
        v[1 << (n - 1 - k)] = 1.0
    return v / math.sqrt(n)


def zero_state(n: int) -> np.ndarray:
    v = np.zeros(1 << n)
    v[0] = 1.0
    return v


# P = |11><11| + (|01> - |10>)(<01| - <10|)/2, i.e. (2 - XX - YY - Z1 - Z2)/4
P_MATRIX = np.array([[0, 0, 0, 0],
                     [0, 0.5, -0.5, 0],
                     [0, -0.5, 0.5, 0],
                     [0, 0, 0, 1.0]])


def pair_projector(q: int, r: int, n_qubits: int, scale=1.0) -> Hamiltonian:
    """Pauli expansion of ``scale * P`` on qubits ``q`` and ``r``."""
    s = scale / 4
    return Hamiltonian(n_qubits, (
        PauliTerm(2 * s, ()),
        PauliTerm(-s, {q: "X", r: "X"}),
        PauliTerm(-s, {q: "Y", r: "Y"}),
        PauliTerm(-s, {q: "Z"}),
        PauliTerm(-s, {r: "Z"}),
    ))


def chain_hw0(qubits, n_qubits: int, scale=1.0) -> Hamiltonian:
    """``scale * sum_k P_{q_k, q_k+1}`` along an ordered list of qubits."""
    H = Hamiltonian(n_qubits)
    terms = []
    for a, b in zip(qubits[:-1], qubits[1:]):
        terms.extend(pair_projector(a, b, n_qubits, scale).terms)
    return Hamiltonian(n_qubits, tuple(terms)) if terms else H


def chain_hw(qubits, n_qubits: int, gamma, scale=1.0) -> Hamiltonian:
    """``scale * H_W`` along an ordered list of qubits.

    ``H_W = Gamma H_W0 + 1 - sum_k (1 - Z_k)/2``.
    """
    n = len(qubits)
    rest = Hamiltonian.from_pairs(
        n_qubits, [(scale * (1 - n / 2), ())] + [(scale / 2, {q: "Z"}) for q in qubits])
    return chain_hw0(qubits, n_qubits, gamma * scale) + rest


def build_hw0(n: int) -> Hamiltonian:
    """Uncle Hamiltonian with ground space ``span{|0^n>, |W_n>}``."""
    if n < 2:
        raise ValueError("n >= 2 required")
    return chain_hw0(list(range(n)), n).with_label(f"HW0_{n}")


# -- gap estimates and chain specs ----------------------------------------

def hw0_gap_exact(n: int) -> float:
    """Closed-form gap ``1 - cos(pi/n)`` of ``H_W0`` (one-particle sector)."""
    return 1.0 - math.cos(math.pi / n)


@functools.lru_cache(maxsize=None)
def measured_hw0_gap(n: int) -> float:
    lam = measure_gap(build_hw0(n), 3)
    return float(lam[2])


def gap_estimate(n: int, policy: Policy | None = None) -> float:
    """Measured gap for short chains, power-law extrapolation beyond.

    The extrapolation ``g(n0) (n / n0)^p`` uses the calibrated exponent
    ``p = policy.gap_exponent``; it sits below the true gap, which keeps the
    resulting Gamma conservative.
    """
    pol = policy or default_policy()
    if n <= pol.gap_fit_n:
        return measured_hw0_gap(n)
    n0 = pol.gap_fit_n
    return measured_hw0_gap(n0) * (n / n0) ** pol.gap_exponent


def choose_gamma(n: int, policy: Policy | None = None) -> int:
    """``Gamma = ceil(margin * n / gap_estimate)``."""
    pol = policy or default_policy()
    return int(math.ceil(pol.gamma_margin * n / gap_estimate(n, pol)))


@dataclass(frozen=True)
class WChainSpec:
    """Chain length, coupling Gamma and the gap estimate used to pick it.

    Parameters
    ----------
    n : int
    gamma_coupling : float
    gap_estimate : float
    cap : (float, float)
        Polynomial ceiling ``c * n**p`` on Gamma.
    for_gadget : bool
        Enforce the stronger ``Gamma * gap + 1 > 5 n`` condition.
    """

    n: int
    gamma_coupling: float
    gap_estimate: float
    cap: tuple = (1.0, 8.0)
    for_gadget: bool = True

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("chain needs n >= 2")
        if not self.gamma_coupling > 0:
            raise GammaTooSmall("Gamma must be positive")
        c, p = self.cap
        if self.gamma_coupling > c * self.n ** p:
            raise ValueError(f"Gamma={self.gamma_coupling} above cap {c}*n^{p}")
        if self.for_gadget and not self.gamma_coupling * self.gap_estimate + 1 > 5 * self.n:
            raise GammaTooSmall(
                f"(Gamma*gap + 1) = {self.gamma_coupling * self.gap_estimate + 1} <= 5n")

    @classmethod
    def for_length(cls, n: int, policy: Policy | None = None) -> "WChainSpec":
        pol = policy or default_policy()
        return cls(n, choose_gamma(n, pol), gap_estimate(n, pol))


def build_hw(spec: WChainSpec) -> Hamiltonian:
    """Parent Hamiltonian with unique ground state ``|W_n>`` at energy 0."""
    if not spec.gamma_coupling * spec.gap_estimate > spec.n:
        raise GammaTooSmall("need Gamma * gap > n for a unique gapped ground state")
    return chain_hw(list(range(spec.n)), spec.n, spec.gamma_coupling).with_label(f"HW_{spec.n}")


# -- eigenvalues ----------------------------------------------------------

def measure_gap(H: Hamiltonian, k: int = 3, backend: str = "auto",
                policy: Policy | None = None) -> np.ndarray:
    """Lowest ``k`` eigenvalues, ascending.

    ``backend`` is ``"dense"``, ``"iterative"`` (implicitly restarted
    Lanczos via ``eigsh``) or ``"auto"``.
    """
    pol = policy or default_policy()
    n = H.n_qubits
    if n > pol.max_qubits:
        raise CapExceeded(f"{n} qubits exceeds cap {pol.max_qubits}")
    dim = 1 << n
    k = min(k, dim)
    if backend == "auto":
        backend = "dense" if n <= min(pol.dense_cap, 10) else "iterative"
    if backend == "dense" or dim <= max(k + 1, 16):
        M = realize(H, backend="dense" if n <= pol.dense_cap else "sparse").dense()
        return np.linalg.eigvalsh(M)[:k]
    M = realize(H, backend="sparse").sparse()
    return _lanczos_lowest(M, k)


def _lanczos_lowest(M, k: int, tol: float = 1e-12, seed: int = 12345) -> np.ndarray:
    """Lowest ``k`` eigenvalues of a sparse symmetric matrix, with multiplicity.

    A single Krylov space holds one vector per exact eigenspace, so
    degenerate levels are recovered by deflation: found vectors are pushed
    up by a shift and the solve is repeated until the deflated operator has
    nothing below the current ``k``-th value.
    """
    dim = M.shape[0]
    shift = float(abs(M).sum(axis=1).max()) * 2 + 1.0
    rng = np.random.default_rng(seed)
    V = np.zeros((dim, 0), dtype=M.dtype)
    vals: list[float] = []
    for _ in range(4 * k + 4):
        if V.shape[1]:
            Vc = V.conj()
            op = spla.LinearOperator(
                (dim, dim), dtype=M.dtype,
                matvec=lambda x, V=V, Vc=Vc: M @ x + shift * (V @ (Vc.T @ x)))
        else:
            op = M
        kk = min(k, dim - V.shape[1] - 2)
        if kk < 1:
            break
        try:
            w, X = spla.eigsh(op, k=kk, which="SA", v0=rng.standard_normal(dim), tol=tol,
                              maxiter=20000, ncv=min(dim - 1, max(4 * kk + 1, 40)))
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceFailure(str(exc)) from exc
        order = np.argsort(w)
        w, X = w[order], X[:, order]
        if len(vals) >= k and w[0] >= sorted(vals)[k - 1] - 1e-9 * max(1.0, abs(w[0])):
            break
        # keep only pairs that are below the shifted block
        keep = w < shift / 2
        X = X[:, keep]
        X = X - V @ (V.conj().T @ X)
        Q, _ = np.linalg.qr(X)
        V = np.hstack([V, Q])
        vals.extend(float(x) for x in w[keep])
    else:
        raise ConvergenceFailure("deflated Lanczos did not settle")
    return np.sort(np.array(vals))[:k]


def hw0_gap_scan(ns, backend: str = "auto") -> list[tuple[int, float, float, float]]:
    """Rows ``(n, lambda2, lambda3, gap)`` for the uncle chain; ``gap = lambda3``."""
    rows = []
    for n in ns:
        lam = measure_gap(build_hw0(n), 3, backend=backend)
        rows.append((n, float(lam[1]), float(lam[2]), float(lam[2])))
    return rows


def loglog_slope(ns, values) -> float:
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


# -- overlap norm (martingale step) ---------------------------------------

@dataclass(frozen=True)
class OverlapReport:
    """Exact ``||Pi_{A u B} - Pi_A Pi_B||`` for two overlapping intervals.

    ``A`` is the first ``a`` sites and ``B`` the last ``b`` sites of ``m``.
    ``rounding`` records how ``a = b`` was obtained from ``(1 + gamma) m / 2``.
    """

    m: int
    gamma: float
    a: int
    b: int
    a_bar: int
    b_bar: int
    l: int
    lambdas: tuple
    u1: float
    u2: float
    delta_AB: float
    rounding: str

    @property
    def bound(self) -> float:
        return 5 * (1 - self.gamma) / (1 + self.gamma)


def split_sizes(m: int, gamma: float) -> tuple[int, str]:
    """Region size ``a = b`` nearest ``(1+gamma) m / 2`` with ``l >= 1`` and ``a_bar >= 1``."""
    if not 0 < gamma < 1:
        raise DegenerateSplit("gamma must lie in (0, 1)")
    target = (1 + gamma) * m / 2
    a = int(math.floor(target + 0.5))
    how = "round"
    lo, hi = m // 2 + 1, m - 1
    if lo > hi:
        raise DegenerateSplit(f"m={m} admits no split with l >= 1 and a_bar >= 1")
    if a < lo:
        a, how = lo, "clamped_up"
    elif a > hi:
        a, how = hi, "clamped_down"
    return a, how


def overlap_lambdas(m: int, a: int, b: int) -> tuple[float, ...]:
    l = a + b - m
    ab_, bb_ = m - a, m - b
    l1 = math.sqrt(a * bb_) / m - math.sqrt(bb_ / a)
    l2 = math.sqrt(a * b) / m - l / math.sqrt(a * b)
    l3 = math.sqrt(ab_ * b) / m - math.sqrt(ab_ / b)
    l4 = math.sqrt(ab_ * bb_) / m
    l5 = -math.sqrt(ab_ * bb_) / math.sqrt(a * b)
    return l1, l2, l3, l4, l5


def delta_overlap_exact(m: int, gamma: float) -> OverlapReport:
    """Closed-form operator norm from the five-term decomposition."""
    a, how = split_sizes(m, gamma)
    b = a
    l = a + b - m
    if l < 1 or m - a < 1:
        raise DegenerateSplit(f"region sizes a={a}, l={l}, a_bar={m - a}")
    lam = overlap_lambdas(m, a, b)
    l1, l2, l3, l4, l5 = lam
    p = l2 ** 2 + l3 ** 2
    q = l1 ** 2 + l4 ** 2
    r = l1 * l2 + l3 * l4
    root = math.sqrt(p * p - 2 * p * q + q * q + 4 * r * r)
    u1 = 0.5 * (p + q - root)
    u2 = 0.5 * (p + q + root)
    delta = max(math.sqrt(max(u1, 0.0)), math.sqrt(max(u2, 0.0)), abs(l5))
    return OverlapReport(m, gamma, a, b, m - a, m - b, l, lam, u1, u2, delta, how)


def ground_projector(n: int) -> np.ndarray:
    z, w = zero_state(n), w_state(n)
    return np.outer(z, z) + np.outer(w, w)


def delta_overlap_bruteforce(m: int, a: int, b: int) -> float:
    """Largest singular value of ``Pi_{AuB} - Pi_A Pi_B`` from explicit matrices."""
    PA = np.kron(ground_projector(a), np.eye(1 << (m - a)))
    PB = np.kron(np.eye(1 << (m - b)), ground_projector(b))
    return float(np.linalg.norm(ground_projector(m) - PA @ PB, 2))


def _eps_crude(gamma: float) -> float:
    return 0.5 - 5 * (1 - gamma) / (1 + gamma)


def martingale_gap_bound(n: int, gamma: float, delta: str = "crude",
                         base_gaps: dict | None = None) -> float:
    """Lower bound on the ``H_W0`` gap from the martingale recursion.

    ``f(n) = eps * f(a)`` with ``a = b`` the overlapping region size and
    ``eps = (1 - 2 delta) / 2``. With ``delta="crude"`` the crude bound
    ``delta <= 5(1-gamma)/(1+gamma)`` is used (needs ``gamma > 9/11``); with
    ``delta="exact"`` each level uses :func:`delta_overlap_exact`.
    The base case ``f(n <= 4)`` is the measured gap.
    """
    if delta == "crude":
        if not gamma > 9 / 11:
            raise InvalidGamma("gamma must exceed 9/11 so that delta < 1/2")
    elif delta != "exact":
        raise ValueError("delta must be 'crude' or 'exact'")
    elif not 0 < gamma < 1:
        raise InvalidGamma("gamma must lie in (0, 1)")
    base = base_gaps or {}
    factor = 1.0
    m = n
    while m > 4:
        if delta == "crude":
            eps = _eps_crude(gamma)
        else:
            eps = 0.5 - delta_overlap_exact(m, gamma).delta_AB
            if eps <= 0:
                raise InvalidGamma(f"delta >= 1/2 at m={m}; pick a larger gamma")
        factor *= eps
        m, _ = split_sizes(m, gamma)
    g = base.get(m)
    if g is None:
        g = measured_hw0_gap(max(m, 2))
    return factor * g


def martingale_exponent(gamma: float, delta: str = "exact") -> float:
    """Asymptotic exponent ``log(1/eps) / log((1+gamma)/2)`` of the bound.

    With ``delta="exact"`` the continuum limit of the exact norm,
    ``delta = (1-gamma)/(1+gamma)``, is used.
    """
    d = (1 - gamma) / (1 + gamma) if delta == "exact" else 5 * (1 - gamma) / (1 + gamma)
    eps = (1 - 2 * d) / 2
    if eps <= 0:
        raise InvalidGamma("delta >= 1/2")
    return math.log(1 / eps) / math.log((1 + gamma) / 2)


# -- gadget constants -----------------------------------------------------

@dataclass(frozen=True)
class GadgetConstants:
    """``C`` and ``D`` for coupling chain sites ``i`` and ``j`` (1-based).

    ``D`` refers to site ``i`` and ``D_j`` to site ``j``; they coincide for
    the two chain endpoints by reflection symmetry.
    """

    C: float
    D: float
    n: int
    i: int
    j: int
    D_j: float = float("nan")
    method: str = ""


def _check_sites(n: int, i: int, j: int):
    if i == j:
        raise ValueError("i and j must differ")
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"sites must lie in 1..{n}")


def _constants_dense(spec: WChainSpec, i: int, j: int) -> tuple[float, float, float]:
    n = spec.n
    H = realize(build_hw(spec), backend="dense").dense()
    w = w_state(n)
    Pp = np.eye(1 << n) - np.outer(w, w)
    G = np.linalg.pinv(Pp @ H @ Pp, rcond=RESTRICT_CUTOFF, hermitian=True)
    ev = np.linalg.eigvalsh(Pp @ H @ Pp)
    nonzero = ev[np.abs(ev) > RESTRICT_CUTOFF]
    if nonzero.size != (1 << n) - 1 or nonzero.min() <= RESTRICT_CUTOFF:
        raise SingularRestriction("restricted H_W not positive on the complement of |W>")

    def xw(site):
        return realize(Hamiltonian.single(n, 1.0, {site - 1: "X"}), backend="dense").dense() @ w

    vi, vj = xw(i), xw(j)
    C = float(vi @ G @ vj + vj @ G @ vi)
    return C, float(2 * vi @ G @ vi), float(2 * vj @ G @ vj)


def sector_basis(n: int, weight: int) -> np.ndarray:
    """Sorted basis indices of Hamming weight ``weight`` (qubit 0 is the MSB)."""
    from itertools import combinations
    idx = [sum(1 << (n - 1 - q) for q in c) for c in combinations(range(n), weight)]
    return np.array(sorted(idx), dtype=np.int64)


def sector_matrix(H: Hamiltonian, weight: int) -> tuple[np.ndarray, sp.csr_matrix]:
    """Restriction of a weight-conserving ``H`` to one Hamming-weight sector."""
    from .pauli import apply_term_columns, _masks, _popcount_parity
    n = H.n_qubits
    basis = sector_basis(n, weight)
    rows_l, cols_l, vals_l = [], [], []
    leak = {}
    pos_cols = np.arange(basis.size)
    for t in H.terms:
        xm, zm, ny = _masks(t, n)
        rows = basis ^ xm
        sign = 1 - 2 * _popcount_parity(basis & zm)
        vals = (1j ** ny) * float(t.coefficient) * sign
        pos = np.searchsorted(basis, rows)
        pos = np.minimum(pos, basis.size - 1)
        inside = basis[pos] == rows
        rows_l.append(pos[inside])
        cols_l.append(pos_cols[inside])
        vals_l.append(np.broadcast_to(vals, rows.shape)[inside])
        for r, c, v in zip(rows[~inside], pos_cols[~inside],
                           np.broadcast_to(vals, rows.shape)[~inside]):
            leak[(int(r), int(c))] = leak.get((int(r), int(c)), 0) + v
    scale = max((abs(float(t.coefficient)) for t in H.terms), default=1.0)
    if any(abs(v) > 1e-9 * scale for v in leak.values()):
        raise ValueError("Hamiltonian does not conserve Hamming weight")
    M = sp.csr_matrix((np.concatenate(vals_l), (np.concatenate(rows_l), np.concatenate(cols_l))),
                      shape=(basis.size, basis.size))
    M.sum_duplicates()
    if not np.any(np.abs(M.data.imag) > 0):
        M = M.real.tocsr()
    return basis, M


def _constants_sector(spec: WChainSpec, i: int, j: int) -> tuple[float, float, float]:
    n = spec.n
    H = chain_hw(list(range(n)), n, spec.gamma_coupling)
    basis, M = sector_matrix(H, 2)
    A = M.toarray()
    ev = np.linalg.eigvalsh(A)
    if ev.min() <= RESTRICT_CUTOFF:
        raise SingularRestriction("weight-two block of H_W is not positive definite")
    # H_W |0...0> = |0...0>, so the weight-zero block contributes 1

    def psi(site):
        q = site - 1
        bit = 1 << (n - 1 - q)
        return ((basis & bit) != 0).astype(float)

    vi, vj = psi(i), psi(j)
    xi = np.linalg.solve(A, vi)
    xj = np.linalg.solve(A, vj)
    g0 = 1.0
    C = (2 * g0 + vi @ xj + vj @ xi) / n
    return float(C), float(2 * (g0 + vi @ xi) / n), float(2 * (g0 + vj @ xj) / n)


def _constants_fermion(spec: WChainSpec) -> tuple[float, float, float]:
    n = spec.n
    m = np.arange(1, n)
    lam = 1.0 - np.cos(np.pi * m / n)
    den = spec.gamma_coupling * lam - 1.0
    if den.min() <= RESTRICT_CUTOFF:
        raise SingularRestriction("two-particle block of H_W is not positive definite")
    c2 = np.cos(np.pi * m / (2 * n)) ** 2
    alt = np.where(m % 2 == 0, 1.0, -1.0)
    C = (2.0 / n) * (1.0 - 2.0 * float(np.sum(alt * c2 / den)))
    D = (2.0 / n) * (1.0 + 2.0 * float(np.sum(c2 / den)))
    return C, D, D


def compute_constants(spec: WChainSpec, i: int, j: int, method: str = "auto") -> GadgetConstants:
    """Long-range gadget constants.

    ``C = <W|X_i G X_j|W> + <W|X_j G X_i|W>`` and ``D = 2 <W|X_i G X_i|W>``
    where ``G`` inverts ``H_W`` on the complement of ``|W_n>``.

    Parameters
    ----------
    method : {"auto", "dense", "sector", "fermion"}
        ``dense`` pseudo-inverts the full matrix, ``sector`` solves inside the
        weight-two block, ``fermion`` uses the one-particle closed form and is
        limited to the endpoints ``(1, n)``.
    """
    n = spec.n
    _check_sites(n, i, j)
    if not spec.gamma_coupling * spec.gap_estimate + 1 > 5 * n:
        raise GammaTooSmall("(Gamma*gap + 1) must exceed 5n")
    endpoints = {i, j} == {1, n}
    if method == "auto":
        method = "dense" if n <= 8 else ("sector" if n <= 48 or not endpoints else "fermion")
    if method == "dense":
        if n > default_policy().dense_cap:
            raise CapExceeded("dense constants need a small chain")
        C, D, Dj = _constants_dense(spec, i, j)
    elif method == "sector":
        C, D, Dj = _constants_sector(spec, i, j)
    elif method == "fermion":
        if not endpoints:
            raise ValueError("closed form only covers the endpoint pair (1, n)")
        C, D, Dj = _constants_fermion(spec)
    else:
        raise ValueError(f"unknown method {method!r}")
    return GadgetConstants(C, D, n, i, j, Dj, method)


# -- correlations through a chain -----------------------------------------

@functools.lru_cache(maxsize=4)
def _ground(H: Hamiltonian, gap_tol: float = 1e-8):
    M = realize(H).dense()
    vals, vecs = np.linalg.eigh(M)
    if vals.size > 1 and vals[1] - vals[0] < gap_tol:
        raise DegenerateGroundSpace(f"ground gap {vals[1] - vals[0]:.3e} below {gap_tol}")
    return vals, vecs, M


def _term_matrix(term: PauliTerm, n: int) -> np.ndarray:
    return realize(Hamiltonian(n, (term,)), backend="dense").dense()


def correlation_through_chain(H_anc: Hamiltonian, gamma_i: PauliTerm,
                              gamma_j: PauliTerm) -> float:
    """Connected correlator ``<psi|G_i Pi_+ G_j|psi>`` in the unique ground state."""
    vals, vecs, _ = _ground(H_anc)
    psi = vecs[:, 0]
    n = H_anc.n_qubits
    gi = _term_matrix(gamma_i, n) @ psi
    gj = _term_matrix(gamma_j, n) @ psi
    val = np.vdot(gi, gj) - np.vdot(gi, psi) * np.vdot(psi, gj)
    return float(val.real)


def c_prime(H_anc: Hamiltonian, gamma_i: PauliTerm, gamma_j: PauliTerm) -> float:
    """``<psi|G_i R G_j|psi> + <psi|G_j R G_i|psi>`` with ``R`` the reduced resolvent."""
    vals, vecs, _ = _ground(H_anc)
    n = H_anc.n_qubits
    psi = vecs[:, 0]
    shifted = vals[1:] - vals[0]
    ex = vecs[:, 1:]
    gi = ex.conj().T @ (_term_matrix(gamma_i, n) @ psi)
    gj = ex.conj().T @ (_term_matrix(gamma_j, n) @ psi)
    val = np.vdot(gi, gj / shifted) + np.vdot(gj, gi / shifted)
    return float(val.real)


def product_chain(n: int) -> Hamiltonian:
    """``sum_k (1 - Z_k)/2``: unique product ground state ``|0^n>``."""
    terms = [PauliTerm(n / 2, ())] + [PauliTerm(-0.5, {k: "Z"}) for k in range(n)]
    return Hamiltonian(n, tuple(terms), f"product_{n}")
