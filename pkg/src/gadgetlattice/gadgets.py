"""Perturbation gadgets, their assembly, residual checks and certificates.

A gadget couples fresh ancilla qubits to the data register. With heavy part
``H0`` on the ancillas and perturbation ``V`` the simulator is

* second order: ``Delta H0 + H1 + Delta^(1/2) H2``,
* third order: ``Delta H0 + H1 + Delta^(1/3) H1' + Delta^(2/3) H2``.

Writing ``G`` for the inverse of ``H0`` on the complement of its ground
state, the effective Hamiltonians are ``H1 - H2 G H2`` (second order) and
``H1 + H2 G H2 G H2`` (third order, with ``H1' = H2 G H2`` on the ground
space), all restricted to the ancilla ground state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import mpmath
import numpy as np

from .config import Policy, default_policy
from .errors import AncillaCollision, OverlappingSupports, PreconditionViolated
from .pauli import (
    Hamiltonian,
    PauliTerm,
    as_number,
    format_coeff,
    nroot,
    projector_one,
    realize,
    sign,
    triangle_norm_bound,
)
from .wstate import GadgetConstants, WChainSpec, chain_hw, compute_constants, w_state


# -- ancilla ground states ------------------------------------------------

@dataclass(frozen=True)
class AncillaState:
    """Rank-one ancilla ground state as a product of simple factors.

    Each factor is ``("basis", (q,), bit)`` or ``("W", (q_1, ..., q_n), None)``
    with the W chain listed in chain order.
    """

    factors: tuple = ()

    @classmethod
    def basis(cls, qubit: int, bit: int = 0) -> "AncillaState":
        return cls((("basis", (int(qubit),), int(bit)),))

    @classmethod
    def w_chain(cls, qubits: Sequence[int]) -> "AncillaState":
        return cls((("W", tuple(int(q) for q in qubits), None),))

    def qubits(self) -> tuple[int, ...]:
        return tuple(sorted(q for _, qs, _ in self.factors for q in qs))

    def merge(self, other: "AncillaState") -> "AncillaState":
        clash = set(self.qubits()) & set(other.qubits())
        if clash:
            raise AncillaCollision(f"ancillas shared: {sorted(clash)}")
        return AncillaState(self.factors + other.factors)

    def vector(self, order: Sequence[int] | None = None) -> np.ndarray:
        """State vector with qubits in ``order`` (default: sorted)."""
        order = list(self.qubits() if order is None else order)
        if sorted(order) != list(self.qubits()):
            raise ValueError("order must list exactly the ancilla qubits")
        vec = np.ones(1)
        layout: list[int] = []
        for kind, qs, bit in self.factors:
            if kind == "basis":
                f = np.zeros(2)
                f[bit] = 1.0
            else:
                f = w_state(len(qs))
            vec = np.kron(vec, f)
            layout.extend(qs)
        if not layout:
            return vec
        t = vec.reshape([2] * len(layout))
        t = np.transpose(t, [layout.index(q) for q in order])
        return t.reshape(-1)

    def describe(self) -> list:
        return [[k, list(qs), b] for k, qs, b in self.factors]


# -- applications and certificates ----------------------------------------

@dataclass(frozen=True)
class GadgetApplication:
    """One perturbative rewrite on an enlarged register.

    Attributes
    ----------
    kind : str
    n_qubits : int
        Size of the enlarged register (data plus ancillas).
    H0, H1, H2 : Hamiltonian
    H1_prime : Hamiltonian or None
        Present for third-order gadgets.
    delta : float or mpf
        Energy scale of ``H0``.
    ancillas : tuple of int
    pi_minus : AncillaState
        Ground state of ``H0``; the encoding attaches it to the data.
    target : Hamiltonian
        Simulated Hamiltonian, on the data qubits.
    H_else : Hamiltonian
        Part of the target carried through ``H1`` unchanged.
    epsilon, eta : float
        Requested accuracies the default ``delta`` was chosen for.
    constants : dict
        Gadget constants (C, D, Gamma) where applicable.
    """

    kind: str
    n_qubits: int
    H0: Hamiltonian
    H1: Hamiltonian
    H2: Hamiltonian
    H1_prime: Hamiltonian | None
    delta: object
    ancillas: tuple
    pi_minus: AncillaState
    target: Hamiltonian
    H_else: Hamiltonian
    epsilon: float = 0.1
    eta: float = 0.1
    constants: dict = field(default_factory=dict)
    parts: tuple = ()

    @property
    def order(self) -> int:
        return 3 if self.H1_prime is not None else 2

    @property
    def lam(self):
        """``Lambda = max(||H1||, ||H1'||, ||H2||)`` by triangle bounds."""
        vals = [triangle_norm_bound(self.H1), triangle_norm_bound(self.H2)]
        if self.H1_prime is not None:
            vals.append(triangle_norm_bound(self.H1_prime))
        return max(vals)

    @property
    def data_qubits(self) -> tuple[int, ...]:
        anc = set(self.ancillas)
        return tuple(q for q in range(self.n_qubits) if q not in anc)

    def with_delta(self, delta) -> "GadgetApplication":
        return _replace(self, delta=delta)

    def manifest(self) -> dict:
        def terms(H):
            return None if H is None else [[format_coeff(t.coefficient), t.label()] for t in H.terms]

        return {
            "kind": self.kind,
            "order": self.order,
            "delta": format_coeff(self.delta),
            "ancillas": list(self.ancillas),
            "pi_minus": self.pi_minus.describe(),
            "H0": terms(self.H0),
            "H1": terms(self.H1),
            "H2": terms(self.H2),
            "H1_prime": terms(self.H1_prime),
            "constants": {k: (format_coeff(v) if not isinstance(v, (str, int)) else v)
                          for k, v in self.constants.items()},
        }


def _replace(app: GadgetApplication, **kw) -> GadgetApplication:
    from dataclasses import replace
    return replace(app, **kw)


@dataclass(frozen=True)
class SimulationCertificate:
    """``(Delta, eta, epsilon)`` guarantee with the encoding it refers to.

    All encodings produced here attach an ancilla state, so ``p = 1`` and
    ``q = 0``.
    """

    delta: object
    eta: object
    epsilon: object
    lam: object = 0.0
    encoding: str = "state-attachment"
    provenance: tuple = ()
    heuristic_constant: bool = False
    p: int = 1
    q: int = 0

    def as_dict(self) -> dict:
        return {
            "delta": format_coeff(self.delta),
            "eta": format_coeff(self.eta),
            "epsilon": format_coeff(self.epsilon),
            "lambda": format_coeff(self.lam),
            "encoding": self.encoding,
            "p": self.p,
            "q": self.q,
            "provenance": list(self.provenance),
            "heuristic_constant": self.heuristic_constant,
        }


def certificate_for(app: GadgetApplication) -> SimulationCertificate:
    """The gadget lemmas give a ``(Delta/2, eta, epsilon)``-simulation."""
    return SimulationCertificate(app.delta / 2, app.eta, app.epsilon, app.lam,
                                 provenance=(app.kind,))


def compose_certificates(cA: SimulationCertificate, cB: SimulationCertificate,
                         normC) -> SimulationCertificate:
    """Chain ``A -> B -> C`` where ``A`` simulates ``B`` and ``B`` simulates ``C``.

    The hidden constants of the transitivity bound are set to one, which is
    flagged by ``heuristic_constant``.
    """
    eA, eB = cA.epsilon, cB.epsilon
    if not (eA <= normC and eB <= normC):
        raise PreconditionViolated(f"need eps_A, eps_B <= ||C||: {eA}, {eB}, {normC}")
    if not cB.delta >= normC + 2 * eA + eB:
        raise PreconditionViolated(
            f"need Delta_B >= ||C|| + 2 eps_A + eps_B: {cB.delta} < {normC + 2 * eA + eB}")
    denom = cB.delta - normC + eB
    eta = cA.eta + cB.eta + eA / denom
    eps = eA + eB + eA * normC / denom
    return SimulationCertificate(
        as_number(cB.delta - eA), as_number(eta), as_number(eps),
        max(cA.lam, cB.lam), cA.encoding,
        cB.provenance + cA.provenance, True, 1, 0)


# -- Delta policy ---------------------------------------------------------

def choose_delta_2(lam, epsilon, eta, c2: float | None = None):
    """``Delta = c2 (Lambda^6 / eps^2 + Lambda^2 / eta^2)``."""
    if not (lam > 0 and epsilon > 0 and eta > 0):
        raise ValueError("Lambda, epsilon, eta must be positive")
    c = default_policy().c2 if c2 is None else c2
    L, e, h = mpmath.mpf(lam), mpmath.mpf(epsilon), mpmath.mpf(eta)
    return as_number(c * (L ** 6 / e ** 2 + L ** 2 / h ** 2))


def choose_delta_3(lam, epsilon, eta, c3: float | None = None):
    """``Delta = c3 (Lambda^12 / eps^3 + Lambda^3 / eta^3)``."""
    if not (lam > 0 and epsilon > 0 and eta > 0):
        raise ValueError("Lambda, epsilon, eta must be positive")
    c = default_policy().c3 if c3 is None else c3
    L, e, h = mpmath.mpf(lam), mpmath.mpf(epsilon), mpmath.mpf(eta)
    return as_number(c * (L ** 12 / e ** 3 + L ** 3 / h ** 3))


def policy_delta(order: int, lam, epsilon, eta, policy: Policy | None = None):
    pol = policy or default_policy()
    lam = lam if lam > 0 else 1e-12
    if order == 3:
        return choose_delta_3(lam, epsilon, eta, pol.c3)
    return choose_delta_2(lam, epsilon, eta, pol.c2)


# -- assembly -------------------------------------------------------------

def assemble(g: GadgetApplication) -> Hamiltonian:
    """Simulator Hamiltonian on the enlarged register."""
    D = g.delta
    H = g.H0.scaled(D) + g.H1
    if g.order == 3:
        H = H + g.H1_prime.scaled(nroot(D, 3)) + g.H2.scaled(nroot(D, 3) ** 2)
    else:
        H = H + g.H2.scaled(nroot(D, 2))
    return H.with_n_qubits(g.n_qubits).with_label(f"{g.kind}_sim")


# -- constructors ---------------------------------------------------------

def _unit(term: PauliTerm, n: int) -> Hamiltonian:
    return Hamiltonian(n, (term,))


def _check_disjoint(*terms: PauliTerm):
    seen: set[int] = set()
    for t in terms:
        s = set(t.support)
        if not s:
            raise OverlappingSupports("gadget operand acts on no qubit")
        if s & seen:
            raise OverlappingSupports(f"supports overlap on {sorted(s & seen)}")
        seen |= s


def _register(H_else: Hamiltonian, terms, ancilla: int | None, n_new: int = 1):
    n_data = max([H_else.n_qubits] + [max(t.support) + 1 for t in terms])
    first = n_data if ancilla is None else int(ancilla)
    if first < n_data:
        taken = set(range(n_data))
        if any(first + k in taken and first + k in
               {q for t in terms for q in t.support} | H_else.support() for k in range(n_new)):
            raise AncillaCollision(f"ancilla {first} already carries data")
    n = max(n_data, first + n_new)
    return n, list(range(first, first + n_new))


def _sq(t: PauliTerm):
    return t.coefficient * t.coefficient


def _prod(n: int, *terms: PauliTerm, scale=1.0) -> PauliTerm:
    """Product of Pauli terms on disjoint supports."""
    axes = {}
    c = scale
    for t in terms:
        axes.update(t.axis_map)
        c = c * t.coefficient
    return PauliTerm(c, axes)


def _finish(kind, n, H0, H1, H2, H1p, anc, pi, target, H_else, delta, epsilon, eta,
            policy, constants=None) -> GadgetApplication:
    app = GadgetApplication(kind, n, H0.with_n_qubits(n), H1.with_n_qubits(n),
                            H2.with_n_qubits(n), None if H1p is None else H1p.with_n_qubits(n),
                            1.0, tuple(anc), pi, target.with_n_qubits(n), H_else.with_n_qubits(n),
                            epsilon, eta, dict(constants or {}))
    if delta is None:
        delta = policy_delta(app.order, app.lam, epsilon, eta, policy)
    return _replace(app, delta=delta)


def subdivide(H_else: Hamiltonian, P_A: PauliTerm, P_B: PauliTerm, *, ancilla: int | None = None,
              delta=None, epsilon: float = 0.1, eta: float = 0.1,
              policy: Policy | None = None) -> GadgetApplication:
    """Simulate ``H_else + P_A P_B`` with one mediator qubit ``t``.

    ``H0 = |1><1|_t``, ``H1 = H_else + (P_A^2 + P_B^2)/2`` and
    ``H2 = (P_A - P_B) X_t / sqrt(2)``.
    """
    _check_disjoint(P_A, P_B)
    n, (t,) = _register(H_else, (P_A, P_B), ancilla)
    H0 = projector_one(t, n)
    H1 = H_else.with_n_qubits(n) + Hamiltonian.identity(n, (_sq(P_A) + _sq(P_B)) / 2)
    r = 1 / math.sqrt(2)
    H2 = Hamiltonian(n, (_prod(n, P_A, PauliTerm(1.0, {t: "X"}), scale=r),
                         _prod(n, P_B, PauliTerm(1.0, {t: "X"}), scale=-r)))
    target = H_else.with_n_qubits(n) + _unit(_prod(n, P_A, P_B), n)
    return _finish("subdivision", n, H0, H1, H2, None, [t], AncillaState.basis(t), target,
                   H_else, delta, epsilon, eta, policy)


def three_to_two(H_else: Hamiltonian, P_A: PauliTerm, P_B: PauliTerm, P_C: PauliTerm, *,
                 ancilla: int | None = None, delta=None, epsilon: float = 0.1, eta: float = 0.1,
                 policy: Policy | None = None) -> GadgetApplication:
    """Third-order gadget for ``H_else + P_A P_B P_C``.

    ``H1 = H_else + (P_A^2 + P_B^2) P_C / 2``, ``H1' = (P_B - P_A)^2 / 2`` and
    ``H2 = -P_C |1><1|_t + (P_B - P_A) X_t / sqrt(2)``. The minus sign on
    ``P_C`` makes the third-order term ``+H2 G H2 G H2`` produce
    ``+P_A P_B P_C``.
    """
    _check_disjoint(P_A, P_B, P_C)
    n, (t,) = _register(H_else, (P_A, P_B, P_C), ancilla)
    H0 = projector_one(t, n)
    half = (_sq(P_A) + _sq(P_B)) / 2
    H1 = H_else.with_n_qubits(n) + _unit(P_C.scaled(half), n)
    H1p = Hamiltonian.from_pairs(n, [(half, ())]) + _unit(_prod(n, P_A, P_B, scale=-1.0), n)
    r = 1 / math.sqrt(2)
    Xt = PauliTerm(1.0, {t: "X"})
    H2 = (Hamiltonian(n, (P_C.scaled(-0.5), _prod(n, P_C, PauliTerm(1.0, {t: "Z"}), scale=0.5),
                          _prod(n, P_A, Xt, scale=-r), _prod(n, P_B, Xt, scale=r))))
    target = H_else.with_n_qubits(n) + _unit(_prod(n, P_A, P_B, P_C), n)
    return _finish("three_to_two", n, H0, H1, H2, H1p, [t], AncillaState.basis(t), target,
                   H_else, delta, epsilon, eta, policy)


def triangle(H_else: Hamiltonian, P_A: PauliTerm, P_B: PauliTerm, P_C: PauliTerm,
             alpha_ab, alpha_ac, *, ancilla: int | None = None, delta=None,
             epsilon: float = 0.1, eta: float = 0.1,
             policy: Policy | None = None) -> GadgetApplication:
    """Move ``alpha_ab P_A P_B + alpha_ac P_A P_C`` off qubit ``A``.

    ``H1 = H_else + (P_A^2 + a_ab^2 P_B^2 + a_ac^2 P_C^2)/2 + a_ab a_ac P_B P_C``,
    ``H2 = (-P_A + a_ab P_B + a_ac P_C) X_t / sqrt(2)``.
    """
    _check_disjoint(P_A, P_B, P_C)
    n, (t,) = _register(H_else, (P_A, P_B, P_C), ancilla)
    H0 = projector_one(t, n)
    const = (_sq(P_A) + alpha_ab ** 2 * _sq(P_B) + alpha_ac ** 2 * _sq(P_C)) / 2
    H1 = (H_else.with_n_qubits(n) + Hamiltonian.identity(n, const)
          + Hamiltonian.from_pairs(n, [(alpha_ab * alpha_ac * P_B.coefficient * P_C.coefficient,
                                        {**P_B.axis_map, **P_C.axis_map})]))
    r = 1 / math.sqrt(2)
    Xt = PauliTerm(1.0, {t: "X"})
    pairs = [(-r * P_A.coefficient, {**P_A.axis_map, t: "X"}),
             (r * alpha_ab * P_B.coefficient, {**P_B.axis_map, t: "X"}),
             (r * alpha_ac * P_C.coefficient, {**P_C.axis_map, t: "X"})]
    H2 = Hamiltonian.from_pairs(n, pairs)
    target = H_else.with_n_qubits(n) + Hamiltonian.from_pairs(n, [
        (alpha_ab * P_A.coefficient * P_B.coefficient, {**P_A.axis_map, **P_B.axis_map}),
        (alpha_ac * P_A.coefficient * P_C.coefficient, {**P_A.axis_map, **P_C.axis_map})])
    return _finish("triangle", n, H0, H1, H2, None, [t], AncillaState.basis(t), target,
                   H_else, delta, epsilon, eta, policy,
                   {"alpha_ab": alpha_ab, "alpha_ac": alpha_ac})


def crossing(H_else: Hamiltonian, P_A: PauliTerm, P_B: PauliTerm, P_C: PauliTerm,
             P_D: PauliTerm, alpha_ad, alpha_bc, *, ancilla: int | None = None, delta=None,
             epsilon: float = 0.1, eta: float = 0.1,
             policy: Policy | None = None) -> GadgetApplication:
    """Simulate the crossed pair ``a_ad P_A P_D + a_bc P_B P_C`` through one mediator.

    Only the square's sides ``AB, AC, BD, CD`` and the mediator couplings
    appear: ``H2 = (-a_ad P_A - a_bc P_B + P_C + P_D) X_t / sqrt(2)`` and
    ``H1 = H_else + (a_ad^2 P_A^2 + a_bc^2 P_B^2 + P_C^2 + P_D^2)/2
    + a_ad a_bc P_A P_B - a_ad P_A P_C - a_bc P_B P_D + P_C P_D``.
    """
    _check_disjoint(P_A, P_B, P_C, P_D)
    n, (t,) = _register(H_else, (P_A, P_B, P_C, P_D), ancilla)
    H0 = projector_one(t, n)
    cA, cB, cC, cD = (P.coefficient for P in (P_A, P_B, P_C, P_D))
    mA, mB, mC, mD = (P.axis_map for P in (P_A, P_B, P_C, P_D))
    const = (alpha_ad ** 2 * cA ** 2 + alpha_bc ** 2 * cB ** 2 + cC ** 2 + cD ** 2) / 2
    H1 = H_else.with_n_qubits(n) + Hamiltonian.identity(n, const) + Hamiltonian.from_pairs(n, [
        (alpha_ad * alpha_bc * cA * cB, {**mA, **mB}),
        (-alpha_ad * cA * cC, {**mA, **mC}),
        (-alpha_bc * cB * cD, {**mB, **mD}),
        (cC * cD, {**mC, **mD})])
    r = 1 / math.sqrt(2)
    H2 = Hamiltonian.from_pairs(n, [(-r * alpha_ad * cA, {**mA, t: "X"}),
                                    (-r * alpha_bc * cB, {**mB, t: "X"}),
                                    (r * cC, {**mC, t: "X"}),
                                    (r * cD, {**mD, t: "X"})])
    target = H_else.with_n_qubits(n) + Hamiltonian.from_pairs(n, [
        (alpha_ad * cA * cD, {**mA, **mD}), (alpha_bc * cB * cC, {**mB, **mC})])
    return _finish("crossing", n, H0, H1, H2, None, [t], AncillaState.basis(t), target,
                   H_else, delta, epsilon, eta, policy,
                   {"alpha_ad": alpha_ad, "alpha_bc": alpha_bc})


def long_range(H_else: Hamiltonian, P_A: PauliTerm, P_B: PauliTerm, chain: WChainSpec, *,
               ancilla: int | None = None, chain_qubits: Sequence[int] | None = None,
               constants: GadgetConstants | None = None, delta=None, epsilon: float = 0.1,
               eta: float = 0.1, policy: Policy | None = None) -> GadgetApplication:
    """Couple ``P_A`` and ``P_B`` through a W-state chain.

    ``H0 = H_W`` on the chain (endpoint 1 next to ``A``, endpoint ``n`` next to
    ``B``), ``H1 = H_else + (D_1 P_A^2 + D_n P_B^2) / (2C)`` and
    ``H2 = (P_A X_1 - P_B X_n) / sqrt(C)``.
    """
    _check_disjoint(P_A, P_B)
    L = chain.n
    if chain_qubits is None:
        n, qs = _register(H_else, (P_A, P_B), ancilla, L)
    else:
        qs = [int(q) for q in chain_qubits]
        if len(qs) != L:
            raise ValueError("chain_qubits must list n qubits")
        busy = set(P_A.support) | set(P_B.support) | H_else.support()
        if busy & set(qs):
            raise AncillaCollision(f"chain qubits carry data: {sorted(busy & set(qs))}")
        n = max([H_else.n_qubits, max(qs) + 1] + [max(t.support) + 1 for t in (P_A, P_B)])
    k = constants or compute_constants(chain, 1, L)
    C, D1, Dn = k.C, k.D, k.D_j
    H0 = chain_hw(qs, n, chain.gamma_coupling)
    H1 = H_else.with_n_qubits(n) + Hamiltonian.identity(n, (D1 * _sq(P_A) + Dn * _sq(P_B)) / (2 * C))
    s = 1 / math.sqrt(C)
    H2 = Hamiltonian.from_pairs(n, [(s * P_A.coefficient, {**P_A.axis_map, qs[0]: "X"}),
                                    (-s * P_B.coefficient, {**P_B.axis_map, qs[-1]: "X"})])
    target = H_else.with_n_qubits(n) + _unit(_prod(n, P_A, P_B), n)
    return _finish("long_range", n, H0, H1, H2, None, qs, AncillaState.w_chain(qs), target,
                   H_else, delta, epsilon, eta, policy,
                   {"C": C, "D": D1, "D_n": Dn, "Gamma": chain.gamma_coupling, "n": L,
                    "method": k.method})


def xy_mediator(H_else: Hamiltonian, legs: Mapping[int, float], wanted: Sequence[tuple[int, int]],
                *, ancilla: int | None = None, delta=None, epsilon: float = 0.1,
                eta: float = 0.1, policy: Policy | None = None,
                kind: str = "xy_mediator") -> GadgetApplication:
    """Hopping mediator: one ancilla ``t`` coupled by ``x_k (X_k X_t + Y_k Y_t)/2``.

    With ``O = sum_k x_k sigma^-_k`` the second-order term is ``-O^dag O / 2``,
    i.e. ``-x_k x_l (X_k X_l + Y_k Y_l) / 4`` on every leg pair plus
    ``-x_k^2 (1 - Z_k) / 4`` on each leg. ``H1`` cancels the one-body part
    and every pair not listed in ``wanted``; the listed pairs form the target.
    """
    qs = sorted(int(q) for q in legs)
    dummy = [PauliTerm(1.0, {q: "Z"}) for q in qs]
    n, (t,) = _register(H_else, dummy, ancilla)
    if t in qs:
        raise AncillaCollision("mediator coincides with a leg")
    want = {tuple(sorted(p)) for p in wanted}
    H0 = projector_one(t, n)
    one_body = []
    pair_terms = []
    target_terms = []
    for k in qs:
        x2 = legs[k] * legs[k]
        one_body += [(x2 / 4, ()), (-x2 / 4, {k: "Z"})]
    for i, k in enumerate(qs):
        for l in qs[i + 1:]:
            c = legs[k] * legs[l] / 4
            if (k, l) in want:
                target_terms += [(-c, {k: "X", l: "X"}), (-c, {k: "Y", l: "Y"})]
            else:
                pair_terms += [(c, {k: "X", l: "X"}), (c, {k: "Y", l: "Y"})]
    H1 = H_else.with_n_qubits(n) + Hamiltonian.from_pairs(n, one_body + pair_terms)
    r = 1 / math.sqrt(2)
    H2 = Hamiltonian.from_pairs(n, [p for k in qs for p in
                                    ((r * legs[k] / 2, {k: "X", t: "X"}),
                                     (r * legs[k] / 2, {k: "Y", t: "Y"}))])
    target = H_else.with_n_qubits(n) + Hamiltonian.from_pairs(n, target_terms)
    return _finish(kind, n, H0, H1, H2, None, [t], AncillaState.basis(t), target, H_else,
                   delta, epsilon, eta, policy, {"legs": {str(k): legs[k] for k in qs}})


def hopping_legs(J) -> tuple:
    """Leg weights ``(x_k, x_l)`` with ``-x_k x_l / 4 = J``."""
    s = nroot(abs(J), 2) * 2
    return (-sign(J) * s, s)


def xy_crossing(H_else: Hamiltonian, a: int, b: int, c: int, d: int, J_ad, J_bc,
                **kw) -> GadgetApplication:
    """Crossed hoppings ``J_ad (XX+YY)_ad + J_bc (XX+YY)_bc`` via one mediator."""
    xa, xd = hopping_legs(J_ad)
    xb, xc = hopping_legs(J_bc)
    legs = {a: xa, d: xd, b: xb, c: xc}
    return xy_mediator(H_else, legs, [(a, d), (b, c)], kind="xy_crossing", **kw)


def xy_subdivision(H_else: Hamiltonian, k: int, l: int, J, **kw) -> GadgetApplication:
    """Hopping ``J (X_k X_l + Y_k Y_l)`` through a mediator adjacent to both."""
    xk, xl = hopping_legs(J)
    return xy_mediator(H_else, {k: xk, l: xl}, [(k, l)], kind="xy_subdivision", **kw)


# -- splitting helpers ----------------------------------------------------

def split_product(term: PauliTerm) -> tuple[PauliTerm, PauliTerm]:
    """Split ``c * sigma`` into ``P_A P_B`` with ``P_A^2 = P_B^2 = |c|``.

    ``P_A`` takes the lowest ``ceil(k/2)`` qubits and carries the sign.
    """
    if term.weight < 2:
        raise ValueError("need weight >= 2 to split")
    k = (term.weight + 1) // 2
    axes = term.axes
    s = nroot(abs(term.coefficient), 2)
    return (PauliTerm(sign(term.coefficient) * s, axes[:k]), PauliTerm(s, axes[k:]))


def split_three(term: PauliTerm) -> tuple[PauliTerm, PauliTerm, PauliTerm]:
    """Split a weight-3 term into single-qubit factors of magnitude ``|c|^(1/3)``."""
    if term.weight != 3:
        raise ValueError("need a weight-3 term")
    s = nroot(abs(term.coefficient), 3)
    a, b, c = term.axes
    return (PauliTerm(sign(term.coefficient) * s, (a,)), PauliTerm(s, (b,)), PauliTerm(s, (c,)))


# -- parallel composition -------------------------------------------------

def apply_parallel(apps: Sequence[GadgetApplication], H_else: Hamiltonian | None = None, *,
                   delta=None, policy: Policy | None = None) -> GadgetApplication:
    """Merge gadgets with disjoint ancillas into one application.

    ``H0``, ``H1``, ``H1'``, ``H2`` and the targets add up; ``H_else`` (if
    given) is added to ``H1`` and to the target once. ``Delta`` defaults to
    the policy value for the merged ``Lambda`` and the tightest requested
    accuracies.
    """
    apps = list(apps)
    if not apps:
        raise ValueError("nothing to merge")
    if len(apps) == 1 and H_else is None and delta is None:
        return apps[0]
    orders = {a.order for a in apps}
    if len(orders) != 1:
        raise ValueError("cannot merge second- and third-order gadgets in one round")
    pi = AncillaState()
    for a in apps:
        pi = pi.merge(a.pi_minus)
    anc = set(pi.qubits())
    for a in apps:
        if anc & (a.H_else.support() | a.target.support()):
            raise AncillaCollision("an ancilla of one gadget is data of another")
    n = max([a.n_qubits for a in apps] + ([H_else.n_qubits] if H_else is not None else []))

    def total(attr):
        terms = []
        for a in apps:
            H = getattr(a, attr)
            if H is not None:
                terms.extend(H.terms)
        return Hamiltonian(n, tuple(terms))

    extra = H_else.with_n_qubits(n) if H_else is not None else Hamiltonian(n)
    H1 = total("H1") + extra
    H1p = total("H1_prime") if 3 in orders else None
    target = total("target") + extra
    else_all = total("H_else") + extra
    eps = min(a.epsilon for a in apps)
    eta = min(a.eta for a in apps)
    ancillas = tuple(q for a in apps for q in a.ancillas)
    merged = GadgetApplication("parallel", n, total("H0"), H1, total("H2"), H1p, 1.0,
                               ancillas, pi, target, else_all, eps, eta, {},
                               tuple(a.kind for a in apps))
    if delta is None:
        delta = policy_delta(merged.order, merged.lam, eps, eta, policy)
    return _replace(merged, delta=delta)


# -- residuals ------------------------------------------------------------

def _ordered(g: GadgetApplication):
    """Relabel so data qubits come first, ancillas after (sorted)."""
    data = list(g.data_qubits)
    anc = sorted(g.ancillas)
    order = data + anc
    mapping = {q: i for i, q in enumerate(order)}
    return data, anc, mapping


def _ancilla_resolvent(g: GadgetApplication, anc: list[int], mapping) -> np.ndarray:
    """Inverse of ``H0`` on the ancilla complement of its ground state."""
    na = len(anc)
    local = {q: i for i, q in enumerate(anc)}
    H0a = realize(g.H0.relabeled(local, na), backend="dense").dense()
    v = g.pi_minus.vector(anc)
    Pp = np.eye(1 << na) - np.outer(v, v.conj())
    return np.linalg.pinv(Pp @ H0a @ Pp, rcond=1e-10, hermitian=True), v


def residual_check(g: GadgetApplication, H_target: Hamiltonian | None = None) -> float:
    """Operator norm of the effective-Hamiltonian mismatch.

    Second order: ``||H_t - H1_-- + H2 G H2||``. Third order: the larger of
    ``||H1'_-- - H2 G H2||`` and ``||H_t - H1_-- - H2 G H2 G H2||``.
    """
    H_target = g.target if H_target is None else H_target
    data, anc, mapping = _ordered(g)
    nd, na = len(data), len(anc)
    N = nd + na
    if N > default_policy().dense_cap:
        from .errors import CapExceeded
        raise CapExceeded(f"{N} qubits too many for the residual check")
    G, v = _ancilla_resolvent(g, anc, mapping)
    T = np.kron(np.eye(1 << nd), v.reshape(-1, 1))
    Gfull = np.kron(np.eye(1 << nd), G)

    def mat(H):
        return realize(H.relabeled(mapping, N), backend="dense").dense()

    dmap = {q: i for i, q in enumerate(data)}
    Ht = realize(Hamiltonian(nd, tuple(t.relabeled(dmap) for t in H_target.terms)),
                 backend="dense").dense() if H_target.terms else np.zeros((1 << nd, 1 << nd))
    H1 = T.conj().T @ mat(g.H1) @ T
    H2 = mat(g.H2)
    second = T.conj().T @ H2 @ Gfull @ H2 @ T
    if g.order == 2:
        return float(np.linalg.norm(Ht - H1 + second, 2))
    H1p = T.conj().T @ mat(g.H1_prime) @ T
    third = T.conj().T @ H2 @ Gfull @ H2 @ Gfull @ H2 @ T
    r1 = np.linalg.norm(H1p - second, 2)
    r2 = np.linalg.norm(Ht - H1 - third, 2)
    return float(max(r1, r2))
