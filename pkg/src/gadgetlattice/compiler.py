"""Compilation of sparse Pauli Hamiltonians onto a 2D nearest-neighbour lattice.

Passes, each made of parallel perturbation rounds:

1. ``reduce_locality``: subdivision rounds until every term has weight
   ``<= 3``, then one 3-to-2 round.
2. ``reduce_degree``: one round subdividing every 2-body term, then triangle
   rounds until every qubit has at most four neighbours.
3. ``layout`` places the qubits on a baseline and routes the remaining long
   edges through channels (comb routing). ``localize_edges`` replaces each
   routed edge by a W chain along its path and ``remove_crossings`` resolves
   the crossings of the chains with hopping mediators.

Every round yields a ``SimulationCertificate``; consecutive certificates are
chained with ``compose_certificates``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import mpmath
import numpy as np

from .config import Policy, default_policy
from .errors import CompilationError, GadgetLatticeError, PreconditionViolated
from .gadgets import (
    GadgetApplication,
    SimulationCertificate,
    apply_parallel,
    assemble,
    certificate_for,
    compose_certificates,
    long_range,
    policy_delta,
    split_product,
    split_three,
    subdivide,
    three_to_two,
    triangle,
    xy_crossing,
    xy_subdivision,
)
from .pauli import (
    Hamiltonian,
    PauliTerm,
    as_number,
    format_coeff,
    graph_stats,
    interaction_edges,
    neighbour_degree,
    nroot,
    sign,
    to_float,
    triangle_norm_bound,
)
from .wstate import GadgetConstants, WChainSpec, compute_constants

Point = tuple[int, int]


# -- per-round bookkeeping --------------------------------------------------

@dataclass
class Stage:
    """One perturbation round."""

    pass_name: str
    round_index: int
    kind: str
    n_gadgets: int
    n_qubits: int
    delta: object
    lam: object
    epsilon: float
    eta: float
    certificate: SimulationCertificate
    app: GadgetApplication | None = field(default=None, repr=False)
    hamiltonian: Hamiltonian | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "pass": self.pass_name,
            "round": self.round_index,
            "kind": self.kind,
            "gadgets": self.n_gadgets,
            "n_qubits": self.n_qubits,
            "delta": format_coeff(self.delta),
            "lambda": format_coeff(self.lam),
            "epsilon": self.epsilon,
            "eta": self.eta,
            "certificate": self.certificate.as_dict(),
        }


class _Rounds:
    """Runs parallel rounds with a fixed per-round accuracy budget."""

    def __init__(self, epsilon: float, eta: float, policy: Policy, delta_floor=0.0,
                 dry: bool = False):
        self.epsilon = epsilon
        self.eta = eta
        self.policy = policy
        self.delta_floor = delta_floor
        self.dry = dry
        self.stages: list[Stage] = []
        self._constants: dict = {}

    def constants(self, spec: WChainSpec) -> GadgetConstants:
        key = (spec.n, spec.gamma_coupling)
        if key not in self._constants:
            self._constants[key] = compute_constants(spec, 1, spec.n)
        return self._constants[key]

    def run(self, pass_name: str, H: Hamiltonian, apps: list[GadgetApplication],
            remainder: Hamiltonian) -> Hamiltonian:
        if not apps:
            return H
        merged = apply_parallel(apps, remainder, delta=1.0)
        lam = merged.lam
        if self.dry:
            delta = math.e ** 2
        else:
            delta = policy_delta(merged.order, lam, self.epsilon, self.eta, self.policy)
            if not self.stages and delta < self.delta_floor:
                delta = as_number(self.delta_floor)
        merged = replace(merged, delta=delta, epsilon=self.epsilon, eta=self.eta)
        H_next = assemble(merged)
        cert = certificate_for(merged)
        cert = replace(cert, provenance=(f"{pass_name}:{merged.kind}",))
        self.stages.append(Stage(pass_name, len(self.stages), "+".join(sorted(set(merged.parts)))
                                 or merged.kind, len(apps), H_next.n_qubits, delta, lam,
                                 self.epsilon, self.eta, cert, merged, H_next))
        return H_next


def _split(H: Hamiltonian, pick: Callable[[PauliTerm], bool]):
    chosen = [t for t in H.terms if pick(t)]
    rest = Hamiltonian(H.n_qubits, tuple(t for t in H.terms if not pick(t)))
    return chosen, rest


# -- step 1 ---------------------------------------------------------------

def _locality_rounds(H: Hamiltonian, rounds: _Rounds) -> Hamiltonian:
    while max((t.weight for t in H.terms), default=0) > 3:
        terms, rest = _split(H, lambda t: t.weight >= 4)
        nxt = H.n_qubits
        apps = []
        for t in terms:
            P_A, P_B = split_product(t)
            apps.append(subdivide(Hamiltonian(nxt), P_A, P_B, ancilla=nxt, delta=1.0))
            nxt += 1
        H = rounds.run("reduce_locality", H, apps, rest)
    terms, rest = _split(H, lambda t: t.weight == 3)
    nxt = H.n_qubits
    apps = []
    for t in terms:
        apps.append(three_to_two(Hamiltonian(nxt), *split_three(t), ancilla=nxt, delta=1.0))
        nxt += 1
    return rounds.run("reduce_locality", H, apps, rest)


def reduce_locality(H: Hamiltonian, epsilon: float = 0.1, eta: float = 0.1,
                    policy: Policy | None = None) -> tuple[Hamiltonian, list[Stage]]:
    """Make every term at most 2-local.

    Returns the simulator and its rounds (empty for an already 2-local input).
    """
    rounds = _Rounds(epsilon, eta, policy or default_policy())
    return _locality_rounds(H, rounds), rounds.stages


# -- step 2 ---------------------------------------------------------------

def _edge_terms(H: Hamiltonian) -> dict[tuple[int, int], list[PauliTerm]]:
    out: dict[tuple[int, int], list[PauliTerm]] = {}
    for t in H.terms:
        if t.weight == 2:
            out.setdefault(tuple(t.support), []).append(t)
    return out


def _neighbours(H: Hamiltonian) -> dict[int, set[int]]:
    nb: dict[int, set[int]] = {}
    for (u, v) in _edge_terms(H):
        nb.setdefault(u, set()).add(v)
        nb.setdefault(v, set()).add(u)
    return nb


def _triangle_round(H: Hamiltonian, max_degree: int = 4):
    """Pair same-axis edges at every over-full vertex."""
    nb = _neighbours(H)
    edges = _edge_terms(H)
    used: set[tuple] = set()
    nxt = H.n_qubits
    apps = []
    for a in sorted(v for v in nb if len(nb[v]) > max_degree):
        groups: dict[str, list[tuple[PauliTerm, int]]] = {}
        for b in sorted(nb[a]):
            for t in edges[tuple(sorted((a, b)))]:
                groups.setdefault(t.axis_map[a], []).append((t, b))
        for axis in sorted(groups):
            free = [(t, b) for t, b in groups[axis] if t.axes not in used]
            while len(free) >= 2:
                t1, b = free.pop(0)
                k = next((k for k, (_, c) in enumerate(free)
                          if c not in nb.get(b, set()) and c != b), None)
                if k is None:
                    continue
                t2, c = free.pop(k)
                used.update({t1.axes, t2.axes})
                P_A = PauliTerm(1.0, {a: axis})
                P_B = PauliTerm(1.0, {b: t1.axis_map[b]})
                P_C = PauliTerm(1.0, {c: t2.axis_map[c]})
                apps.append(triangle(Hamiltonian(nxt), P_A, P_B, P_C, t1.coefficient,
                                     t2.coefficient, ancilla=nxt, delta=1.0))
                nb.setdefault(b, set()).add(c)
                nb.setdefault(c, set()).add(b)
                nxt += 1
    rest = Hamiltonian(H.n_qubits, tuple(t for t in H.terms if t.axes not in used))
    return apps, rest


def _degree_rounds(H: Hamiltonian, rounds: _Rounds, notes: list) -> Hamiltonian:
    terms, rest = _split(H, lambda t: t.weight == 2)
    nxt = H.n_qubits
    apps = []
    for t in terms:
        P_A, P_B = split_product(t)
        apps.append(subdivide(Hamiltonian(nxt), P_A, P_B, ancilla=nxt, delta=1.0))
        nxt += 1
    H = rounds.run("reduce_degree", H, apps, rest)
    while max(neighbour_degree(H).values(), default=0) > 4:
        apps, rest = _triangle_round(H)
        if not apps:
            notes.append("reduce_degree: triangle pairing stalled above degree 4")
            break
        H = rounds.run("reduce_degree", H, apps, rest)
    return H


def reduce_degree(H: Hamiltonian, epsilon: float = 0.1, eta: float = 0.1,
                  policy: Policy | None = None) -> tuple[Hamiltonian, list[Stage]]:
    """Bring every qubit of a 2-local Hamiltonian down to at most four neighbours."""
    if max((t.weight for t in H.terms), default=0) > 2:
        raise PreconditionViolated("reduce_degree needs a 2-local Hamiltonian")
    rounds = _Rounds(epsilon, eta, policy or default_policy())
    notes: list = []
    return _degree_rounds(H, rounds, notes), rounds.stages


# -- step 3: layout ---------------------------------------------------------

@dataclass
class LatticeLayout:
    """Positions and routed edges on the square lattice.

    Attributes
    ----------
    grid : (int, int)
        Width and height of the bounding box.
    positions : dict
        Qubit to lattice point.
    edges : list of (int, int)
    paths : dict
        Edge to the list of lattice points it visits, endpoints included.
    crossings : list
        ``(horizontal edge, vertical edge, point)`` triples.
    refinement : int
        Scale applied to the coarse comb layout (3 when crossings exist).
    order : list of int
        Baseline order.
    """

    grid: tuple
    positions: dict
    edges: list
    paths: dict
    crossings: list
    refinement: int = 1
    order: list = field(default_factory=list)

    def long_edges(self) -> list:
        return [e for e in self.edges if len(self.paths[e]) > 2]

    def as_dict(self) -> dict:
        return {
            "grid": list(self.grid),
            "refinement": self.refinement,
            "order": list(self.order),
            "positions": {str(q): list(p) for q, p in sorted(self.positions.items())},
            "edges": [[u, v, [list(p) for p in self.paths[(u, v)]]] for u, v in self.edges],
            "crossings": [[list(e), list(f), list(p)] for e, f, p in self.crossings],
        }


def _baseline_order(n: int, nb: dict[int, set[int]], order: str) -> list[int]:
    if order == "index":
        return list(range(n))
    if order != "dfs":
        raise ValueError(f"unknown baseline order {order!r}")
    seen: set[int] = set()
    out = []
    for s in range(n):
        if s in seen:
            continue
        stack = [s]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            out.append(v)
            stack.extend(sorted(nb.get(v, ()), reverse=True))
    return out


def _assign_sides(long_edges, caps, limit: int = 50000):
    """Choose above (+1) or below (-1) per long edge within per-vertex port caps."""
    up = {v: 0 for v in caps}
    dn = {v: 0 for v in caps}
    sides: dict = {}
    steps = [0]

    def go(k):
        if k == len(long_edges):
            return True
        steps[0] += 1
        if steps[0] > limit:
            return False
        u, v = long_edges[k]
        for s, cnt in ((1, up), (-1, dn)):
            if cnt[u] < caps[u] and cnt[v] < caps[v]:
                cnt[u] += 1
                cnt[v] += 1
                sides[(u, v)] = s
                if go(k + 1):
                    return True
                cnt[u] -= 1
                cnt[v] -= 1
        return False

    import sys
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * len(long_edges) + 100))
    try:
        ok = go(0)
    finally:
        sys.setrecursionlimit(old)
    return sides if ok else None


_PORT_DIR = {"U": (0, 1), "D": (0, -1), "L": (-1, 0), "R": (1, 0)}


def _assign_ports(v, x, edges_at, free_ports, xs):
    """Map each long edge at ``v`` to a port; side ports prefer the edge's direction."""
    best = None
    for perm in itertools.permutations(free_ports, len(edges_at)):
        cost = 0
        ok = True
        for (e, side, other), p in zip(edges_at, perm):
            if (p == "U" and side < 0) or (p == "D" and side > 0):
                ok = False
                break
            dx = xs[other] - x
            if p == "L" and dx > 0 or p == "R" and dx < 0:
                cost += 2
            elif p in "UD":
                cost += 1
        if ok and (best is None or cost < best[0]):
            best = (cost, perm)
    if best is None:
        raise CompilationError("layout", f"no port assignment at vertex {v}")
    return {e: p for (e, _, _), p in zip(edges_at, best[1])}


def _comb(n: int, pairs: list[tuple[int, int]], order: list[int], short_ok: bool):
    nb: dict[int, set[int]] = {}
    for u, v in pairs:
        nb.setdefault(u, set()).add(v)
        nb.setdefault(v, set()).add(u)
    for v in range(n):
        if len(nb.get(v, ())) > 4:
            raise CompilationError("layout", f"qubit {v} has {len(nb[v])} neighbours (> 4)")
    xs: dict[int, int] = {}
    short: set[tuple[int, int]] = set()
    x = 0
    for k, v in enumerate(order):
        if k:
            prev = order[k - 1]
            if short_ok and v in nb.get(prev, ()):
                x += 1
                short.add(tuple(sorted((prev, v))))
            else:
                x += 3
        xs[v] = x
    used_side = {v: set() for v in order}
    for u, v in short:
        a, b = (u, v) if xs[u] < xs[v] else (v, u)
        used_side[a].add("R")
        used_side[b].add("L")
    longs = sorted((tuple(sorted(e)) for e in pairs if tuple(sorted(e)) not in short),
                   key=lambda e: (min(xs[e[0]], xs[e[1]]), max(xs[e[0]], xs[e[1]])))
    caps = {v: 3 - len(used_side[v]) for v in order}
    sides = _assign_sides(longs, caps)
    if sides is None:
        return None
    ports: dict = {}
    for v in order:
        at = [(e, sides[e], e[0] if e[1] == v else e[1]) for e in longs if v in e]
        if not at:
            continue
        free = [p for p in ("U", "D", "L", "R") if p not in used_side[v]]
        for e, p in _assign_ports(v, xs[v], at, free, xs).items():
            ports[(e, v)] = p
    col = {}
    for (e, v), p in ports.items():
        col[(e, v)] = xs[v] + _PORT_DIR[p][0]
    # channel rows: nesting depth first, then left end
    info = {}
    for e in longs:
        c1, c2 = sorted((col[(e, e[0])], col[(e, e[1])]))
        info[e] = (c1, c2)
    rows = {}
    for side in (1, -1):
        es = [e for e in longs if sides[e] == side]
        depth = {}
        for e in sorted(es, key=lambda e: info[e][1] - info[e][0]):
            lo, hi = info[e]
            inner = [depth[f] for f in depth if lo < info[f][0] and info[f][1] < hi]
            depth[e] = 1 + max(inner, default=0)
        for k, e in enumerate(sorted(es, key=lambda e: (depth[e], info[e][0], info[e][1]))):
            rows[e] = side * (2 + k)
    paths = {}
    for e in longs:
        u, v = e
        r = rows[e]
        pts = [(xs[u], 0)]
        cu, cv = col[(e, u)], col[(e, v)]
        if cu != xs[u]:
            pts.append((cu, 0))
        pts.append((cu, r))
        pts.append((cv, r))
        pts.append((cv, 0))
        if cv != xs[v]:
            pts.append((xs[v], 0))
        paths[e] = pts
    for e in short:
        u, v = e
        paths[e] = [(xs[u], 0), (xs[v], 0)]
    return xs, paths


def _expand(corners: list[Point], f: int) -> list[Point]:
    """Unit-step lattice path through scaled corner points."""
    pts = [(corners[0][0] * f, corners[0][1] * f)]
    for (x0, y0), (x1, y1) in zip(corners, corners[1:]):
        x0, y0, x1, y1 = x0 * f, y0 * f, x1 * f, y1 * f
        n = abs(x1 - x0) + abs(y1 - y0)
        dx = (x1 > x0) - (x1 < x0)
        dy = (y1 > y0) - (y1 < y0)
        for k in range(1, n + 1):
            pts.append((x0 + dx * k, y0 + dy * k))
    return pts


def _crossings(paths: dict) -> list:
    """Interior points shared by two routes; each must be a right-angle crossing."""
    seen: dict[Point, list] = {}
    for e, pts in paths.items():
        for k in range(1, len(pts) - 1):
            seen.setdefault(pts[k], []).append((e, pts[k - 1], pts[k + 1]))
    out = []
    for p, uses in seen.items():
        if len(uses) < 2:
            continue
        horiz = [e for e, a, b in uses if a[1] == p[1] == b[1]]
        vert = [e for e, a, b in uses if a[0] == p[0] == b[0]]
        if len(uses) != 2 or len(horiz) != 1 or len(vert) != 1:
            raise CompilationError("layout", f"routes overlap at {p}")
        out.append((horiz[0], vert[0], p))
    return sorted(out, key=lambda c: (c[2], c[0], c[1]))


def layout(H: Hamiltonian, order: str = "index", *, refine: bool = True) -> LatticeLayout:
    """Comb routing of the 2-body interaction graph of ``H``.

    Qubits sit on the baseline ``y = 0`` in the given order (``"index"`` or
    ``"dfs"``). Consecutive connected qubits are one site apart; otherwise the
    spacing is 3. Every other edge runs from a port of each endpoint (up,
    down, left or right) to its own channel row, across, and back. Rows are
    ordered by nesting depth and then by left end, so only interleaved edges
    cross, exactly once and at right angles. With crossings the picture is
    scaled by 3, which frees the diagonal neighbours of every crossing point.
    """
    if max((t.weight for t in H.terms), default=0) > 2:
        raise CompilationError("layout", "layout needs a 2-local Hamiltonian")
    n = H.n_qubits
    pairs = sorted(_edge_terms(H))
    nb = _neighbours(H)
    base = _baseline_order(n, nb, order)
    res = _comb(n, pairs, base, short_ok=True)
    if res is None:
        res = _comb(n, pairs, base, short_ok=False)
    if res is None:
        raise CompilationError("layout", "channel side assignment failed")
    xs, corner_paths = res
    coarse = {e: _expand(p, 1) for e, p in corner_paths.items()}
    cross = _crossings(coarse)
    f = 3 if (cross and refine) else 1
    paths = {e: _expand(p, f) for e, p in corner_paths.items()}
    crossings = _crossings(paths)
    positions = {v: (xs[v] * f, 0) for v in base}
    pts = list(positions.values()) + [p for ps in paths.values() for p in ps]
    x0 = min(p[0] for p in pts)
    y0 = min(p[1] for p in pts)

    def sh(p):
        return (p[0] - x0, p[1] - y0)

    positions = {v: sh(p) for v, p in positions.items()}
    paths = {e: [sh(p) for p in ps] for e, ps in paths.items()}
    crossings = [(a, b, sh(p)) for a, b, p in crossings]
    W = max(p[0] for p in pts) - x0 + 1
    Hh = max(p[1] for p in pts) - y0 + 1
    return LatticeLayout((W, Hh), positions, sorted(paths), paths, crossings, f, base)


# -- step 3a ----------------------------------------------------------------

def _localize(H: Hamiltonian, lay: LatticeLayout, rounds: _Rounds) -> Hamiltonian:
    edges = _edge_terms(H)
    cross_pts = {p for _, _, p in lay.crossings}
    taken = set(lay.positions.values())
    nxt = H.n_qubits
    apps = []
    rewritten = set()
    for e in lay.long_edges():
        terms = edges.get(e, [])
        if len(terms) != 1:
            raise CompilationError("localize_edges", f"edge {e} carries {len(terms)} terms")
        t = terms[0]
        path = lay.paths[e]
        u = next(q for q, p in lay.positions.items() if p == path[0])
        v = e[1] if u == e[0] else e[0]
        inner = [p for p in path[1:-1] if p not in cross_pts]
        if taken & set(inner):
            raise CompilationError("localize_edges", f"route of {e} runs through an occupied site")
        taken |= set(inner)
        s = nroot(abs(t.coefficient), 2)
        P_A = PauliTerm(sign(t.coefficient) * s, {u: t.axis_map[u]})
        P_B = PauliTerm(s, {v: t.axis_map[v]})
        qs = list(range(nxt, nxt + len(inner)))
        spec = WChainSpec.for_length(len(inner), rounds.policy)
        apps.append(long_range(Hamiltonian(nxt), P_A, P_B, spec, chain_qubits=qs,
                               constants=rounds.constants(spec), delta=1.0))
        for q, p in zip(qs, inner):
            lay.positions[q] = p
        nxt += len(inner)
        rewritten.add(t.axes)
    rest = Hamiltonian(H.n_qubits, tuple(t for t in H.terms if t.axes not in rewritten))
    return rounds.run("localize_edges", H, apps, rest)


def localize_edges(lay: LatticeLayout, H: Hamiltonian, epsilon: float = 0.1, eta: float = 0.1,
                   policy: Policy | None = None) -> tuple[Hamiltonian, list[Stage]]:
    """Replace every routed long edge by a W chain along its path (one round).

    Chain qubits take the path's interior sites except crossing points; their
    positions are added to ``lay``.
    """
    rounds = _Rounds(epsilon, eta, policy or default_policy())
    return _localize(H, lay, rounds), rounds.stages


# -- step 3b ----------------------------------------------------------------

def _hop(coeffs: dict, a: int, b: int):
    x = coeffs.get(((min(a, b), "X"), (max(a, b), "X")), 0.0)
    y = coeffs.get(((min(a, b), "Y"), (max(a, b), "Y")), 0.0)
    if not x or not y or abs(x - y) > 1e-9 * max(abs(x), abs(y)):
        raise CompilationError("remove_crossings", f"pair {(a, b)} is not a hopping term")
    return x


def _at(lay: LatticeLayout) -> dict:
    return {p: q for q, p in lay.positions.items()}


def _crossing_rounds(H: Hamiltonian, lay: LatticeLayout, rounds: _Rounds) -> Hamiltonian:
    if not lay.crossings:
        return H
    at = _at(lay)
    coeffs = {t.axes: t.coefficient for t in H.terms}
    nxt = H.n_qubits
    apps = []
    drop = set()
    corners = []
    for _, _, p in lay.crossings:
        x, y = p
        a, d = at[(x - 1, y)], at[(x + 1, y)]
        b, c = at[(x, y - 1)], at[(x, y + 1)]
        if p in at:
            raise CompilationError("remove_crossings", f"crossing point {p} is occupied")
        apps.append(xy_crossing(Hamiltonian(nxt), a, b, c, d, _hop(coeffs, a, d), _hop(coeffs, b, c),
                                ancilla=nxt, delta=1.0))
        lay.positions[nxt] = p
        nxt += 1
        for k, l in ((a, d), (b, c)):
            drop |= {((min(k, l), "X"), (max(k, l), "X")), ((min(k, l), "Y"), (max(k, l), "Y"))}
        corners += [(a, b, (x - 1, y - 1)), (a, c, (x - 1, y + 1)),
                    (d, b, (x + 1, y - 1)), (d, c, (x + 1, y + 1))]
    rest = Hamiltonian(H.n_qubits, tuple(t for t in H.terms if t.axes not in drop))
    H = rounds.run("remove_crossings", H, apps, rest)
    # the mediators leave hoppings between diagonal neighbours; route each
    # through the free corner site they share
    at = _at(lay)
    coeffs = {t.axes: t.coefficient for t in H.terms}
    nxt = H.n_qubits
    apps = []
    drop = set()
    for k, l, p in corners:
        if p in at:
            raise CompilationError("remove_crossings", f"corner {p} is occupied")
        apps.append(xy_subdivision(Hamiltonian(nxt), k, l, _hop(coeffs, k, l), ancilla=nxt, delta=1.0))
        lay.positions[nxt] = p
        at[p] = nxt
        nxt += 1
        drop |= {((min(k, l), "X"), (max(k, l), "X")), ((min(k, l), "Y"), (max(k, l), "Y"))}
    rest = Hamiltonian(H.n_qubits, tuple(t for t in H.terms if t.axes not in drop))
    return rounds.run("remove_crossings", H, apps, rest)


def remove_crossings(lay: LatticeLayout, H: Hamiltonian, epsilon: float = 0.1,
                     eta: float = 0.1, policy: Policy | None = None
                     ) -> tuple[Hamiltonian, list[Stage]]:
    """Resolve every crossing of two chains.

    A hopping mediator on the crossing point carries both crossed links; a
    second round of two-leg mediators on the diagonal sites removes the
    side hoppings it leaves between the four legs.
    """
    rounds = _Rounds(epsilon, eta, policy or default_policy())
    return _crossing_rounds(H, lay, rounds), rounds.stages


# -- full pipeline ------------------------------------------------------------

@dataclass
class CompilationReport:
    """Outcome and structural checks of a compilation."""

    n_input: int
    kappa: int
    delta: int
    mu0: float
    n_total: int
    stages: list
    certificate: SimulationCertificate | None
    chain_ok: bool
    chain_errors: list
    final_kappa: int
    final_degree: int
    nearest_neighbour: bool
    crossings_remaining: int
    mu: object
    c_N: float
    epsilon: float
    eta: float
    notes: list = field(default_factory=list)

    @property
    def n_ancillas(self) -> int:
        return self.n_total - self.n_input

    @property
    def n_bound(self) -> float:
        return self.c_N * self.n_input ** 2 * self.kappa ** 2 * self.delta ** 2

    @property
    def n_bound_ok(self) -> bool:
        return self.n_total <= self.n_bound

    @property
    def rounds(self) -> int:
        return len(self.stages)

    @property
    def budget_ok(self) -> bool:
        c = self.certificate
        return c is None or (c.epsilon <= self.epsilon and c.eta <= self.eta)

    @property
    def log10_mu(self) -> float:
        return float(mpmath.log10(mpmath.mpf(self.mu))) if self.mu else float("-inf")

    @property
    def passed(self) -> bool:
        return (self.final_kappa <= 2 and self.final_degree <= 4 and self.nearest_neighbour
                and self.crossings_remaining == 0 and self.chain_ok and self.n_bound_ok
                and self.budget_ok)

    def as_dict(self) -> dict:
        return {
            "n_input": self.n_input,
            "kappa": self.kappa,
            "delta": self.delta,
            "mu0": self.mu0,
            "N_total": self.n_total,
            "ancillas": self.n_ancillas,
            "N_bound": self.n_bound,
            "c_N": self.c_N,
            "N_bound_ok": self.n_bound_ok,
            "rounds": self.rounds,
            "mu": format_coeff(self.mu),
            "log10_mu": self.log10_mu,
            "final_kappa": self.final_kappa,
            "final_degree": self.final_degree,
            "nearest_neighbour": self.nearest_neighbour,
            "crossings_remaining": self.crossings_remaining,
            "certificate_chain_ok": self.chain_ok,
            "certificate_chain_errors": self.chain_errors,
            "epsilon_requested": self.epsilon,
            "eta_requested": self.eta,
            "budget_ok": self.budget_ok,
            "passed": self.passed,
            "notes": self.notes,
            "stages": [s.as_dict() for s in self.stages],
        }


@dataclass
class CompilationResult:
    hamiltonian: Hamiltonian
    layout: LatticeLayout
    report: CompilationReport

    def certificate_chain(self) -> dict:
        r = self.report
        return {
            "final": r.certificate.as_dict() if r.certificate else None,
            "stages": [s.as_dict() for s in r.stages],
            "norm_target": format_coeff(self.target_norm) if hasattr(self, "target_norm") else None,
        }


def _max_strength(H: Hamiltonian):
    vals = [abs(t.coefficient) for t in H.terms if t.weight > 0]
    return max(vals, default=0.0)


def _structure(H: Hamiltonian, lay: LatticeLayout) -> tuple[int, int, bool]:
    kappa = max((t.weight for t in H.terms), default=0)
    deg = max(neighbour_degree(H).values(), default=0)
    nn = True
    for (u, v) in interaction_edges(H):
        pu, pv = lay.positions.get(u), lay.positions.get(v)
        if pu is None or pv is None or abs(pu[0] - pv[0]) + abs(pu[1] - pv[1]) != 1:
            nn = False
            break
    return kappa, deg, nn


def compose_chain(stages: Sequence[Stage], normC) -> tuple[SimulationCertificate | None, list]:
    """Compose round certificates first to last; collect precondition failures."""
    cert = None
    errors = []
    for st in stages:
        if cert is None:
            cert = st.certificate
            continue
        try:
            cert = compose_certificates(st.certificate, cert, normC)
        except PreconditionViolated as exc:
            errors.append(f"round {st.round_index}: {exc}")
            return None, errors
    return cert, errors


def _count_rounds(H: Hamiltonian, policy: Policy) -> int:
    dry = _Rounds(0.1, 0.1, policy, dry=True)
    notes: list = []
    H1 = _locality_rounds(H, dry)
    H2 = _degree_rounds(H1, dry, notes)
    lay = layout(H2, "dfs")
    return len(dry.stages) + (1 if lay.long_edges() else 0) + (2 if lay.crossings else 0)


def compile_hamiltonian(H: Hamiltonian, epsilon: float = 0.1, eta: float = 0.1,
                        policy: Policy | None = None) -> CompilationResult:
    """Run all passes and check the result.

    The requested accuracies are split evenly over ``R + 1`` shares for ``R``
    rounds; each round receives one share (``epsilon`` clamped to
    ``||H||``). The first round's ``Delta`` is raised if needed so that every
    transitivity precondition holds and the cross terms of the composition
    fit in the last share.
    """
    pol = policy or default_policy()
    if not H.terms or all(t.weight == 0 for t in H.terms):
        raise CompilationError("compile", "empty Hamiltonian")
    if not (epsilon > 0 and eta > 0):
        raise CompilationError("compile", "epsilon and eta must be positive")
    stats = graph_stats(H)
    normC = triangle_norm_bound(H)
    stage = "count"
    try:
        R = _count_rounds(H, pol)
        eps_r = min(epsilon / (R + 1), to_float(normC))
        eta_r = eta / (R + 1)
        # composition adds eps_i ||C|| / D and eps_i / D per round, where D is
        # about half the first Delta; size D so both stay within one share
        D = max((R + 1) * normC, mpmath.mpf(R * (R + 1)) * eps_r / eta, 3 * epsilon)
        floor = 2 * (D + normC + 4 * epsilon)
        rounds = _Rounds(eps_r, eta_r, pol, delta_floor=floor)
        notes: list = []
        stage = "reduce_locality"
        H1 = _locality_rounds(H, rounds)
        stage = "reduce_degree"
        H2 = _degree_rounds(H1, rounds, notes)
        stage = "layout"
        lay = layout(H2, "dfs")
        stage = "localize_edges"
        H3 = _localize(H2, lay, rounds)
        stage = "remove_crossings"
        H4 = _crossing_rounds(H3, lay, rounds)
    except CompilationError:
        raise
    except GadgetLatticeError as exc:
        raise CompilationError(stage, exc) from exc
    for q in range(H4.n_qubits):
        if q not in lay.positions:
            raise CompilationError("layout", f"qubit {q} has no lattice site")
    pts = list(lay.positions.values())
    x0, y0 = min(p[0] for p in pts), min(p[1] for p in pts)
    lay.positions = {q: (p[0] - x0, p[1] - y0) for q, p in sorted(lay.positions.items())}
    lay.grid = (max(p[0] for p in lay.positions.values()) + 1,
                max(p[1] for p in lay.positions.values()) + 1)
    cert, errs = compose_chain(rounds.stages, normC)
    kappa, deg, nn = _structure(H4, lay)
    final = H4.with_label(f"{H.label or 'target'}_sim")
    report = CompilationReport(
        H.n_qubits, stats.kappa, stats.delta, float(stats.mu0), H4.n_qubits, rounds.stages,
        cert, not errs, errs, kappa, deg, nn, 0, _max_strength(H4), pol.c_N,
        epsilon, eta, notes)
    res = CompilationResult(final, lay, report)
    res.target_norm = normC
    return res


compile = compile_hamiltonian


# -- artifacts ------------------------------------------------------------------

def write_artifacts(result: CompilationResult, out_dir, name: str) -> list:
    """Write ``<name>.sim.ham``, ``.layout.json``, ``.cert.json`` and ``.report.json``."""
    from pathlib import Path
    from .pauli import serialize_ham

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        f"{name}.sim.ham": serialize_ham(result.hamiltonian),
        f"{name}.layout.json": json.dumps(result.layout.as_dict(), indent=1, sort_keys=True),
        f"{name}.cert.json": json.dumps(result.certificate_chain(), indent=1, sort_keys=True),
        f"{name}.report.json": json.dumps(result.report.as_dict(), indent=1, sort_keys=True),
    }
    paths = []
    for fn, text in files.items():
        p = out / fn
        p.write_text(text if text.endswith("\n") else text + "\n")
        paths.append(p)
    return paths


def render_dot(lay: LatticeLayout, H: Hamiltonian | None = None) -> str:
    """Graphviz description with pinned positions."""
    lines = ["graph lattice {", "  node [shape=circle, width=0.2, label=\"\"];"]
    for q, (x, y) in sorted(lay.positions.items()):
        lines.append(f"  q{q} [pos=\"{x},{y}!\", tooltip=\"{q}\"];")
    pairs = sorted(interaction_edges(H)) if H is not None else \
        [e for e in lay.edges if len(lay.paths[e]) == 2]
    for u, v in pairs:
        lines.append(f"  q{u} -- q{v};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_svg(lay: LatticeLayout, H: Hamiltonian | None = None, scale: int = 12) -> str:
    """Static picture: qubits as dots, couplings or routed paths as lines."""
    W, Hh = lay.grid
    pad = scale

    def xy(p):
        return pad + p[0] * scale, pad + (Hh - 1 - p[1]) * scale

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W * scale + 2 * pad}" '
             f'height="{Hh * scale + 2 * pad}">']
    if H is not None:
        for u, v in sorted(interaction_edges(H)):
            if u in lay.positions and v in lay.positions:
                (x1, y1), (x2, y2) = xy(lay.positions[u]), xy(lay.positions[v])
                parts.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="black"/>')
    else:
        for e in lay.edges:
            pts = " ".join(f"{a},{b}" for a, b in map(xy, lay.paths[e]))
            parts.append(f'<polyline points="{pts}" fill="none" stroke="black"/>')
        for _, _, p in lay.crossings:
            x, y = xy(p)
            parts.append(f'<circle cx="{x}" cy="{y}" r="{scale / 3:.1f}" fill="red"/>')
    for q, p in sorted(lay.positions.items()):
        x, y = xy(p)
        parts.append(f'<circle cx="{x}" cy="{y}" r="{scale / 5:.1f}" fill="steelblue">'
                     f'<title>{q}</title></circle>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -- random instances -------------------------------------------------------------

def random_sparse_hamiltonian(n: int, kappa: int = 4, delta: int = 4, n_terms: int | None = None,
                              seed: int = 0) -> Hamiltonian:
    """Random Pauli Hamiltonian with term weight ``<= kappa`` and qubit degree ``<= delta``."""
    rng = np.random.default_rng(seed)
    load = [0] * n
    terms = []
    target = n_terms if n_terms is not None else max(1, (n * delta) // max(2, kappa))
    attempts = 0
    while len(terms) < target and attempts < 50 * target:
        attempts += 1
        free = [q for q in range(n) if load[q] < delta]
        if not free:
            break
        w = int(rng.integers(1, min(kappa, len(free)) + 1))
        qs = sorted(int(q) for q in rng.choice(free, size=w, replace=False))
        axes = {q: "XYZ"[int(rng.integers(3))] for q in qs}
        key = tuple(sorted(axes.items()))
        if any(t.axes == key for t in terms):
            continue
        c = float(np.round(rng.uniform(0.2, 1.0) * rng.choice([-1, 1]), 3))
        terms.append(PauliTerm(c, axes))
        for q in qs:
            load[q] += 1
    return Hamiltonian(n, tuple(terms), f"random_{n}_{seed}")


BUILTIN_INSTANCES = ("repetition3", "repetition4", "repetition5", "repetition6", "repetition7",
                     "steane", "surface2")


def n_ratio(report: CompilationReport) -> float:
    """``N / (n^2 kappa^2 delta^2)`` of a compiled instance."""
    return report.n_total / (report.n_input ** 2 * report.kappa ** 2 * report.delta ** 2)


def predicted_size(H: Hamiltonian, policy: Policy | None = None) -> int:
    """Final qubit count of ``compile_hamiltonian(H)`` without building gadgets.

    Runs the structural passes only: original and mediator qubits, one chain
    qubit per free interior route point and five mediators per crossing.
    """
    dry = _Rounds(0.1, 0.1, policy or default_policy(), dry=True)
    H2 = _degree_rounds(_locality_rounds(H, dry), dry, [])
    lay = layout(H2, "dfs")
    cross = {c[-1] for c in lay.crossings}
    chain = sum(sum(1 for p in lay.paths[e][1:-1] if p not in cross)
                for e in lay.long_edges())
    return H2.n_qubits + chain + 5 * len(lay.crossings)


def structural_ratio(H: Hamiltonian) -> float:
    """``predicted_size(H) / (n^2 kappa^2 delta^2)`` using the input statistics."""
    g = graph_stats(H)
    return predicted_size(H) / (H.n_qubits ** 2 * g.kappa ** 2 * g.delta ** 2)


def calibrate_c_N(names: Sequence[str] = BUILTIN_INSTANCES, epsilon: float = 0.1,
                  eta: float = 0.1, survey: bool = True) -> tuple[float, dict]:
    """Smallest power of two covering every calibration ratio.

    The calibration set is the builtin instances, compiled in full, and when
    ``survey`` is set a fixed grid of random sparse instances with
    ``n <= 12`` and ``kappa, delta <= 4``, sized structurally.
    """
    from .codes import build_code_hamiltonian, builtin

    ratios = {}
    for name in names:
        res = compile_hamiltonian(build_code_hamiltonian(builtin(name)), epsilon, eta)
        ratios[name] = n_ratio(res.report)
    if survey:
        for n, k, d, seed in itertools.product(range(2, 13), (2, 3, 4), (1, 2, 3, 4),
                                               range(4)):
            H = random_sparse_hamiltonian(n, k, d, seed=seed)
            ratios[f"random(n={n},kappa={k},delta={d},seed={seed})"] = structural_ratio(H)
    worst = max(ratios.values())
    return 2.0 ** math.ceil(math.log2(worst)), ratios
