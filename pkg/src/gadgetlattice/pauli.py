"""Pauli strings, the Hamiltonian IR and matrix realization.

Coefficients are real. They may be plain floats or ``mpmath.mpf`` values;
the latter appear once compiler energy scales outgrow double precision.
Qubit 0 is the most significant bit of a basis index (Kronecker order).
"""
from __future__ import annotations

import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import mpmath
import numpy as np
import scipy.sparse as sp

from .config import default_policy
from .errors import CapExceeded, IndexOutOfRange, ParseError

AXES = ("X", "Y", "Z")
MERGE_TOL = 1e-14

_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("Y", "I"): (1, "Y"), ("Z", "I"): (1, "Z"),
    ("X", "X"): (1, "I"), ("Y", "Y"): (1, "I"), ("Z", "Z"): (1, "I"),
    ("X", "Y"): (1j, "Z"), ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"), ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"), ("X", "Z"): (-1j, "Y"),
}


def pauli_mul(a: str, b: str) -> tuple[complex, str]:
    """Product of two single-qubit Paulis.

    Returns
    -------
    phase : complex
        One of 1, -1, 1j, -1j.
    result : str
        ``"I"``, ``"X"``, ``"Y"`` or ``"Z"``.
    """
    try:
        return _MUL[(a, b)]
    except KeyError:
        raise ValueError(f"not a Pauli pair: {(a, b)!r}") from None


# -- scalar helpers -------------------------------------------------------

def is_finite(x) -> bool:
    if isinstance(x, mpmath.mpf):
        return bool(mpmath.isfinite(x))
    return math.isfinite(x)


def to_float(x) -> float:
    return float(x)


def format_coeff(x) -> str:
    """Deterministic text form that parses back to the same value."""
    if isinstance(x, mpmath.mpf):
        f = float(x)
        if math.isfinite(f) and f != 0.0 and mpmath.mpf(f) == x:
            return repr(f)
        return mpmath.nstr(x, 17, min_fixed=1, max_fixed=0)
    return repr(float(x))


def parse_coeff(s: str):
    f = float(s)
    if math.isfinite(f) and not (f == 0.0 and any(ch in s for ch in "123456789")):
        return f
    v = mpmath.mpf(s)
    if not mpmath.isfinite(v):
        raise ValueError(f"non-finite coefficient {s!r}")
    return v


def sign(x) -> int:
    return 1 if x >= 0 else -1


def nroot(x, k: int):
    """Real ``k``-th root of a nonnegative float or mpf."""
    if x < 0:
        raise ValueError("nroot needs x >= 0")
    if isinstance(x, mpmath.mpf):
        return mpmath.root(x, k)
    r = x ** (1.0 / k)
    # snap exact powers (8 ** (1/3) is 2.0 only up to rounding)
    rr = round(r)
    if rr and rr ** k == x:
        return float(rr)
    return r


def as_number(x):
    """Float when representable, otherwise mpf."""
    if isinstance(x, mpmath.mpf):
        f = float(x)
        if math.isfinite(f) and abs(f) < 1e300:
            return f
    return x


# -- terms ----------------------------------------------------------------

@dataclass(frozen=True)
class PauliTerm:
    """Real multiple of a Pauli string.

    Parameters
    ----------
    coefficient : float or mpmath.mpf
        Nonzero finite weight.
    axes : mapping or sequence of (qubit, axis)
        Non-identity factors. Empty axes denote a multiple of the identity.
    """

    coefficient: object
    axes: tuple = ()

    def __post_init__(self):
        items = self.axes.items() if isinstance(self.axes, Mapping) else self.axes
        norm = []
        seen = set()
        for q, a in items:
            q = int(q)
            a = str(a).upper()
            if a not in AXES:
                raise ValueError(f"bad axis {a!r}")
            if q < 0:
                raise ValueError(f"negative qubit index {q}")
            if q in seen:
                raise ValueError(f"qubit {q} repeated in one term")
            seen.add(q)
            norm.append((q, a))
        object.__setattr__(self, "axes", tuple(sorted(norm)))
        c = self.coefficient
        if not isinstance(c, mpmath.mpf):
            c = float(c)
        if not is_finite(c):
            raise ValueError("coefficient must be finite")
        if c == 0:
            raise ValueError("stored terms need a nonzero coefficient")
        object.__setattr__(self, "coefficient", c)

    @property
    def weight(self) -> int:
        return len(self.axes)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.axes)

    @property
    def axis_map(self) -> dict[int, str]:
        return dict(self.axes)

    def scaled(self, s) -> "PauliTerm":
        c = self.coefficient * s
        if c == 0 or not is_finite(c):
            return PauliTerm(c, self.axes)
        return _term(c, self.axes)

    def with_coefficient(self, c) -> "PauliTerm":
        return PauliTerm(c, self.axes)

    def shifted(self, offset: int) -> "PauliTerm":
        return PauliTerm(self.coefficient, tuple((q + offset, a) for q, a in self.axes))

    def relabeled(self, mapping: Mapping[int, int]) -> "PauliTerm":
        return PauliTerm(self.coefficient, tuple((mapping[q], a) for q, a in self.axes))

    def label(self) -> str:
        return " ".join(f"{a}{q}" for q, a in self.axes) or "I"

    def __str__(self) -> str:
        return f"{format_coeff(self.coefficient)} {self.label()}"


def string_product(a: tuple, b: tuple) -> tuple[complex, tuple]:
    """Multiply two normalized axis tuples; returns (phase, axes)."""
    da, db = dict(a), dict(b)
    phase = 1
    out = []
    for q in sorted(set(da) | set(db)):
        ph, r = pauli_mul(da.get(q, "I"), db.get(q, "I"))
        phase *= ph
        if r != "I":
            out.append((q, r))
    return phase, tuple(out)


def _term(c, axes: tuple) -> PauliTerm:
    """Term from a normalized axes tuple and a finite nonzero coefficient."""
    t = object.__new__(PauliTerm)
    object.__setattr__(t, "coefficient", c if isinstance(c, mpmath.mpf) else float(c))
    object.__setattr__(t, "axes", axes)
    return t


# -- Hamiltonians ---------------------------------------------------------

@dataclass(frozen=True)
class GraphStats:
    kappa: int
    delta: int
    mu0: object
    n_terms: int

    def as_tuple(self):
        return (self.kappa, self.delta, self.mu0, self.n_terms)


@dataclass(frozen=True)
class Hamiltonian:
    """Sum of real Pauli terms on ``n_qubits`` qubits.

    Terms with identical axes are merged on construction and merged
    coefficients below ``1e-14`` in magnitude are dropped. Terms are kept
    sorted by axes so equal Hamiltonians compare equal.
    """

    n_qubits: int
    terms: tuple = ()
    label: str = ""

    def __post_init__(self):
        acc: dict[tuple, object] = {}
        keep: dict[tuple, PauliTerm | None] = {}
        n = int(self.n_qubits)
        for t in self.terms:
            if not isinstance(t, PauliTerm):
                t = PauliTerm(*t)
            if t.axes and t.axes[-1][0] >= n:
                raise IndexOutOfRange(f"qubit {t.axes[-1][0]} not below n_qubits={n}")
            k = t.axes
            if k in acc:
                acc[k] = acc[k] + t.coefficient
                keep[k] = None
            else:
                acc[k] = t.coefficient
                keep[k] = t
        merged = tuple(
            keep[k] or _term(c, k)
            for k, c in sorted(acc.items(), key=lambda kv: (len(kv[0]), kv[0]))
            if keep[k] is not None or abs(c) >= MERGE_TOL
        )
        object.__setattr__(self, "terms", merged)
        object.__setattr__(self, "n_qubits", n)

    @classmethod
    def _trusted(cls, n_qubits: int, terms: tuple, label: str) -> "Hamiltonian":
        # terms already merged, sorted and in range
        h = object.__new__(cls)
        object.__setattr__(h, "n_qubits", int(n_qubits))
        object.__setattr__(h, "terms", terms)
        object.__setattr__(h, "label", label)
        return h

    # construction helpers
    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable, label: str = "") -> "Hamiltonian":
        return cls(n_qubits, tuple(terms), label)

    @classmethod
    def from_pairs(cls, n_qubits: int, pairs: Iterable, label: str = "") -> "Hamiltonian":
        """Build from ``(coefficient, axes)`` pairs, skipping zero weights."""
        return cls(n_qubits, tuple(PauliTerm(c, ax) for c, ax in pairs if c != 0), label)

    @classmethod
    def zero(cls, n_qubits: int, label: str = "") -> "Hamiltonian":
        return cls(n_qubits, (), label)

    @classmethod
    def identity(cls, n_qubits: int, c=1.0) -> "Hamiltonian":
        return cls(n_qubits, (PauliTerm(c, ()),)) if c != 0 else cls(n_qubits)

    @classmethod
    def single(cls, n_qubits: int, coefficient, axes) -> "Hamiltonian":
        return cls(n_qubits, (PauliTerm(coefficient, axes),))

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def with_n_qubits(self, n: int) -> "Hamiltonian":
        if n >= self.n_qubits:
            return Hamiltonian._trusted(n, self.terms, self.label)
        return Hamiltonian(n, self.terms, self.label)

    def with_label(self, label: str) -> "Hamiltonian":
        return Hamiltonian._trusted(self.n_qubits, self.terms, label)

    def __add__(self, other: "Hamiltonian") -> "Hamiltonian":
        n = max(self.n_qubits, other.n_qubits)
        return Hamiltonian(n, self.terms + other.terms, self.label)

    def __sub__(self, other: "Hamiltonian") -> "Hamiltonian":
        return self + other.scaled(-1)

    def __neg__(self) -> "Hamiltonian":
        return self.scaled(-1)

    def scaled(self, s) -> "Hamiltonian":
        if s == 0:
            return Hamiltonian(self.n_qubits, (), self.label)
        return Hamiltonian(self.n_qubits, tuple(t.scaled(s) for t in self.terms), self.label)

    def __mul__(self, other):
        if isinstance(other, Hamiltonian):
            return multiply(self, other)
        return self.scaled(other)

    __rmul__ = scaled

    def relabeled(self, mapping: Mapping[int, int], n_qubits: int | None = None) -> "Hamiltonian":
        n = self.n_qubits if n_qubits is None else n_qubits
        return Hamiltonian(n, tuple(t.relabeled(mapping) for t in self.terms), self.label)

    def constant(self):
        for t in self.terms:
            if t.weight == 0:
                return t.coefficient
        return 0.0

    def without_constant(self) -> "Hamiltonian":
        return Hamiltonian(self.n_qubits, tuple(t for t in self.terms if t.weight), self.label)

    def support(self) -> set[int]:
        return {q for t in self.terms for q in t.support}

    def coefficient_of(self, axes) -> object:
        key = PauliTerm(1.0, axes).axes
        for t in self.terms:
            if t.axes == key:
                return t.coefficient
        return 0.0

    def stats(self) -> GraphStats:
        return graph_stats(self)

    def __str__(self) -> str:
        return serialize_ham(self)


def multiply(a: Hamiltonian, b: Hamiltonian, tol: float = 1e-12) -> Hamiltonian:
    """Operator product ``a @ b``; the result must be Hermitian.

    Raises
    ------
    ValueError
        If the product has an imaginary part, i.e. is not Hermitian.
    """
    re_acc: dict[tuple, object] = defaultdict(float)
    im_acc: dict[tuple, object] = defaultdict(float)
    for s in a.terms:
        for t in b.terms:
            ph, axes = string_product(s.axes, t.axes)
            ph = complex(ph)
            c = s.coefficient * t.coefficient
            if ph == 1:
                re_acc[axes] += c
            elif ph == -1:
                re_acc[axes] -= c
            elif ph == 1j:
                im_acc[axes] += c
            else:
                im_acc[axes] -= c
    scale = max([abs(s.coefficient) for s in a.terms] + [0.0]) * max(
        [abs(t.coefficient) for t in b.terms] + [0.0])
    for k, v in im_acc.items():
        if abs(v) > tol * max(scale, 1.0):
            raise ValueError(f"product is not Hermitian (imaginary weight on {k})")
    n = max(a.n_qubits, b.n_qubits)
    return Hamiltonian(n, tuple(PauliTerm(c, k) for k, c in re_acc.items() if c != 0))


def anticommutator_half(a: Hamiltonian, b: Hamiltonian) -> Hamiltonian:
    """``(a b + b a) / 2``, always Hermitian for Hermitian inputs."""
    return Hamiltonian(max(a.n_qubits, b.n_qubits), _sym_terms(a, b))


def _sym_terms(a, b):
    acc: dict[tuple, object] = defaultdict(float)
    for s in a.terms:
        for t in b.terms:
            ph, axes = string_product(s.axes, t.axes)
            ph = complex(ph)
            if ph.imag == 0:
                acc[axes] += ph.real * s.coefficient * t.coefficient
    return tuple(PauliTerm(c, k) for k, c in acc.items() if c != 0)


def projector_one(q: int, n_qubits: int, c=1.0) -> Hamiltonian:
    """``c |1><1|_q = c (1 - Z_q) / 2``."""
    return Hamiltonian(n_qubits, (PauliTerm(c / 2, ()), PauliTerm(-c / 2, {q: "Z"})))


# -- structure ------------------------------------------------------------

@dataclass(frozen=True)
class InteractionHypergraph:
    """Vertices are qubits; hyperedge ``(i, S)`` is term ``i`` with support ``S``."""

    vertices: tuple
    hyperedges: tuple

    def degree(self, v: int) -> int:
        return sum(1 for _, s in self.hyperedges if v in s)

    def degrees(self) -> dict[int, int]:
        d = {v: 0 for v in self.vertices}
        for _, s in self.hyperedges:
            for v in s:
                d[v] += 1
        return d


def hypergraph(H: Hamiltonian) -> InteractionHypergraph:
    edges = tuple((i, frozenset(t.support)) for i, t in enumerate(H.terms) if t.weight)
    return InteractionHypergraph(tuple(range(H.n_qubits)), edges)


def graph_stats(H: Hamiltonian) -> GraphStats:
    """Locality, term degree, largest coefficient and term count.

    Identity terms are ignored: they act on no qubit.
    """
    real = [t for t in H.terms if t.weight]
    kappa = max((t.weight for t in real), default=0)
    deg = defaultdict(int)
    for t in real:
        for q in t.support:
            deg[q] += 1
    delta = max(deg.values(), default=0)
    mu0 = max((abs(t.coefficient) for t in real), default=0.0)
    return GraphStats(kappa, delta, mu0, len(real))


def interaction_edges(H: Hamiltonian) -> set[tuple[int, int]]:
    """Distinct qubit pairs coupled by some weight-2 term."""
    out = set()
    for t in H.terms:
        if t.weight == 2:
            a, b = t.support
            out.add((a, b))
    return out


def neighbour_degree(H: Hamiltonian) -> dict[int, int]:
    """Number of distinct interaction partners of each qubit (2-local terms)."""
    deg = {q: 0 for q in range(H.n_qubits)}
    for a, b in interaction_edges(H):
        deg[a] += 1
        deg[b] += 1
    return deg


def triangle_norm_bound(H: Hamiltonian):
    """Sum of absolute coefficients, an upper bound on the operator norm."""
    total = 0.0
    for t in H.terms:
        total = total + abs(t.coefficient)
    return total


# -- matrices -------------------------------------------------------------

@dataclass(frozen=True)
class OperatorMatrix:
    """Explicit matrix of a Hamiltonian.

    ``storage`` is a dense ``ndarray`` or a ``scipy.sparse`` CSR matrix.
    """

    dimension: int
    storage: object
    hermitian: bool = True

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.storage)

    def dense(self) -> np.ndarray:
        return self.storage.toarray() if self.is_sparse else np.asarray(self.storage)

    def sparse(self):
        return self.storage.tocsr() if self.is_sparse else sp.csr_matrix(self.storage)


def _masks(term: PauliTerm, n: int) -> tuple[int, int, int]:
    xm = zm = 0
    ny = 0
    for q, a in term.axes:
        bit = 1 << (n - 1 - q)
        if a in ("X", "Y"):
            xm |= bit
        if a in ("Z", "Y"):
            zm |= bit
        if a == "Y":
            ny += 1
    return xm, zm, ny


def _popcount_parity(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    par = np.zeros_like(v)
    while np.any(v):
        par ^= v & 1
        v >>= 1
    return par


def apply_term_columns(term: PauliTerm, n: int):
    """Row indices and values of the (one nonzero per column) Pauli matrix."""
    dim = 1 << n
    cols = np.arange(dim, dtype=np.int64)
    xm, zm, ny = _masks(term, n)
    rows = cols ^ xm
    sign = 1 - 2 * _popcount_parity(cols & zm)
    vals = (1j ** ny) * float(term.coefficient) * sign
    return rows, cols, vals


def realize(H: Hamiltonian, backend: str = "auto", cap: int | None = None) -> OperatorMatrix:
    """Matrix of ``H`` in the computational basis.

    Parameters
    ----------
    backend : {"auto", "dense", "sparse"}
        ``auto`` picks dense up to the policy's dense cap.
    cap : int, optional
        Largest allowed register; defaults to the policy cap (env overridable).
    """
    pol = default_policy()
    cap = pol.max_qubits if cap is None else cap
    n = H.n_qubits
    if n > cap:
        raise CapExceeded(f"{n} qubits exceeds cap {cap}")
    if backend == "auto":
        backend = "dense" if n <= pol.dense_cap else "sparse"
    if backend == "dense" and n > pol.dense_cap:
        raise CapExceeded(f"{n} qubits exceeds the dense cap {pol.dense_cap}")
    dim = 1 << n
    rows_l, cols_l, vals_l = [], [], []
    for t in H.terms:
        r, c, v = apply_term_columns(t, n)
        rows_l.append(r)
        cols_l.append(c)
        vals_l.append(np.broadcast_to(v, r.shape).astype(complex))
    if rows_l:
        rows = np.concatenate(rows_l)
        cols = np.concatenate(cols_l)
        vals = np.concatenate(vals_l)
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=complex)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    M.sum_duplicates()
    if not np.any(M.data.imag):
        M = M.real.tocsr()
    if backend == "dense":
        return OperatorMatrix(dim, M.toarray(), True)
    return OperatorMatrix(dim, M, True)


def hermiticity_error(M: OperatorMatrix) -> float:
    """Relative ``||A - A^dagger||`` in Frobenius norm."""
    if M.is_sparse:
        A = M.storage
        d = sp.linalg.norm(A - A.conj().T)
        s = sp.linalg.norm(A)
    else:
        A = M.storage
        d = np.linalg.norm(A - A.conj().T)
        s = np.linalg.norm(A)
    return float(d / s) if s else float(d)


def dense(H: Hamiltonian) -> np.ndarray:
    return realize(H, backend="dense").dense()


def pauli_string_matrix(axes, n: int) -> np.ndarray:
    return dense(Hamiltonian(n, (PauliTerm(1.0, axes),)))


# -- text format ----------------------------------------------------------

_TOKEN = re.compile(r"^([XYZ])(\d+)$")


def parse_ham(text: str) -> Hamiltonian:
    """Parse the ``.ham`` text format.

    Lines hold ``qubits N``, ``<coefficient> <axis><index> ...`` or a
    ``#`` comment. A ``# label: name`` comment sets the label. Without a
    header the register size is one past the largest index.
    """
    n_decl = None
    label = ""
    terms = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw
        if "#" in line:
            pos = line.index("#")
            comment = line[pos + 1:].strip()
            if comment.startswith("label:"):
                label = comment[len("label:"):].strip()
            line = line[:pos]
        if not line.strip():
            continue
        toks = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", line)]
        col0, first = toks[0]
        if first == "qubits":
            if n_decl is not None:
                raise ParseError("duplicate qubits header", ln, col0)
            if len(toks) != 2 or not toks[1][1].isdigit():
                raise ParseError("header must read 'qubits N'", ln, col0)
            n_decl = int(toks[1][1])
            continue
        try:
            coeff = parse_coeff(first)
        except ValueError:
            raise ParseError(f"bad coefficient {first!r}", ln, col0) from None
        axes = {}
        for col, tok in toks[1:]:
            m = _TOKEN.match(tok)
            if not m:
                raise ParseError(f"bad Pauli factor {tok!r}", ln, col)
            q = int(m.group(2))
            if q in axes:
                raise ParseError(f"qubit {q} repeated", ln, col)
            if n_decl is not None and q >= n_decl:
                raise IndexOutOfRange(f"qubit {q} not below {n_decl}", ln, col)
            axes[q] = m.group(1)
        if coeff == 0:
            continue
        terms.append((ln, PauliTerm(coeff, axes)))
    top = max((q for _, t in terms for q in t.support), default=-1)
    if n_decl is None:
        n_decl = top + 1
    elif top >= n_decl:
        ln = next(ln for ln, t in terms if top in t.support)
        raise IndexOutOfRange(f"qubit {top} not below {n_decl}", ln, 1)
    return Hamiltonian(n_decl, tuple(t for _, t in terms), label)


def serialize_ham(H: Hamiltonian) -> str:
    lines = []
    if H.label:
        lines.append(f"# label: {H.label}")
    lines.append(f"qubits {H.n_qubits}")
    for t in H.terms:
        lines.append(" ".join([format_coeff(t.coefficient)] + [f"{a}{q}" for q, a in t.axes]))
    return "\n".join(lines) + "\n"


def read_ham(path) -> Hamiltonian:
    with open(path, encoding="utf-8") as fh:
        return parse_ham(fh.read())


def write_ham(H: Hamiltonian, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_ham(H))
