"""CSS code Hamiltonians and a few builtin codes."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import IndexOutOfRange, NonCommutingGenerators, ParseError, UnknownCode
from .pauli import Hamiltonian, PauliTerm


@dataclass(frozen=True)
class CSSCode:
    """Stabilizer code with X-type and Z-type generators.

    Parameters
    ----------
    n_qubits : int
    x_generators, z_generators : sequence of qubit-index sets
        Supports of the products of X (resp. Z) operators.
    a, b : float
        Positive weights of the X and Z terms in the code Hamiltonian.
    name : str
    """

    n_qubits: int
    x_generators: tuple = ()
    z_generators: tuple = ()
    a: float = 1.0
    b: float = 1.0
    name: str = ""

    def __post_init__(self):
        xs = tuple(tuple(sorted(set(int(q) for q in g))) for g in self.x_generators)
        zs = tuple(tuple(sorted(set(int(q) for q in g))) for g in self.z_generators)
        object.__setattr__(self, "x_generators", xs)
        object.__setattr__(self, "z_generators", zs)
        for g in xs + zs:
            if not g:
                raise ValueError("empty generator")
            if g[0] < 0 or g[-1] >= self.n_qubits:
                raise IndexOutOfRange(f"generator {g} outside [0, {self.n_qubits})")
        if self.a <= 0 or self.b <= 0:
            raise ValueError("weights a, b must be positive")
        bad = [(r, s) for r, gx in enumerate(xs) for s, gz in enumerate(zs)
               if len(set(gx) & set(gz)) % 2]
        if bad:
            raise NonCommutingGenerators(bad)

    def check_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        hx = np.zeros((len(self.x_generators), self.n_qubits), dtype=np.uint8)
        hz = np.zeros((len(self.z_generators), self.n_qubits), dtype=np.uint8)
        for r, g in enumerate(self.x_generators):
            hx[r, list(g)] = 1
        for s, g in enumerate(self.z_generators):
            hz[s, list(g)] = 1
        return hx, hz

    @property
    def n_logical(self) -> int:
        """``k = n - rank(Hx) - rank(Hz)`` over GF(2)."""
        hx, hz = self.check_matrices()
        return self.n_qubits - gf2_rank(hx) - gf2_rank(hz)


def gf2_rank(m: np.ndarray) -> int:
    """Rank over GF(2) by Gaussian elimination."""
    a = (np.array(m, dtype=np.uint8) & 1).copy()
    rows, cols = a.shape if a.ndim == 2 else (0, 0)
    rank = 0
    for c in range(cols):
        piv = next((r for r in range(rank, rows) if a[r, c]), None)
        if piv is None:
            continue
        a[[rank, piv]] = a[[piv, rank]]
        for r in range(rows):
            if r != rank and a[r, c]:
                a[r] ^= a[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def build_code_hamiltonian(code: CSSCode) -> Hamiltonian:
    """``H = -a sum_r A_r - b sum_s B_s`` with one term per generator."""
    terms = [PauliTerm(-code.a, {q: "X" for q in g}) for g in code.x_generators]
    terms += [PauliTerm(-code.b, {q: "Z" for q in g}) for g in code.z_generators]
    label = code.name or "css"
    return Hamiltonian(code.n_qubits, tuple(terms), label)


def ground_energy(code: CSSCode) -> float:
    """Frustration-free ground energy ``-(aR + bS)``."""
    return -(code.a * len(code.x_generators) + code.b * len(code.z_generators))


# Simplex-code checks arranged so that every qubit sits in at most four
# generators; they span the same row space as the textbook Hamming table.
_STEANE_X = ((3, 4, 5, 6), (1, 2, 5, 6), (0, 2, 4, 6))
_STEANE_Z = ((3, 4, 5, 6), (1, 2, 3, 4), (0, 2, 3, 5))


def repetition(n: int, a: float = 1.0, b: float = 1.0) -> CSSCode:
    if n < 2:
        raise UnknownCode("repetition code needs n >= 2")
    return CSSCode(n, (), tuple((i, i + 1) for i in range(n - 1)), a, b, f"repetition{n}")


def steane(a: float = 1.0, b: float = 1.0) -> CSSCode:
    return CSSCode(7, _STEANE_X, _STEANE_Z, a, b, "steane")


def surface2(a: float = 1.0, b: float = 1.0) -> CSSCode:
    """Rotated distance-2 surface code on a 2x2 patch."""
    return CSSCode(4, ((0, 1, 2, 3),), ((0, 1), (2, 3)), a, b, "surface2")


_BUILTIN = re.compile(r"^(repetition|rep)\(?(\d+)\)?$|^(steane)$|^(surface)\(?2\)?$")


def builtin(name: str, a: float = 1.0, b: float = 1.0) -> CSSCode:
    """Look up a builtin code.

    Accepted names: ``repetition(n)`` (or ``repetitionN``), ``steane``,
    ``surface(2)`` (or ``surface2``).
    """
    key = name.strip().lower().replace(" ", "")
    m = _BUILTIN.match(key)
    if not m:
        raise UnknownCode(f"unknown code {name!r}")
    if m.group(2):
        return repetition(int(m.group(2)), a, b)
    if m.group(3):
        return steane(a, b)
    return surface2(a, b)


def parse_css(text: str) -> CSSCode:
    """Parse the ``.css`` format (``qubits N``, ``X i j ...``, ``Z ...``, ``weights a b``)."""
    n = None
    xs, zs = [], []
    a = b = 1.0
    name = ""
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw
        if "#" in line:
            comment = line[line.index("#") + 1:].strip()
            if comment.startswith("label:"):
                name = comment[len("label:"):].strip()
            line = line[:line.index("#")]
        toks = line.split()
        if not toks:
            continue
        head = toks[0]
        try:
            if head == "qubits" and len(toks) == 2:
                n = int(toks[1])
            elif head in ("X", "Z") and len(toks) > 1:
                (xs if head == "X" else zs).append(tuple(int(t) for t in toks[1:]))
            elif head == "weights" and len(toks) == 3:
                a, b = float(toks[1]), float(toks[2])
            else:
                raise ParseError(f"unrecognized line {raw.strip()!r}", ln, 1)
        except ValueError:
            raise ParseError(f"bad number in {raw.strip()!r}", ln, 1) from None
    if n is None:
        raise ParseError("missing 'qubits N' header", 1, 1)
    return CSSCode(n, tuple(xs), tuple(zs), a, b, name)


def serialize_css(code: CSSCode) -> str:
    lines = [f"# label: {code.name}"] if code.name else []
    lines.append(f"qubits {code.n_qubits}")
    lines += ["X " + " ".join(map(str, g)) for g in code.x_generators]
    lines += ["Z " + " ".join(map(str, g)) for g in code.z_generators]
    lines.append(f"weights {code.a!r} {code.b!r}")
    return "\n".join(lines) + "\n"
