"""Policy constants and backend caps.

The defaults below are frozen after calibration (see ``tests/test_acceptance.py``
for the criteria they were tuned against).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, replace

CAP_ENV = "GADGETLATTICE_MAX_QUBITS"


def _env_cap(default: int = 20) -> int:
    raw = os.environ.get(CAP_ENV)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        return default


@dataclass(frozen=True)
class Policy:
    """Tunable constants.

    Attributes
    ----------
    c2, c3 : float
        Prefactors of the second and third order choice of Delta.
    c_N : float
        Prefactor of the ancilla count bound ``N <= c_N n^2 kappa^2 delta^2``.
    c_s : float
        Constant in front of ``sqrt(eta) * ||H_t||`` in the soundness bound.
    dense_cap : int
        Largest register realized densely.
    max_qubits : int
        Largest register realized at all (sparse/iterative beyond dense_cap).
    gamma_margin : float
        Gamma is chosen so that ``Gamma * gap >= gamma_margin * n``.
    gap_exponent : float
        Exponent of the power-law gap fit used beyond ``gap_fit_n``.
    gap_fit_n : int
        Largest chain length whose gap is measured directly.
    """

    c2: float = 1.0
    c3: float = 2.0 ** -5
    c_N: float = 4.0
    c_s: float = 4.0
    dense_cap: int = 14
    max_qubits: int = 20
    gamma_margin: float = 5.0
    gap_exponent: float = -6.13
    gap_fit_n: int = 12

    def with_(self, **kw) -> "Policy":
        return replace(self, **kw)


def default_policy() -> Policy:
    return Policy(max_qubits=_env_cap())
