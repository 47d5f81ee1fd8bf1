import math
from dataclasses import replace

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gadgetlattice.errors import AncillaCollision, OverlappingSupports, PreconditionViolated
from gadgetlattice.gadgets import (
    AncillaState,
    SimulationCertificate,
    apply_parallel,
    assemble,
    certificate_for,
    choose_delta_2,
    choose_delta_3,
    compose_certificates,
    hopping_legs,
    long_range,
    residual_check,
    split_product,
    split_three,
    subdivide,
    three_to_two,
    triangle,
    xy_subdivision,
)
from gadgetlattice.pauli import Hamiltonian, PauliTerm
from gadgetlattice.verify import gadget_suite
from gadgetlattice.wstate import WChainSpec

P = PauliTerm


@pytest.fixture(scope="module")
def suite():
    return gadget_suite()


@pytest.mark.parametrize("name", ["subdivision", "three_to_two", "triangle", "crossing",
                                  "xy_crossing", "long_range_2", "long_range_3", "long_range_4"])
def test_effective_hamiltonian_residual_vanishes(suite, name):
    assert residual_check(suite[name]) <= 1e-8


def test_residual_detects_a_wrong_coupling(suite):
    g = suite["subdivision"]
    bad = replace(g, H1=g.H1 + Hamiltonian(g.n_qubits, (P(0.1, {0: "Z"}),)))
    assert residual_check(bad) == pytest.approx(0.1, rel=1e-6)


def test_delta_formulas():
    assert choose_delta_2(1.0, 0.1, 0.1, 1.0) == pytest.approx(200.0)
    assert choose_delta_3(1.0, 0.1, 0.1, 1.0) == pytest.approx(2000.0)
    assert choose_delta_2(2.0, 0.5, 1.0, 0.5) == pytest.approx(0.5 * (64 / 0.25 + 4))


def test_delta_beyond_double_range_stays_exact():
    d = choose_delta_3(mpmath.mpf(10) ** 40, 0.1, 0.1, 1.0)
    assert isinstance(d, mpmath.mpf) and d > mpmath.mpf(10) ** 480


def test_subdivision_structure():
    g = subdivide(Hamiltonian(2), P(2.0, {0: "X"}), P(3.0, {1: "Z"}))
    assert g.ancillas == (2,)
    assert g.H1.constant() == pytest.approx((4 + 9) / 2)
    r = 1 / math.sqrt(2)
    assert g.H2.coefficient_of({0: "X", 2: "X"}) == pytest.approx(2 * r)
    assert g.H2.coefficient_of({1: "Z", 2: "X"}) == pytest.approx(-3 * r)
    assert certificate_for(g).delta == g.delta / 2


def test_overlapping_operands_rejected():
    with pytest.raises(OverlappingSupports):
        subdivide(Hamiltonian(2), P(1.0, {0: "X"}), P(1.0, {0: "Z"}))


def test_ancilla_on_data_rejected():
    with pytest.raises(AncillaCollision):
        subdivide(Hamiltonian(3, (P(1.0, {2: "Z"}),)), P(1.0, {0: "X"}), P(1.0, {1: "Z"}),
                  ancilla=2)


def test_parallel_merge_keeps_ancillas_apart():
    a = subdivide(Hamiltonian(4), P(1.0, {0: "X"}), P(1.0, {1: "X"}), ancilla=4, delta=1.0)
    b = subdivide(Hamiltonian(4), P(1.0, {2: "Z"}), P(1.0, {3: "Z"}), ancilla=5, delta=1.0)
    m = apply_parallel([a, b], Hamiltonian(4, (P(0.5, {0: "Y"}),)))
    assert m.ancillas == (4, 5) and m.n_qubits == 6
    assert len(m.target.terms) == 3
    with pytest.raises(AncillaCollision):
        apply_parallel([a, a])


def test_parallel_merge_rejects_mixed_orders():
    a = subdivide(Hamiltonian(2), P(1.0, {0: "X"}), P(1.0, {1: "X"}), ancilla=5, delta=1.0)
    b = three_to_two(Hamiltonian(5), P(1.0, {2: "Z"}), P(1.0, {3: "Z"}), P(1.0, {4: "Z"}),
                     ancilla=6, delta=1.0)
    with pytest.raises(ValueError):
        apply_parallel([a, b])


def test_certificate_composition_values():
    cA = SimulationCertificate(50.0, 0.01, 0.01)
    cB = SimulationCertificate(100.0, 0.02, 0.02)
    c = compose_certificates(cA, cB, 1.0)
    denom = 100 - 1 + 0.02
    assert c.delta == pytest.approx(99.99)
    assert c.eta == pytest.approx(0.03 + 0.01 / denom)
    assert c.epsilon == pytest.approx(0.03 + 0.01 / denom)
    assert c.heuristic_constant


def test_certificate_composition_preconditions():
    with pytest.raises(PreconditionViolated):
        compose_certificates(SimulationCertificate(5, 0.1, 0.1), SimulationCertificate(1.0, 0.1, 0.1), 1.0)
    with pytest.raises(PreconditionViolated):
        compose_certificates(SimulationCertificate(5, 0.1, 2.0), SimulationCertificate(10, 0.1, 0.1), 1.0)


def test_ancilla_state_vector_ordering():
    s = AncillaState.basis(3, 1).merge(AncillaState.w_chain([1, 2]))
    v = s.vector([1, 2, 3])
    expect = np.zeros(8)
    expect[0b011] = expect[0b101] = 1 / math.sqrt(2)
    assert np.allclose(v, expect)


def test_long_range_uses_chain_endpoints():
    g = long_range(Hamiltonian(2), P(1.0, {0: "X"}), P(1.0, {1: "Z"}), WChainSpec.for_length(3),
                   chain_qubits=[4, 2, 3])
    assert g.H2.coefficient_of({0: "X", 4: "X"}) > 0
    assert g.H2.coefficient_of({1: "Z", 3: "X"}) < 0
    assert g.pi_minus.factors[0][1] == (4, 2, 3)


@given(st.floats(-4, 4).filter(lambda x: abs(x) > 1e-3))
def test_hopping_legs_reproduce_coupling(J):
    xk, xl = hopping_legs(J)
    assert -xk * xl / 4 == pytest.approx(J)


@given(st.floats(-2, 2).filter(lambda x: abs(x) > 1e-2))
def test_xy_subdivision_residual_for_any_coupling(J):
    assert residual_check(xy_subdivision(Hamiltonian(2), 0, 1, J)) <= 1e-8


@given(st.floats(-5, 5).filter(lambda x: abs(x) > 1e-2),
       st.lists(st.sampled_from("XYZ"), min_size=2, max_size=4))
def test_split_product_recovers_term(c, axes):
    t = P(c, dict(enumerate(axes)))
    a, b = split_product(t)
    assert a.coefficient * b.coefficient == pytest.approx(c)
    assert dict(a.axes) | dict(b.axes) == t.axis_map
    assert abs(a.coefficient) == pytest.approx(abs(b.coefficient))


@given(st.floats(-5, 5).filter(lambda x: abs(x) > 1e-2))
def test_split_three_recovers_term(c):
    a, b, d = split_three(P(c, {0: "X", 1: "Y", 2: "Z"}))
    assert a.coefficient * b.coefficient * d.coefficient == pytest.approx(c)


@given(st.floats(-2, 2).filter(lambda x: abs(x) > 0.05),
       st.sampled_from("XYZ"), st.sampled_from("XYZ"))
def test_subdivision_residual_for_random_operands(c, s1, s2):
    g = subdivide(Hamiltonian(3, (P(0.3, {2: "X"}),)), *split_product(P(c, {0: s1, 1: s2})))
    assert residual_check(g) <= 1e-8


@given(st.floats(0.2, 2), st.floats(-2, 2).filter(lambda x: abs(x) > 0.05))
def test_triangle_residual_for_random_weights(a, b):
    g = triangle(Hamiltonian(3), P(1.0, {0: "Z"}), P(1.0, {1: "X"}), P(1.0, {2: "Y"}), a, b)
    assert residual_check(g) <= 1e-8


def test_assemble_scales_by_delta():
    g = subdivide(Hamiltonian(2), P(1.0, {0: "X"}), P(1.0, {1: "X"}), delta=16.0)
    H = assemble(g)
    assert H.coefficient_of({2: "Z"}) == pytest.approx(-8.0)
    assert H.coefficient_of({0: "X", 2: "X"}) == pytest.approx(4 / math.sqrt(2))
