import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gadgetlattice.codes import build_code_hamiltonian, repetition, steane, surface2
from gadgetlattice.compiler import (
    LatticeLayout,
    compile_hamiltonian,
    layout,
    localize_edges,
    predicted_size,
    random_sparse_hamiltonian,
    reduce_degree,
    reduce_locality,
    remove_crossings,
    render_dot,
    render_svg,
    write_artifacts,
)
from gadgetlattice.errors import CompilationError, PreconditionViolated
from gadgetlattice.pauli import Hamiltonian, PauliTerm, graph_stats, neighbour_degree

P = PauliTerm


def xx(n, edges):
    return Hamiltonian(n, tuple(P(1.0, {a: "X", b: "X"}) for a, b in edges))


def check_final(res):
    H, lay = res.hamiltonian, res.layout
    assert max(t.weight for t in H.terms) <= 2
    assert max(neighbour_degree(H).values()) <= 4
    pos = lay.positions
    assert len(set(pos.values())) == len(pos) == H.n_qubits
    for t in H.terms:
        if t.weight == 2:
            (a, b) = t.support
            assert abs(pos[a][0] - pos[b][0]) + abs(pos[a][1] - pos[b][1]) == 1
    r = res.report
    assert r.chain_ok and r.budget_ok and r.n_bound_ok and r.passed


# -- locality ---------------------------------------------------------------

def test_weight_four_term_takes_two_rounds():
    H = Hamiltonian(4, (P(1.0, {0: "Z", 1: "Z", 2: "Z", 3: "Z"}),))
    H1, stages = reduce_locality(H)
    assert [s.kind for s in stages] == ["subdivision", "three_to_two"]
    after_first = stages[0].hamiltonian
    assert sorted(t.weight for t in after_first.terms if t.weight > 1) == [3, 3]
    assert max(t.weight for t in H1.terms) == 2


def test_two_local_input_is_left_alone():
    H = xx(3, [(0, 1), (1, 2)])
    H1, stages = reduce_locality(H)
    assert H1 == H and stages == []


def test_steane_locality_reduction():
    H = build_code_hamiltonian(steane())
    H1, stages = reduce_locality(H)
    assert graph_stats(H1).kappa == 2
    assert len(stages) <= 3  # ceil(log2 4) + 1
    assert H1.n_qubits - 7 == 18  # one mediator per split and per 3-to-2 step


# -- degree -----------------------------------------------------------------

def test_star_vertex_degree_reduced():
    H = Hamiltonian(6, tuple(P(1.0, {0: "Z", k: "Z"}) for k in range(1, 6)))
    H2, stages = reduce_degree(H)
    assert max(neighbour_degree(H2).values()) <= 4
    assert stages[0].kind == "subdivision" and "triangle" in stages[1].kind


def test_path_needs_only_edge_subdivision():
    H2, stages = reduce_degree(xx(4, [(0, 1), (1, 2), (2, 3)]))
    assert [s.kind for s in stages] == ["subdivision"]


def test_repetition_degree():
    H2, _ = reduce_degree(build_code_hamiltonian(repetition(5)))
    assert max(neighbour_degree(H2).values()) <= 4


def test_degree_pass_needs_two_local_input():
    with pytest.raises(PreconditionViolated):
        reduce_degree(Hamiltonian(3, (P(1.0, {0: "Z", 1: "Z", 2: "Z"}),)))


@given(st.integers(5, 9), st.integers(0, 10 ** 6))
@settings(max_examples=10)
def test_degree_bound_on_random_stars(k, seed):
    import random
    rnd = random.Random(seed)
    H = Hamiltonian(k + 1, tuple(P(rnd.choice([-1.0, 0.5, 2.0]), {0: rnd.choice("XYZ"),
                                                                      j: rnd.choice("XYZ")})
                                 for j in range(1, k + 1)))
    H2, _ = reduce_degree(H)
    assert max(neighbour_degree(H2).values()) <= 4


# -- layout -----------------------------------------------------------------

def test_path_layout_has_no_long_edges():
    lay = layout(xx(4, [(0, 1), (1, 2), (2, 3)]))
    assert lay.long_edges() == [] and lay.crossings == []


def test_interleaved_edges_cross_once():
    lay = layout(xx(4, [(0, 2), (1, 3)]))
    assert len(lay.crossings) == 1
    h, v, p = lay.crossings[0]
    assert {h, v} == {(0, 2), (1, 3)}


def test_nested_edges_do_not_cross():
    assert layout(xx(4, [(0, 3), (1, 2)])).crossings == []


def test_routes_are_unit_step_paths():
    lay = layout(xx(6, [(0, 3), (1, 4), (2, 5), (0, 5)]))
    for e, pts in lay.paths.items():
        assert pts[0] == lay.positions[e[0]] or pts[0] == lay.positions[e[1]]
        for a, b in zip(pts, pts[1:]):
            assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1
    for h, v, p in lay.crossings:
        assert p in lay.paths[h] and p in lay.paths[v]


def test_layout_rejects_high_degree():
    with pytest.raises(CompilationError):
        layout(xx(6, [(0, k) for k in range(1, 6)]))


def test_one_length_three_edge_gets_three_chain_qubits():
    lay = LatticeLayout((5, 1), {0: (0, 0), 1: (4, 0)}, [(0, 1)],
                        {(0, 1): [(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)]}, [])
    H3, stages = localize_edges(lay, xx(2, [(0, 1)]))
    assert H3.n_qubits == 5 and len(stages) == 1
    assert [lay.positions[q] for q in (2, 3, 4)] == [(1, 0), (2, 0), (3, 0)]


def test_disjoint_long_edges_share_one_round():
    lay = layout(xx(4, [(0, 2), (1, 3)]), refine=False)
    H = xx(4, [(0, 2), (1, 3)])
    lay2 = LatticeLayout(lay.grid, dict(lay.positions), lay.edges, lay.paths, [], 1)
    # drop the shared crossing site so the chains stay disjoint
    H3, stages = localize_edges(lay, H) if not lay.crossings else (None, None)
    if stages is None:
        lay = layout(xx(6, [(0, 2), (3, 5)]))
        H3, stages = localize_edges(lay, xx(6, [(0, 2), (3, 5)]))
    assert len(stages) == 1 and stages[0].n_gadgets == 2


def test_single_crossing_removed_with_one_crossing_mediator():
    H = xx(4, [(0, 2), (1, 3)])
    lay = layout(H)
    H3, _ = localize_edges(lay, H)
    H4, stages = remove_crossings(lay, H3)
    assert [s.kind for s in stages] == ["xy_crossing", "xy_subdivision"]
    assert stages[0].n_gadgets == 1 and stages[1].n_gadgets == 4
    pos = lay.positions
    for t in H4.terms:
        if t.weight == 2:
            a, b = t.support
            assert abs(pos[a][0] - pos[b][0]) + abs(pos[a][1] - pos[b][1]) == 1


def test_planar_layout_needs_no_crossing_round():
    H = xx(4, [(0, 3), (1, 2)])
    lay = layout(H)
    H3, _ = localize_edges(lay, H)
    H4, stages = remove_crossings(lay, H3)
    assert stages == [] and H4 == H3


# -- full pipeline ------------------------------------------------------------

def test_toy_compiles_to_five_qubits():
    H = Hamiltonian(3, (P(1.0, {0: "X", 1: "X"}), P(1.0, {1: "Z", 2: "Z"})))
    res = compile_hamiltonian(H, 0.1, 0.1)
    assert res.hamiltonian.n_qubits == 5 and res.report.rounds == 1
    assert predicted_size(H) == 5
    check_final(res)


@pytest.mark.parametrize("code", [repetition(3), repetition(6), surface2()])
def test_code_hamiltonians_compile(code):
    check_final(compile_hamiltonian(build_code_hamiltonian(code), 0.1, 0.1))


def test_steane_compiles_within_bound():
    res = compile_hamiltonian(build_code_hamiltonian(steane()), 0.1, 0.1)
    check_final(res)
    assert res.report.crossings_remaining == 0
    assert res.report.certificate.epsilon <= 0.1
    assert res.report.n_total == predicted_size(build_code_hamiltonian(steane())) == 14696


def test_crossing_instance_compiles():
    H = Hamiltonian(4, (P(1.0, {0: "X", 1: "Z", 2: "X"}), P(0.5, {1: "Y", 3: "Z", 0: "Z"})))
    check_final(compile_hamiltonian(H, 0.1, 0.1))


@given(st.integers(3, 6), st.integers(0, 10 ** 6))
@settings(max_examples=8)
def test_random_sparse_instances_compile(n, seed):
    H = random_sparse_hamiltonian(n, 3, 3, seed=seed)
    res = compile_hamiltonian(H, 0.1, 0.1)
    check_final(res)
    assert res.report.n_total == predicted_size(H)


def test_smallest_dense_instance_needs_prefactor_above_two():
    # n = kappa = delta = 3 instance whose ratio exceeds 2
    H = random_sparse_hamiltonian(3, 3, 3, seed=0)
    res = compile_hamiltonian(H, 0.1, 0.1)
    assert res.report.n_total == 1833
    assert 2 * 3 ** 6 < 1833 <= res.report.n_bound


def test_artifacts_are_deterministic(tmp_path):
    H = build_code_hamiltonian(surface2())
    for d in ("a", "b"):
        write_artifacts(compile_hamiltonian(H, 0.1, 0.1), tmp_path / d, "s")
    for suffix in (".sim.ham", ".layout.json", ".cert.json", ".report.json"):
        a = (tmp_path / "a" / f"s{suffix}").read_bytes()
        assert a == (tmp_path / "b" / f"s{suffix}").read_bytes()
    rep = json.loads((tmp_path / "a" / "s.report.json").read_text())
    assert rep["passed"] and rep["N_total"] > 4


def test_empty_input_rejected():
    with pytest.raises(CompilationError):
        compile_hamiltonian(Hamiltonian(2), 0.1, 0.1)


def test_renderers():
    lay = layout(xx(4, [(0, 2), (1, 3)]))
    assert render_svg(lay).startswith("<svg") and "circle" in render_svg(lay)
    assert render_dot(lay).startswith("graph lattice {")
