import math

import numpy as np
import pytest

from blindiqp.gf2 import BitMatrix, BitVector
from blindiqp.mbqc import (
    ExtendedIqpGraph,
    IncompatibleProgram,
    IqpGraph,
    bridge_correction_powers,
    compatibility,
    entangle,
    extend,
    gadget_check,
    graph_break_bridge,
    output_string,
    pattern_from_xprogram,
    reduce_bridges,
    undo_bridge_corrections,
)
from blindiqp.statevec import Basis, BridgeY, PlusZS, StateVector, prepare_product, s_power
from blindiqp.xprogram import XProgram, exact_distribution

from .oracles import (
    EXAMPLE_Q_ROWS,
    EXAMPLE_QT_ROWS,
    brute_force_distribution,
    bridge_branch_fidelities,
    random_extended_graph,
    random_state,
    residual_powers,
)

EXAMPLE_Q = BitMatrix.from_rows(EXAMPLE_Q_ROWS)
EXAMPLE_QT = ExtendedIqpGraph.from_rows(EXAMPLE_QT_ROWS)


# extended graphs


def test_extend_example_program_to_example_graph():
    qt = extend(EXAMPLE_Q, {(0, 0), (1, 2)})
    assert qt == EXAMPLE_QT
    assert qt.g == {(0, 0): 0, (1, 2): 1}


def test_extend_empty_and_full():
    qt = extend(EXAMPLE_Q, set())
    assert qt.qtilde == tuple(map(tuple, EXAMPLE_Q_ROWS)) and qt.n_b == 0
    assert extend(BitMatrix.from_rows([[1]]), {(0, 0)}).qtilde == ((-1,),)
    with pytest.raises(IndexError):
        extend(EXAMPLE_Q, {(2, 0)})


def test_extended_graph_validation_and_format():
    with pytest.raises(ValueError):
        ExtendedIqpGraph.from_rows([[2]])
    with pytest.raises(ValueError):
        ExtendedIqpGraph.from_rows([[1, 0], [1]])
    assert EXAMPLE_QT.format() == "2 3\n-1 0 1\n0 1 -1\n"
    assert ExtendedIqpGraph.parse(EXAMPLE_QT.format()) == EXAMPLE_QT
    with pytest.raises(ValueError):
        ExtendedIqpGraph.parse("2 2\n1 0\n")


def test_compatibility_example_graph():
    assert compatibility(EXAMPLE_Q, EXAMPLE_QT) == BitVector.parse("10")


def test_compatibility_no_bridges_and_rejection():
    assert len(compatibility(EXAMPLE_Q, extend(EXAMPLE_Q, set()))) == 0
    with pytest.raises(IncompatibleProgram):
        compatibility(BitMatrix.from_rows([[1, 1, 1], [0, 1, 0]]), EXAMPLE_QT)
    with pytest.raises(IncompatibleProgram):
        compatibility(BitMatrix.identity(2), EXAMPLE_QT)


def test_compatible_programs_enumerates_all_resolutions():
    progs = EXAMPLE_QT.compatible_programs()
    assert len(progs) == 4 and EXAMPLE_Q in progs
    assert all(compatibility(q, EXAMPLE_QT) is not None for q in progs)


def test_bridge_vertices_have_degree_two():
    rng = np.random.default_rng(0)
    for _ in range(20):
        qt = random_extended_graph(rng)
        for k in range(qt.n_b):
            assert sum(qt.bridge(k) in e for e in qt.edges()) == 2


# entangling


def test_entangle_single_edge():
    qt = ExtendedIqpGraph.from_rows([[1]])
    state = entangle(prepare_product([PlusZS(0, 0)] * 2), qt)
    assert np.allclose(state.amps, [0.5, 0.5, 0.5, -0.5])


def test_entangle_single_bridge_edges():
    assert ExtendedIqpGraph.from_rows([[-1]]).edges() == [(2, 1), (2, 0)]


def test_entangle_example_graph_cz_count():
    # two direct edges plus two per bridge vertex
    edges = EXAMPLE_QT.edges()
    assert len(edges) == 6
    assert set(map(frozenset, edges)) == {
        frozenset(e) for e in [(5, 3), (5, 0), (2, 3), (1, 4), (6, 4), (6, 2)]
    }


def test_entangle_rejects_size_mismatch():
    with pytest.raises(ValueError):
        entangle(StateVector.zero(3), EXAMPLE_QT)


# graph-level bridge and break


def test_graph_break_bridge_example_graph():
    assert graph_break_bridge(EXAMPLE_QT, BitVector.parse("10")).q == EXAMPLE_Q


def test_graph_break_bridge_all_break_and_all_bridge():
    assert graph_break_bridge(EXAMPLE_QT, BitVector.parse("00")).q == BitMatrix.from_rows([[0, 0, 1], [0, 1, 0]])
    assert graph_break_bridge(EXAMPLE_QT, BitVector.parse("11")).q == BitMatrix.from_rows([[1, 0, 1], [0, 1, 1]])
    with pytest.raises(ValueError):
        graph_break_bridge(EXAMPLE_QT, BitVector.parse("1"))


def test_graph_break_bridge_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(100):
        q = BitMatrix.random(int(rng.integers(1, 5)), int(rng.integers(1, 5)), rng)
        mask = {(h, j) for h in range(q.rows) for j in range(q.cols) if rng.random() < 0.4}
        qt = extend(q, mask)
        assert graph_break_bridge(qt, compatibility(q, qt)) == IqpGraph(q)


# bridge reduction


def test_reduce_no_bridges_leaves_state():
    qt = ExtendedIqpGraph.from_rows(EXAMPLE_Q_ROWS)
    state = entangle(prepare_product([PlusZS(0, 0)] * 5), qt)
    before = state.amps.copy()
    s_b, after = reduce_bridges(state, qt, rng=np.random.default_rng(0))
    assert len(s_b) == 0 and np.allclose(after.amps, before)


def test_reduce_single_bridge_chain():
    # p1 - b1 - a1, bridge with r=0: outcome 0 leaves (S x S) CZ |phi>
    qt = ExtendedIqpGraph.from_rows([[-1]])
    phi = random_state(2, np.random.default_rng(2))
    state = StateVector(np.kron(BridgeY(0, 1).vector(), phi.amps), 3)
    entangle(state, qt)
    s_b, state = reduce_bridges(state, qt, outcomes=[0])
    expected = phi.copy().apply_cz(0, 1).apply_gate(0, s_power(1)).apply_gate(1, s_power(1))
    reduced = undo_bridge_corrections(state, qt, np.zeros(2, dtype=np.int64))
    assert reduced.fidelity(expected) == pytest.approx(1.0, abs=1e-12)


def test_bridge_correction_powers_match_definition():
    rng = np.random.default_rng(3)
    for _ in range(50):
        qt = random_extended_graph(rng)
        d_b, r_b, s_b = (BitVector.random(qt.n_b, rng) for _ in range(3))
        assert np.array_equal(bridge_correction_powers(qt, d_b, r_b, s_b), residual_powers(qt, d_b, r_b, s_b))


def test_example_graph_every_branch_and_key():
    rng = np.random.default_rng(4)
    for q in EXAMPLE_QT.compatible_programs():
        for phi in (prepare_product([PlusZS(0, 0)] * 5), random_state(5, rng)):
            fids = bridge_branch_fidelities(EXAMPLE_QT, q, phi)
            assert len(fids) == 16
            assert min(fids) == pytest.approx(1.0, abs=1e-9)


def test_random_extended_graphs_every_branch_and_key():
    rng = np.random.default_rng(5)
    for _ in range(10):
        qt = random_extended_graph(rng, max_total=10)
        q = qt.compatible_programs()[int(rng.integers(1 << qt.n_b))]
        phi = random_state(qt.n_p + qt.n_a, rng)
        assert min(bridge_branch_fidelities(qt, q, phi)) == pytest.approx(1.0, abs=1e-9)


def test_bridge_outcomes_uniform_for_all_keys():
    rng = np.random.default_rng(6)
    for q in EXAMPLE_QT.compatible_programs():
        d_b = compatibility(q, EXAMPLE_QT)
        for r in range(4):
            r_b = BitVector.from_int(r, 2)
            specs = [PlusZS(*rng.integers(0, 2, 2)) for _ in range(5)]
            specs += [BridgeY(r_b[k], d_b[k]) for k in range(2)]
            state = entangle(prepare_product(specs), EXAMPLE_QT)
            for k in range(2):
                assert state.outcome_probabilities(EXAMPLE_QT.bridge(k), Basis.y()) == pytest.approx((0.5, 0.5), abs=1e-12)


def test_root_choice_is_tied_to_the_residual_exponent():
    # The principal root satisfies the written residual exponent; the other
    # root only satisfies it with the exponent negated.
    qt = ExtendedIqpGraph.from_rows([[-1, 1]])
    q = BitMatrix.from_rows([[1, 1]])
    phi = random_state(3, np.random.default_rng(7))
    assert min(bridge_branch_fidelities(qt, q, phi)) == pytest.approx(1.0, abs=1e-9)
    assert min(bridge_branch_fidelities(qt, q, phi, alt_root=True)) < 0.99
    assert min(bridge_branch_fidelities(qt, q, phi, alt_root=True, exponent_sign=-1)) == pytest.approx(1.0, abs=1e-9)


# measurement patterns


def test_output_string():
    assert output_string(BitVector.parse("000"), BitVector.parse("10"), EXAMPLE_Q) == BitVector.parse("101")
    with pytest.raises(ValueError):
        output_string(BitVector.parse("00"), BitVector.parse("10"), EXAMPLE_Q)


@pytest.mark.parametrize("rows", [[[1]], EXAMPLE_Q_ROWS])
def test_pattern_matches_exact_distribution(rows):
    p = XProgram(BitMatrix.from_rows(rows), math.pi / 8)
    pattern = pattern_from_xprogram(p)
    assert pattern.exact_distribution().total_variation(exact_distribution(p)) < 1e-9


def test_pattern_theta_zero_outputs_zero():
    pattern = pattern_from_xprogram(XProgram(EXAMPLE_Q, 0.0))
    assert pattern.exact_distribution()[0] == pytest.approx(1.0, abs=1e-12)
    rng = np.random.default_rng(0)
    assert all(pattern.sample(rng) == BitVector.zeros(3) for _ in range(20))


def test_pattern_random_programs_against_subset_sum():
    rng = np.random.default_rng(8)
    for _ in range(50):
        q = BitMatrix.random(int(rng.integers(1, 6)), int(rng.integers(1, 5)), rng)
        theta = float(rng.choice([math.pi / 8, math.pi / 4, rng.uniform(0, 2 * math.pi)]))
        dist = pattern_from_xprogram(XProgram(q, theta)).exact_distribution()
        assert 0.5 * np.abs(dist.probs - brute_force_distribution(q, theta)).sum() < 1e-9


def test_pattern_sampling_agrees():
    p = XProgram(EXAMPLE_Q, math.pi / 4)
    pattern = pattern_from_xprogram(p)
    rng = np.random.default_rng(9)
    counts = np.bincount([pattern.sample(rng).to_int() for _ in range(4000)], minlength=8) / 4000
    assert np.abs(counts - exact_distribution(p).probs).max() < 0.03


# single-term gadget


@pytest.mark.parametrize("weight", [1, 3, 6])
def test_gadget_fidelity(weight):
    assert gadget_check(weight, math.pi / 8) == pytest.approx(1.0, abs=1e-9)


def test_gadget_theta_zero_is_identity():
    assert gadget_check(2, 0.0) == pytest.approx(1.0, abs=1e-9)


def test_gadget_rejects_oversize():
    with pytest.raises(ValueError):
        gadget_check(7, 0.1)
