"""Graph-state machinery for IQP computations.

Qubit layout for an extended graph with ``n_p`` primary, ``n_a`` ancillary and
``n_b`` bridge/break vertices: primaries ``0..n_p-1``, ancillas
``n_p..n_p+n_a-1``, bridges after that.  Bridge ``k`` sits on the ``k``-th
``-1`` entry of the extended matrix in row-major order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .gf2 import BitMatrix, BitVector
from .statevec import (
    H,
    Basis,
    BridgeY,
    StateVector,
    X,
    joint_distribution,
    s_power,
)
from .xprogram import OutcomeDistribution, XProgram

GADGET_MAX_WEIGHT = 6


class IncompatibleProgram(ValueError):
    """The program matrix cannot be obtained from the extended graph."""


@dataclass(frozen=True)
class IqpGraph:
    q: BitMatrix

    @property
    def n_a(self) -> int:
        return self.q.rows

    @property
    def n_p(self) -> int:
        return self.q.cols

    def edges(self) -> list[tuple[int, int]]:
        """CZ pairs ``(primary qubit, ancilla qubit)`` in row-major order."""
        return [
            (j, self.n_p + h) for h in range(self.n_a) for j in range(self.n_p) if self.q[h, j]
        ]


@dataclass(frozen=True)
class ExtendedIqpGraph:
    qtilde: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = self.qtilde
        if not rows or not rows[0]:
            raise ValueError("extended graph must be at least 1x1")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged extended graph")
        if any(v not in (-1, 0, 1) for r in rows for v in r):
            raise ValueError("extended graph entries must be -1, 0 or 1")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "ExtendedIqpGraph":
        return cls(tuple(tuple(int(v) for v in r) for r in rows))

    @property
    def n_a(self) -> int:
        return len(self.qtilde)

    @property
    def n_p(self) -> int:
        return len(self.qtilde[0])

    @property
    def bridges(self) -> tuple[tuple[int, int], ...]:
        """Positions ``(h, j)`` of the ``-1`` entries; index ``k`` is the bridge number."""
        return tuple(
            (h, j) for h in range(self.n_a) for j in range(self.n_p) if self.qtilde[h][j] == -1
        )

    @property
    def g(self) -> dict[tuple[int, int], int]:
        return {pos: k for k, pos in enumerate(self.bridges)}

    @property
    def n_b(self) -> int:
        return len(self.bridges)

    @property
    def n_qubits(self) -> int:
        return self.n_p + self.n_a + self.n_b

    def primary(self, j: int) -> int:
        return j

    def ancilla(self, h: int) -> int:
        return self.n_p + h

    def bridge(self, k: int) -> int:
        return self.n_p + self.n_a + k

    def edges(self) -> list[tuple[int, int]]:
        """Every CZ of the entangling circuit, row-major over the matrix."""
        g = self.g
        out = []
        for h in range(self.n_a):
            for j in range(self.n_p):
                v = self.qtilde[h][j]
                if v == 1:
                    out.append((self.primary(j), self.ancilla(h)))
                elif v == -1:
                    b = self.bridge(g[h, j])
                    out.append((b, self.ancilla(h)))
                    out.append((b, self.primary(j)))
        return out

    def compatible_programs(self) -> list[BitMatrix]:
        """Every 0/1 matrix obtainable by resolving each ``-1`` to 0 or 1."""
        out = []
        for bits in range(1 << self.n_b):
            rows = [[max(v, 0) for v in r] for r in self.qtilde]
            for k, (h, j) in enumerate(self.bridges):
                rows[h][j] = (bits >> k) & 1
            out.append(BitMatrix.from_rows(rows))
        return out

    def format(self) -> str:
        lines = [f"{self.n_a} {self.n_p}"] + [" ".join(str(v) for v in r) for r in self.qtilde]
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "ExtendedIqpGraph":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        try:
            rows, cols = (int(t) for t in lines[0].split())
            body = [[int(t) for t in ln.split()] for ln in lines[1:]]
        except (ValueError, IndexError):
            raise ValueError("bad extended graph text") from None
        if len(body) != rows or any(len(r) != cols for r in body):
            raise ValueError(f"extended graph body does not match header {rows}x{cols}")
        return cls.from_rows(body)


def extend(q: BitMatrix, mask: Iterable[tuple[int, int]]) -> ExtendedIqpGraph:
    rows = q.to_rows()
    for h, j in mask:
        if not (0 <= h < q.rows and 0 <= j < q.cols):
            raise IndexError(f"mask position {(h, j)} outside {q.shape}")
        rows[h][j] = -1
    return ExtendedIqpGraph.from_rows(rows)


def compatibility(q: BitMatrix, qt: ExtendedIqpGraph) -> BitVector:
    """Bridge/break witness: bit ``k`` is ``Q[g^-1(k)]`` (1 = bridge)."""
    if q.shape != (qt.n_a, qt.n_p):
        raise IncompatibleProgram(f"shape {q.shape} does not match extended graph {(qt.n_a, qt.n_p)}")
    for h in range(qt.n_a):
        for j in range(qt.n_p):
            v = qt.qtilde[h][j]
            if v != -1 and v != q[h, j]:
                raise IncompatibleProgram(f"entry {(h, j)} is {q[h, j]} but the public graph fixes {v}")
    return BitVector(tuple(q[h, j] for h, j in qt.bridges))


def entangle(state: StateVector, qt: ExtendedIqpGraph) -> StateVector:
    if state.n_qubits != qt.n_qubits:
        raise ValueError(f"register has {state.n_qubits} qubits, graph needs {qt.n_qubits}")
    for i, j in qt.edges():
        state.apply_cz(i, j)
    return state


def entangle_program(state: StateVector, q: BitMatrix) -> StateVector:
    """The unextended entangling circuit ``E_Q`` on ``n_p + n_a`` qubits."""
    graph = IqpGraph(q)
    if state.n_qubits != graph.n_p + graph.n_a:
        raise ValueError("register size does not match the program")
    for i, j in graph.edges():
        state.apply_cz(i, j)
    return state


def graph_break_bridge(qt: ExtendedIqpGraph, d_b: BitVector) -> IqpGraph:
    if len(d_b) != qt.n_b:
        raise ValueError(f"witness length {len(d_b)} does not match {qt.n_b} bridge vertices")
    rows = [[max(v, 0) for v in r] for r in qt.qtilde]
    for k, (h, j) in enumerate(qt.bridges):
        # bridge contracts b_k into an edge, break deletes it
        rows[h][j] = d_b[k]
    return IqpGraph(BitMatrix.from_rows(rows))


def bridge_states(d_b: BitVector, r_b: BitVector, alt_root: bool = False) -> list[BridgeY]:
    return [BridgeY(r, d, alt_root) for r, d in zip(r_b, d_b)]


def attach_bridges(
    phi: StateVector, qt: ExtendedIqpGraph, d_b: BitVector, r_b: BitVector, alt_root: bool = False
) -> StateVector:
    """``phi`` on the primary/ancilla qubits, tensored with the prepared bridge qubits."""
    if phi.n_qubits != qt.n_p + qt.n_a:
        raise ValueError("phi must cover exactly the primary and ancilla qubits")
    amps = phi.amps
    for spec in bridge_states(d_b, r_b, alt_root):
        amps = np.kron(spec.vector(), amps)
    return StateVector(amps, qt.n_qubits)


def reduce_bridges(
    state: StateVector,
    qt: ExtendedIqpGraph,
    rng: np.random.Generator | None = None,
    outcomes: Sequence[int] | None = None,
) -> tuple[BitVector, StateVector]:
    """Measure every bridge qubit in the Y basis, ascending ``k``.

    Either sample with ``rng`` or follow the given ``outcomes``.
    """
    s_b = []
    for k in range(qt.n_b):
        forced = None if outcomes is None else outcomes[k]
        record = state.measure(qt.bridge(k), Basis.y(), rng=None if forced is not None else rng, outcome=forced)
        s_b.append(record.outcome)
    return BitVector(tuple(s_b)), state


def bridge_correction_powers(
    qt: ExtendedIqpGraph, d_b: BitVector, r_b: BitVector, s_b: BitVector
) -> np.ndarray:
    """S-powers (mod 4) left on each primary/ancilla qubit after bridge reduction.

    For bridge ``k`` between ``a_h`` and ``p_j``: ``S^((-1)^(s_k + r_k))`` on
    both neighbours when it bridges, ``Z^(r_k) = S^(2 r_k)`` when it breaks.
    """
    powers = np.zeros(qt.n_p + qt.n_a, dtype=np.int64)
    for k, (h, j) in enumerate(qt.bridges):
        if d_b[k]:
            e = 1 if (s_b[k] + r_b[k]) % 2 == 0 else -1
        else:
            e = 2 * r_b[k]
        powers[qt.primary(j)] += e
        powers[qt.ancilla(h)] += e
    return powers % 4


def undo_bridge_corrections(
    state: StateVector, qt: ExtendedIqpGraph, powers: np.ndarray
) -> StateVector:
    """Apply ``S^-e`` to every primary/ancilla qubit and drop the measured bridges."""
    amps = state.amps.reshape(1 << qt.n_b, 1 << (qt.n_p + qt.n_a))
    # bridges are the most significant bits and are in product with the rest
    row = int(np.argmax(np.linalg.norm(amps, axis=1)))
    reduced = StateVector(amps[row].copy(), qt.n_p + qt.n_a)
    reduced.amps /= math.sqrt(reduced.norm())
    for q, e in enumerate(powers):
        if e % 4:
            reduced.apply_gate(q, s_power(-int(e)))
    return reduced


def output_string(s_p: BitVector, s_a: BitVector, q: BitMatrix) -> BitVector:
    """``x_j = s^p_j + sum_{h: Q_hj = 1} s^a_h (mod 2)``."""
    if len(s_p) != q.cols or len(s_a) != q.rows:
        raise ValueError(f"outcome lengths ({len(s_p)}, {len(s_a)}) do not match Q {q.shape}")
    x = list(s_p)
    for h in range(q.rows):
        if s_a[h]:
            row = q.data[h]
            for j in range(q.cols):
                x[j] ^= (row >> j) & 1
    return BitVector(tuple(x))


@dataclass(frozen=True)
class MeasurementPattern:
    """Graph-state pattern that samples an X-program.

    Prepare all ``n_p + n_a`` qubits in ``|+>``, entangle along the IQP graph,
    measure each ancilla in the theta basis and each primary in the X basis,
    then combine outcomes with ``output_string``.
    """

    program: XProgram

    @property
    def n_qubits(self) -> int:
        return self.program.n_p + self.program.n_a

    @property
    def edges(self) -> list[tuple[int, int]]:
        return IqpGraph(self.program.q).edges()

    @property
    def plan(self) -> list[tuple[int, Basis]]:
        n_p, n_a = self.program.n_p, self.program.n_a
        anc = [(n_p + h, Basis.angle(self.program.theta)) for h in range(n_a)]
        prim = [(j, Basis.x()) for j in range(n_p)]
        return anc + prim

    def graph_state(self) -> StateVector:
        state = StateVector.product([np.array([1, 1]) / math.sqrt(2)] * self.n_qubits)
        return entangle_program(state, self.program.q)

    def postprocess(self, outcomes: dict[int, int]) -> BitVector:
        n_p, n_a = self.program.n_p, self.program.n_a
        s_p = BitVector(tuple(outcomes[j] for j in range(n_p)))
        s_a = BitVector(tuple(outcomes[n_p + h] for h in range(n_a)))
        return output_string(s_p, s_a, self.program.q)

    def exact_distribution(self) -> OutcomeDistribution:
        plan = self.plan
        qubits = [q for q, _ in plan]
        probs = joint_distribution(self.graph_state(), qubits, [b for _, b in plan])
        out = np.zeros(1 << self.program.n_p)
        for index, p in enumerate(probs):
            outcomes = {q: (index >> i) & 1 for i, q in enumerate(qubits)}
            out[self.postprocess(outcomes).to_int()] += p
        return OutcomeDistribution(self.program.n_p, out)

    def sample(self, rng: np.random.Generator) -> BitVector:
        state = self.graph_state()
        outcomes = {q: state.measure(q, b, rng=rng).outcome for q, b in self.plan}
        return self.postprocess(outcomes)


def pattern_from_xprogram(p: XProgram) -> MeasurementPattern:
    if p.n_p + p.n_a > 22:
        raise ValueError("pattern exceeds the statevector cap")
    return MeasurementPattern(p)


def gadget_check(hamming_weight: int, theta: float, n_states: int = 20, seed=0, spectators: int = 1) -> float:
    """Worst-case fidelity of the single-term gadget against ``exp(i theta X^w)``.

    Designated qubits enter through a Hadamard frame change (the primaries are
    fed ``H|psi>`` and read out in the X basis).  An ancilla in ``|+>`` is
    CZ-coupled to every designated qubit and measured in the theta basis;
    outcome 1 triggers a Z on each designated qubit.  Spectator qubits must be
    left untouched.
    """
    if not 1 <= hamming_weight <= GADGET_MAX_WEIGHT:
        raise ValueError(f"hamming weight must be in 1..{GADGET_MAX_WEIGHT}")
    rng = np.random.default_rng(seed)
    w = hamming_weight
    n_in = w + spectators
    anc = n_in
    x_string = np.array([[1.0 + 0j]])
    for _ in range(w):
        x_string = np.kron(X, x_string)
    x_string = np.kron(np.eye(1 << spectators), x_string)
    target_op = math.cos(theta) * np.eye(1 << n_in) + 1j * math.sin(theta) * x_string
    worst = 1.0
    for _ in range(n_states):
        psi = rng.normal(size=1 << n_in) + 1j * rng.normal(size=1 << n_in)
        psi /= np.linalg.norm(psi)
        target = target_op @ psi
        for branch in (0, 1):
            reg = StateVector(np.kron(np.array([1, 1]) / math.sqrt(2), psi), n_in + 1)
            for q in range(w):
                reg.apply_gate(q, H)
            for q in range(w):
                reg.apply_cz(anc, q)
            reg.measure(anc, Basis.angle(theta), outcome=branch)
            if branch:
                for q in range(w):
                    reg.apply_gate(q, np.diag([1, -1]))
            for q in range(w):
                reg.apply_gate(q, H)
            out = reg.reduced_amplitudes(list(range(n_in)), {anc: _basis_vector(theta, branch)})
            fid = abs(np.vdot(target, out)) ** 2 / np.vdot(out, out).real
            worst = min(worst, float(fid))
    return worst


def _basis_vector(theta: float, outcome: int) -> np.ndarray:
    return Basis.angle(theta).vectors()[outcome]
