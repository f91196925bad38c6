"""Dense statevector simulator for the single-qubit preparations, CZ
entangling and rotated-basis measurements used by the blind protocol.

Qubit ``q`` is bit ``q`` of the amplitude index (little-endian).  Measured
qubits stay allocated: a measurement projects the qubit onto the observed
basis vector so index maps remain valid across measurement rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels

MAX_QUBITS = 22
MAX_PLAN_LENGTH = 14
PRUNE_THRESHOLD = 1e-14
ZERO_BRANCH = 1e-12

_R2 = 1 / math.sqrt(2)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
S = np.diag([1, 1j]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * _R2
# principal root used for bridge/break preparation; see tests/test_mbqc.py
SQRT_Y = _R2 * (I2 - 1j * Y)
SQRT_Y_ALT = _R2 * (I2 + 1j * Y)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) * _R2
MINUS = np.array([1, -1], dtype=complex) * _R2


def s_power(k: int) -> np.ndarray:
    return np.diag([1, 1j ** (k % 4)]).astype(complex)


@dataclass(frozen=True)
class PlusZS:
    """``Z^r S^d |+>``."""

    r: int
    d: int

    def vector(self) -> np.ndarray:
        return np.linalg.matrix_power(Z, self.r) @ np.linalg.matrix_power(S, self.d) @ PLUS


@dataclass(frozen=True)
class BridgeY:
    """``Y^r (sqrt Y)^d |0>``; ``alt_root`` selects ``(I + iY)/sqrt 2`` instead."""

    r: int
    d: int
    alt_root: bool = False

    def vector(self) -> np.ndarray:
        root = SQRT_Y_ALT if self.alt_root else SQRT_Y
        return np.linalg.matrix_power(Y, self.r) @ np.linalg.matrix_power(root, self.d) @ KET0


@dataclass(frozen=True)
class Basis:
    """A single-qubit measurement basis.

    ``kind`` is one of ``"z"``, ``"x"``, ``"y"`` or ``"theta"``.  A nonzero
    ``s_power`` ``k`` rotates both basis vectors by ``S^-k``.
    """

    kind: str
    theta: float = 0.0
    s_power: int = 0

    @classmethod
    def z(cls) -> "Basis":
        return cls("z")

    @classmethod
    def x(cls, s_power: int = 0) -> "Basis":
        return cls("x", s_power=s_power % 4)

    @classmethod
    def y(cls) -> "Basis":
        return cls("y")

    @classmethod
    def angle(cls, theta: float, s_power: int = 0) -> "Basis":
        return cls("theta", theta=theta, s_power=s_power % 4)

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "z":
            v0, v1 = KET0, KET1
        elif self.kind == "x":
            v0, v1 = PLUS, MINUS
        elif self.kind == "y":
            v0 = np.array([1, 1j], dtype=complex) * _R2
            v1 = np.array([1, -1j], dtype=complex) * _R2
        elif self.kind == "theta":
            phase = np.exp(-1j * self.theta)
            v0 = _R2 * (phase * PLUS + phase.conjugate() * MINUS)
            v1 = _R2 * (phase * PLUS - phase.conjugate() * MINUS)
        else:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        rot = s_power(-self.s_power)
        return rot @ v0, rot @ v1

    def bra_matrix(self) -> np.ndarray:
        """Unitary whose rows are the conjugated basis vectors."""
        v0, v1 = self.vectors()
        return np.array([v0.conj(), v1.conj()])


class MeasurementRecord(NamedTuple):
    qubit: int
    basis: Basis
    outcome: int
    probability: float


class ZeroProbabilityBranch(ValueError):
    """Requested measurement outcome has (numerically) zero probability."""


class StateVector:
    """Dense amplitude vector over ``n_qubits`` qubits; mutated in place."""

    def __init__(self, amps, n_qubits: int | None = None):
        amps = np.ascontiguousarray(amps, dtype=complex)
        n = int(round(math.log2(amps.shape[0]))) if n_qubits is None else n_qubits
        if amps.ndim != 1 or amps.shape[0] != 1 << n:
            raise ValueError(f"amplitude array of shape {amps.shape} is not 2^{n}")
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds the simulator cap of {MAX_QUBITS}")
        self.n_qubits = n
        self.amps = amps

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        amps = np.zeros(1 << n, dtype=complex)
        amps[0] = 1
        return cls(amps, n)

    @classmethod
    def product(cls, vectors: Sequence[np.ndarray]) -> "StateVector":
        if len(vectors) > MAX_QUBITS:
            raise ValueError(f"{len(vectors)} qubits exceeds the simulator cap of {MAX_QUBITS}")
        amps = np.ones(1, dtype=complex)
        for v in vectors:
            # qubit q is bit q, so later qubits are more significant
            amps = np.kron(np.asarray(v, dtype=complex), amps)
        return cls(amps, len(vectors))

    def copy(self) -> "StateVector":
        return StateVector(self.amps.copy(), self.n_qubits)

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def _check(self, *qubits: int) -> None:
        for q in qubits:
            if not 0 <= q < self.n_qubits:
                raise IndexError(f"qubit {q} out of range for {self.n_qubits} qubits")

    def apply_gate(self, qubit: int, u) -> "StateVector":
        self._check(qubit)
        u = np.asarray(u, dtype=complex)
        if u[0, 1] == 0 and u[1, 0] == 0:
            _kernels.apply_diag(self.amps, qubit, complex(u[0, 0]), complex(u[1, 1]))
        else:
            _kernels.apply_1q(self.amps, qubit, u.tolist())
        return self

    def apply_cz(self, i: int, j: int) -> "StateVector":
        self._check(i, j)
        if i == j:
            raise ValueError("CZ needs two distinct qubits")
        _kernels.apply_cz(self.amps, i, j)
        return self

    def measure(
        self,
        qubit: int,
        basis: Basis,
        rng: np.random.Generator | None = None,
        outcome: int | None = None,
    ) -> MeasurementRecord:
        """Projective measurement; pass ``rng`` to sample or ``outcome`` to branch."""
        self._check(qubit)
        if (rng is None) == (outcome is None):
            raise ValueError("give exactly one of rng (sampling) or outcome (branching)")
        bra = basis.bra_matrix().tolist()
        p0, p1 = _kernels.measure_probs(self.amps, qubit, bra)
        total = p0 + p1
        p1 = min(max(p1 / total, 0.0), 1.0)
        if outcome is None:
            outcome = int(rng.random() < p1)
        prob = p1 if outcome else 1.0 - p1
        if prob <= ZERO_BRANCH:
            raise ZeroProbabilityBranch(f"outcome {outcome} on qubit {qubit} has probability {prob:.3g}")
        _kernels.project(self.amps, qubit, bra, outcome, 1.0 / math.sqrt(prob * total))
        return MeasurementRecord(qubit, basis, outcome, prob)

    def outcome_probabilities(self, qubit: int, basis: Basis) -> tuple[float, float]:
        """Probabilities of outcomes 0 and 1 without disturbing the state."""
        self._check(qubit)
        p0, p1 = _kernels.measure_probs(self.amps, qubit, basis.bra_matrix().tolist())
        p1 = min(max(p1 / (p0 + p1), 0.0), 1.0)
        return 1.0 - p1, p1

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def reduced_amplitudes(self, keep: Sequence[int], fixed: dict[int, np.ndarray]) -> np.ndarray:
        """Contract the qubits in ``fixed`` with the given bras; order remaining axes as ``keep``."""
        t = self.amps.reshape([2] * self.n_qubits)
        # numpy axis a corresponds to qubit n-1-a
        axis_of = {q: self.n_qubits - 1 - q for q in range(self.n_qubits)}
        order = sorted(fixed, reverse=True)
        for q in order:
            t = np.tensordot(t, np.asarray(fixed[q]).conj(), axes=([axis_of[q]], [0]))
            for other in axis_of:
                if axis_of[other] > axis_of[q]:
                    axis_of[other] -= 1
        if sorted(keep) != sorted(set(range(self.n_qubits)) - set(fixed)):
            raise ValueError("keep and fixed must partition the qubits")
        # output little-endian over keep: keep[0] least significant
        perm = [axis_of[q] for q in reversed(keep)]
        return np.ascontiguousarray(np.transpose(t, perm)).reshape(-1)

    def fidelity(self, other: "StateVector") -> float:
        return float(abs(np.vdot(self.amps, other.amps)) ** 2 / (self.norm() * other.norm()))

    def dump(self) -> str:
        return "".join(f"{i} {a.real:.17g} {a.imag:.17g}\n" for i, a in enumerate(self.amps))


def prepare_product(specs: Sequence[PlusZS | BridgeY]) -> StateVector:
    for s in specs:
        if s.r not in (0, 1) or s.d not in (0, 1):
            raise ValueError(f"preparation keys must be bits: {s}")
    return StateVector.product([s.vector() for s in specs])


def apply_cz(state: StateVector, i: int, j: int) -> StateVector:
    return state.apply_cz(i, j)


def measure(state: StateVector, qubit: int, basis: Basis, *, rng=None, outcome=None):
    record = state.measure(qubit, basis, rng=rng, outcome=outcome)
    return record, state


class Branch(NamedTuple):
    outcomes: tuple[int, ...]
    probability: float
    state: StateVector | None  # None for pruned branches

    @property
    def label(self) -> str:
        return "".join(map(str, self.outcomes))


def enumerate_branches(state: StateVector, plan: Sequence[tuple[int, Basis]]) -> list[Branch]:
    """Depth-first expansion of every outcome sequence of ``plan``.

    Branches below ``PRUNE_THRESHOLD`` are kept in the list with ``state=None``
    so their (negligible) mass stays accounted for.
    """
    if len(plan) > MAX_PLAN_LENGTH:
        raise ValueError(f"plan of {len(plan)} measurements exceeds cap {MAX_PLAN_LENGTH}")
    out: list[Branch] = []

    def expand(current: StateVector, depth: int, outcomes: tuple[int, ...], prob: float):
        if depth == len(plan):
            out.append(Branch(outcomes, prob, current))
            return
        qubit, basis = plan[depth]
        for bit, p in enumerate(current.outcome_probabilities(qubit, basis)):
            joint = prob * p
            if joint < PRUNE_THRESHOLD or p <= ZERO_BRANCH:
                out.append(Branch(outcomes + (bit,) + (0,) * (len(plan) - depth - 1), joint, None))
                continue
            child = current.copy() if bit == 0 else current
            child.measure(qubit, basis, outcome=bit)
            expand(child, depth + 1, outcomes + (bit,), joint)

    expand(state.copy(), 0, (), 1.0)
    return out


def joint_distribution(state: StateVector, qubits: Sequence[int], bases: Sequence[Basis]) -> np.ndarray:
    """Joint outcome probabilities of measuring ``qubits`` in ``bases``.

    Index bit ``i`` of the result is the outcome on ``qubits[i]``; all other
    qubits are traced out.
    """
    work = state.copy()
    for q, b in zip(qubits, bases):
        _kernels.apply_1q(work.amps, q, b.bra_matrix().tolist())
    probs = work.probabilities().reshape([2] * work.n_qubits)
    axis_of = {q: work.n_qubits - 1 - q for q in range(work.n_qubits)}
    traced = tuple(axis_of[q] for q in range(work.n_qubits) if q not in set(qubits))
    marg = probs.sum(axis=traced) if traced else probs
    remaining = sorted((axis_of[q] for q in qubits))
    pos = {a: i for i, a in enumerate(remaining)}
    perm = [pos[axis_of[q]] for q in reversed(list(qubits))]
    return np.ascontiguousarray(np.transpose(marg, perm)).reshape(-1) / work.norm()
