"""Repeated blind delegation of quadratic-residue X-programs as a hypothesis test.

Each run hides a fresh direction ``s`` inside a program whose bias towards
``s`` is ``cos^2(pi/8)``, delegates it, and records whether the returned
string is orthogonal to ``s``.  An honest quantum server reproduces the bias;
simple cheats land far from it.

Per-run seeds: run ``i`` uses the integer ``u_i`` drawn as
``SeedSequence(master).spawn(T)[i].generate_state(1, uint64)``.  The protocol
run is seeded with ``u_i`` (children 0 and 1 of ``SeedSequence(u_i)``) and the
hidden direction comes from child 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .gf2 import BitMatrix, BitVector, is_prime, qr_generator
from .mbqc import ExtendedIqpGraph
from .protocol import (
    HonestServer,
    ProtocolTranscript,
    PublicInfo,
    QDistribution,
    ServerStrategy,
    run_protocol,
)

THETA = math.pi / 8
EXPECTED_BIAS = math.cos(math.pi / 8) ** 2
CLASSICAL_CEILING = 0.75
STRICT_CONFIDENCE = 1 - 1e-6


@dataclass(frozen=True)
class HypothesisParams:
    n_a: int = 7
    reps: int = 2000
    tolerance: float = 0.03
    seed: int = 0
    confidence: float = 0.95
    theta: float = THETA

    def __post_init__(self):
        validate_n_a(self.n_a)
        if self.reps < 1:
            raise ValueError(f"reps must be at least 1, got {self.reps}")
        if not 0 < self.tolerance <= 0.1:
            raise ValueError(f"tolerance must lie in (0, 0.1], got {self.tolerance}")
        if not 0 < self.confidence < 1:
            raise ValueError(f"confidence must lie in (0, 1), got {self.confidence}")
        if self.theta != THETA:
            raise ValueError("the test is defined for theta = pi/8 only")

    @property
    def n_p(self) -> int:
        return (self.n_a + 1) // 2

    def window(self) -> tuple[float, float]:
        return EXPECTED_BIAS - self.tolerance, EXPECTED_BIAS + self.tolerance


@dataclass
class HypothesisResult:
    params: HypothesisParams
    accept: bool
    empirical_bias: float
    ci_halfwidth: float
    ci_halfwidth_strict: float
    outcomes: np.ndarray = field(repr=False)
    transcripts: list[ProtocolTranscript] = field(default_factory=list, repr=False)
    directions: list[BitVector] = field(default_factory=list, repr=False)
    expected_bias: float = EXPECTED_BIAS


def validate_n_a(n_a: int) -> None:
    if not is_prime(n_a) or (n_a + 1) % 8:
        raise ValueError(f"n_a={n_a} must be a prime with n_a + 1 divisible by 8")


def transformation_matrix(s_hat: BitVector) -> BitMatrix:
    """Identity with ``s_hat`` written into the last column above the diagonal."""
    n_p = len(s_hat) + 1
    rows = [[int(h == j) for j in range(n_p)] for h in range(n_p)]
    for h, bit in enumerate(s_hat):
        rows[h][n_p - 1] = bit
    return BitMatrix.from_rows(rows)


def program_for(n_a: int, s_hat: BitVector) -> BitMatrix:
    """``Q = Q_s A(s_hat)`` with ``Q_s`` the residue generator plus a ones column."""
    q_r = qr_generator(n_a)
    q_s = q_r.hstack(BitMatrix.from_rows([[1]] * n_a))
    return q_s @ transformation_matrix(s_hat)


def public_info(n_a: int) -> PublicInfo:
    q_r = qr_generator(n_a)
    rows = [list(q_r.row(h)) + [-1] for h in range(n_a)]
    n_p = q_r.cols + 1
    return PublicInfo(ExtendedIqpGraph.from_rows(rows), QDistribution("uniform-over-s-hat", n_p), THETA)


def build_instance(n_a: int, s_hat: BitVector | None = None, seed=None) -> tuple[BitMatrix, PublicInfo, BitVector]:
    """Return ``(Q, public info, s)`` with ``s`` the hidden direction."""
    validate_n_a(n_a)
    n_p = (n_a + 1) // 2
    if s_hat is None:
        s_hat = BitVector.random(n_p - 1, np.random.default_rng(seed))
    if len(s_hat) != n_p - 1:
        raise ValueError(f"s_hat must have length {n_p - 1}, got {len(s_hat)}")
    a = transformation_matrix(s_hat)
    s_prime = BitVector.from_int(1 << (n_p - 1), n_p)
    # A is its own inverse
    s = a.apply(s_prime)
    return program_for(n_a, s_hat), public_info(n_a), s


def orthogonality_outcome(x_tilde: BitVector, s: BitVector) -> int:
    if len(x_tilde) != len(s):
        raise ValueError(f"length mismatch: {len(x_tilde)} vs {len(s)}")
    return 1 - x_tilde.dot(s)


def hoeffding_halfwidth(reps: int, confidence: float) -> float:
    """Two-sided Hoeffding half-width for the mean of ``reps`` values in [0, 1]."""
    return math.sqrt(math.log(2 / (1 - confidence)) / (2 * reps))


def run_seeds(master: int, reps: int) -> list[int]:
    return [int(c.generate_state(1, np.uint64)[0]) for c in np.random.SeedSequence(master).spawn(reps)]


def run_hypothesis_test(
    params: HypothesisParams,
    server: ServerStrategy | None = None,
    *,
    exact: bool = False,
    progress: Callable[[int], None] | None = None,
) -> HypothesisResult:
    """Run ``params.reps`` independent delegations and decide.

    With ``exact`` the per-run value is the exact probability (over the
    server's measurement branches) that the run's output is orthogonal,
    instead of a sampled 0/1 outcome.
    """
    server = HonestServer() if server is None else server
    pub = public_info(params.n_a)
    outcomes = np.zeros(params.reps)
    transcripts, directions = [], []
    for i, u in enumerate(run_seeds(params.seed, params.reps)):
        s_rng = np.random.default_rng(np.random.SeedSequence(u).spawn(3)[2])
        q, _, s = build_instance(params.n_a, BitVector.random(params.n_p - 1, s_rng))
        directions.append(s)
        if exact:
            outcomes[i] = run_protocol(q, pub, server, seed=u, exact=True).orthogonal_mass(s)
        else:
            t = run_protocol(q, pub, server, seed=u)
            transcripts.append(t)
            outcomes[i] = orthogonality_outcome(t.x_tilde, s)
        if progress is not None:
            progress(i + 1)
    bias = float(outcomes.mean())
    lo, hi = params.window()
    return HypothesisResult(
        params=params,
        accept=bool(lo <= bias <= hi),
        empirical_bias=bias,
        ci_halfwidth=hoeffding_halfwidth(params.reps, params.confidence),
        ci_halfwidth_strict=hoeffding_halfwidth(params.reps, STRICT_CONFIDENCE),
        outcomes=outcomes,
        transcripts=transcripts,
        directions=directions,
    )
