"""X-programs, their exact output distribution, and bias in a hidden direction.

Outcome strings are encoded little-endian: entry ``j`` of an outcome is bit
``j`` of its integer index.  This convention is used everywhere in the
package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .gf2 import BitMatrix, BitVector, _parse_matrix_lines, _rref_words

MAX_OUTPUT_QUBITS = 20
MAX_CODE_RANK = 20


@dataclass(frozen=True)
class XProgram:
    q: BitMatrix
    theta: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= 2 * math.pi + 1e-12):
            raise ValueError(f"theta must lie in [0, 2pi], got {self.theta}")

    @property
    def n_a(self) -> int:
        return self.q.rows

    @property
    def n_p(self) -> int:
        return self.q.cols

    def format(self) -> str:
        ratio = Fraction(self.theta / math.pi).limit_denominator(1 << 20)
        if abs(float(ratio) * math.pi - self.theta) > 1e-12:
            raise ValueError(f"theta={self.theta} is not a small rational multiple of pi")
        return self.q.format() + f"theta {ratio.numerator} {ratio.denominator}\n"

    @classmethod
    def parse(cls, text: str) -> "XProgram":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        q, rest = _parse_matrix_lines(lines)
        if len(rest) != 1 or not rest[0].startswith("theta"):
            raise ValueError("expected a final line 'theta <numerator> <denominator>'")
        parts = rest[0].split()
        if len(parts) != 3:
            raise ValueError(f"bad theta line {rest[0]!r}")
        num, den = int(parts[1]), int(parts[2])
        if den == 0:
            raise ValueError("theta denominator is zero")
        return cls(q, math.pi * num / den)


@dataclass
class OutcomeDistribution:
    n_p: int
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (1 << self.n_p,):
            raise ValueError(f"expected {1 << self.n_p} probabilities, got {self.probs.shape}")

    def __getitem__(self, outcome: BitVector | int) -> float:
        index = outcome if isinstance(outcome, int) else outcome.to_int()
        return float(self.probs[index])

    def total_variation(self, other: "OutcomeDistribution") -> float:
        if other.n_p != self.n_p:
            raise ValueError("distributions over different outcome spaces")
        return 0.5 * float(np.abs(self.probs - other.probs).sum())

    def orthogonal_mass(self, s: BitVector) -> float:
        """Probability that an outcome is orthogonal to ``s`` (the exact bias)."""
        if len(s) != self.n_p:
            raise ValueError(f"direction has length {len(s)}, expected {self.n_p}")
        x = np.arange(1 << self.n_p, dtype=np.uint64)
        parity = np.bitwise_count(x & np.uint64(s.to_int())) & 1
        return float(self.probs[parity == 0].sum())

    def format(self) -> str:
        return "".join(
            f"{BitVector.from_int(i, self.n_p)} {p:.15g}\n" for i, p in enumerate(self.probs)
        )


def _row_words(q: BitMatrix) -> np.ndarray:
    return np.array(q.data, dtype=np.uint64)


def exact_distribution(p: XProgram) -> OutcomeDistribution:
    """Output distribution of ``p`` computed in the X eigenbasis.

    ``amp(x) = 2^-n sum_y (-1)^(x.y) exp(i theta sum_h (-1)^(q_h.y))``; the
    sum over ``y`` is a Walsh-Hadamard transform.
    """
    n = p.n_p
    if n > MAX_OUTPUT_QUBITS:
        raise ValueError(f"n_p={n} exceeds the exact-distribution cap of {MAX_OUTPUT_QUBITS}")
    sums = _kernels.phase_sums(_row_words(p.q), n)
    amps = np.exp(1j * p.theta * sums.astype(float))
    _kernels.fwht(amps)
    amps /= 1 << n
    return OutcomeDistribution(n, np.abs(amps) ** 2)


def sample(p: XProgram, seed=None, size: int | None = None):
    """Draw outcomes from ``exact_distribution(p)``.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.  Returns a
    single ``BitVector`` when ``size`` is None, else a list.
    """
    rng = np.random.default_rng(seed)
    probs = exact_distribution(p).probs
    probs = probs / probs.sum()
    draws = rng.choice(probs.shape[0], size=1 if size is None else size, p=probs)
    out = [BitVector.from_int(int(i), p.n_p) for i in draws]
    return out[0] if size is None else out


def bias_empirical(samples: Sequence[BitVector], s: BitVector) -> float:
    if not samples:
        raise ValueError("no samples")
    hits = 0
    for x in samples:
        if len(x) != len(s):
            raise ValueError(f"sample length {len(x)} does not match direction length {len(s)}")
        hits += x.dot(s) == 0
    return hits / len(samples)


def restricted_program_matrix(q: BitMatrix, s: BitVector) -> BitMatrix | None:
    """Rows of ``q`` not orthogonal to ``s``; None when there are none."""
    if len(s) != q.cols:
        raise ValueError(f"direction has length {len(s)}, expected {q.cols}")
    keep = [h for h in range(q.rows) if q.row(h).dot(s) == 1]
    return q.select_rows(keep) if keep else None


def codeword_weights(generator: BitMatrix) -> np.ndarray:
    """Weight distribution of the column space of ``generator``.

    ``counts[w]`` is the number of distinct codewords of Hamming weight ``w``.
    """
    if generator.rows > 64:
        raise ValueError("codeword length above 64 is not supported")
    basis = _rref_words(generator.column_words(), generator.rows)
    if len(basis) > MAX_CODE_RANK:
        raise ValueError(f"code rank {len(basis)} exceeds the enumeration cap {MAX_CODE_RANK}")
    return _kernels.weight_distribution(np.array(basis, dtype=np.uint64), generator.rows)


def bias_theoretical(p: XProgram, s: BitVector) -> float:
    """Bias in direction ``s`` from the code spanned by the non-orthogonal rows.

    Averages ``cos^2(theta (n_s - 2 wt(c)))`` uniformly over the distinct
    codewords ``c`` of the column space of ``Q_s``.
    """
    q_s = restricted_program_matrix(p.q, s)
    if q_s is None:
        return 1.0
    counts = codeword_weights(q_s)
    n_s = q_s.rows
    weights = np.arange(n_s + 1)
    terms = np.cos(p.theta * (n_s - 2 * weights)) ** 2
    return float(np.dot(counts, terms) / counts.sum())
