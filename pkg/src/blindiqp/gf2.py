"""Bit-packed linear algebra over GF(2).

Matrices are stored row-major with each row packed into a Python ``int``
(bit ``j`` of ``data[i]`` is entry ``(i, j)``).  Vectors are tuples of bits.
Both types are immutable and hashable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MATROID_ROW_CAP = 8


class SingularMatrixError(ValueError):
    """Raised when inverting a matrix that has no inverse over GF(2)."""


@dataclass(frozen=True)
class BitVector:
    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"bit vector entries must be 0 or 1, got {self.bits}")

    @classmethod
    def of(cls, bits: Iterable[int]) -> "BitVector":
        return cls(tuple(int(b) for b in bits))

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls((0,) * length)

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitVector":
        """Little-endian decode: bit ``j`` of ``value`` becomes entry ``j``."""
        return cls(tuple((value >> j) & 1 for j in range(length)))

    @classmethod
    def parse(cls, text: str) -> "BitVector":
        text = text.strip()
        if text in ("", "-"):
            return cls(())
        if set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls(tuple(int(c) for c in text))

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "BitVector":
        return cls(tuple(int(b) for b in rng.integers(0, 2, size=length)))

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, index):
        return self.bits[index]

    def __str__(self) -> str:
        return "".join(map(str, self.bits)) if self.bits else "-"

    def to_int(self) -> int:
        return sum(b << j for j, b in enumerate(self.bits))

    def to_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)

    def dot(self, other: "BitVector") -> int:
        if len(self) != len(other):
            raise ValueError(f"length mismatch: {len(self)} vs {len(other)}")
        return bin(self.to_int() & other.to_int()).count("1") & 1

    def __add__(self, other: "BitVector") -> "BitVector":
        if len(self) != len(other):
            raise ValueError(f"length mismatch: {len(self)} vs {len(other)}")
        return BitVector(tuple(a ^ b for a, b in zip(self.bits, other.bits)))

    @property
    def weight(self) -> int:
        return sum(self.bits)


@dataclass(frozen=True)
class BitMatrix:
    rows: int
    cols: int
    data: tuple[int, ...]

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"matrix must be at least 1x1, got {self.rows}x{self.cols}")
        if len(self.data) != self.rows:
            raise ValueError("row data length does not match row count")
        limit = 1 << self.cols
        if any(r < 0 or r >= limit for r in self.data):
            raise ValueError("row word has bits beyond the column count")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "BitMatrix":
        rows = [list(r) for r in rows]
        if not rows or not rows[0]:
            raise ValueError("matrix must be at least 1x1")
        ncols = len(rows[0])
        data = []
        for r in rows:
            if len(r) != ncols:
                raise ValueError("ragged rows")
            if any(v not in (0, 1) for v in r):
                raise ValueError(f"entries must be 0 or 1, got {r}")
            data.append(sum(int(v) << j for j, v in enumerate(r)))
        return cls(len(rows), ncols, tuple(data))

    @classmethod
    def from_array(cls, array) -> "BitMatrix":
        a = np.asarray(array)
        if a.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls.from_rows(a.astype(int).tolist())

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]]) -> "BitMatrix":
        return cls.from_rows(list(zip(*columns)))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, (0,) * rows)

    @classmethod
    def random(cls, rows: int, cols: int, rng: np.random.Generator) -> "BitMatrix":
        return cls.from_array(rng.integers(0, 2, size=(rows, cols)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, index: tuple[int, int]) -> int:
        i, j = index
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(index)
        return (self.data[i] >> j) & 1

    def row(self, i: int) -> BitVector:
        return BitVector.from_int(self.data[i], self.cols)

    def column(self, j: int) -> BitVector:
        return BitVector(tuple((r >> j) & 1 for r in self.data))

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for i, r in enumerate(self.data):
            for j in range(self.cols):
                out[i, j] = (r >> j) & 1
        return out

    def to_rows(self) -> list[list[int]]:
        return self.to_array().tolist()

    def column_words(self) -> list[int]:
        """Columns packed as ints, bit ``i`` = row ``i``."""
        return [sum(((r >> j) & 1) << i for i, r in enumerate(self.data)) for j in range(self.cols)]

    @classmethod
    def from_column_words(cls, words: Sequence[int], rows: int) -> "BitMatrix":
        data = tuple(sum(((w >> i) & 1) << j for j, w in enumerate(words)) for i in range(rows))
        return cls(rows, len(words), data)

    def transpose(self) -> "BitMatrix":
        return BitMatrix(self.cols, self.rows, tuple(self.column_words()))

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        return mat_mul(self, other)

    def apply(self, v: BitVector) -> BitVector:
        """Matrix-vector product ``M v`` with ``v`` a column vector."""
        if len(v) != self.cols:
            raise ValueError(f"vector length {len(v)} does not match {self.cols} columns")
        x = v.to_int()
        return BitVector(tuple(bin(r & x).count("1") & 1 for r in self.data))

    def select_rows(self, indices: Iterable[int]) -> "BitMatrix":
        return BitMatrix.from_rows([self.row(i).bits for i in indices])

    def hstack(self, other: "BitMatrix") -> "BitMatrix":
        if self.rows != other.rows:
            raise ValueError("row count mismatch")
        data = tuple(a | (b << self.cols) for a, b in zip(self.data, other.data))
        return BitMatrix(self.rows, self.cols + other.cols, data)

    def format(self) -> str:
        lines = [f"{self.rows} {self.cols}"]
        lines += ["".join(str((r >> j) & 1) for j in range(self.cols)) for r in self.data]
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "BitMatrix":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        return _parse_matrix_lines(lines)[0]

    def __str__(self) -> str:
        return self.format()


def _parse_matrix_lines(lines: list[str]) -> tuple[BitMatrix, list[str]]:
    """Parse a matrix from the head of ``lines``; returns it with the unread tail."""
    if not lines:
        raise ValueError("empty matrix text")
    try:
        rows, cols = (int(t) for t in lines[0].split())
    except ValueError:
        raise ValueError(f"bad matrix header {lines[0]!r}, expected 'rows cols'") from None
    body = lines[1 : 1 + rows]
    if len(body) != rows:
        raise ValueError(f"expected {rows} matrix rows, found {len(body)}")
    parsed = []
    for ln in body:
        if len(ln) != cols or set(ln) - {"0", "1"}:
            raise ValueError(f"bad matrix row {ln!r} for {cols} columns")
        parsed.append([int(c) for c in ln])
    return BitMatrix.from_rows(parsed), lines[1 + rows :]


def mat_mul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    out = []
    for r in a.data:
        acc = 0
        k = 0
        while r:
            if r & 1:
                acc ^= b.data[k]
            r >>= 1
            k += 1
        out.append(acc)
    return BitMatrix(a.rows, b.cols, tuple(out))


def _rref_words(words: list[int], nbits: int) -> list[int]:
    """Reduced row echelon form of packed rows, pivoting on bit 0 first.

    Returns the nonzero reduced rows in pivot order.
    """
    rows = [w for w in words if w]
    pivot_row = 0
    for bit in range(nbits):
        mask = 1 << bit
        found = next((i for i in range(pivot_row, len(rows)) if rows[i] & mask), None)
        if found is None:
            continue
        rows[pivot_row], rows[found] = rows[found], rows[pivot_row]
        p = rows[pivot_row]
        for i in range(len(rows)):
            if i != pivot_row and rows[i] & mask:
                rows[i] ^= p
        pivot_row += 1
        if pivot_row == len(rows):
            break
    return rows[:pivot_row]


def column_echelon_form(m: BitMatrix) -> BitMatrix:
    """Unique reduced column echelon form; zero columns are moved to the right."""
    reduced = _rref_words(m.column_words(), m.rows)
    reduced += [0] * (m.cols - len(reduced))
    return BitMatrix.from_column_words(reduced, m.rows)


def rank(m: BitMatrix) -> int:
    return len(_rref_words(list(m.data), m.cols))


def invert(m: BitMatrix) -> BitMatrix:
    if m.rows != m.cols:
        raise ValueError(f"cannot invert non-square {m.shape} matrix")
    n = m.rows
    aug = [r | (1 << (n + i)) for i, r in enumerate(m.data)]
    for col in range(n):
        mask = 1 << col
        found = next((i for i in range(col, n) if aug[i] & mask), None)
        if found is None:
            raise SingularMatrixError("matrix is singular over GF(2)")
        aug[col], aug[found] = aug[found], aug[col]
        for i in range(n):
            if i != col and aug[i] & mask:
                aug[i] ^= aug[col]
    return BitMatrix(n, n, tuple(r >> n for r in aug))


def is_invertible(m: BitMatrix) -> bool:
    return m.rows == m.cols and rank(m) == m.rows


def random_invertible(n: int, rng: np.random.Generator) -> BitMatrix:
    while True:
        m = BitMatrix.random(n, n, rng)
        if is_invertible(m):
            return m


def _nonzero_echelon_columns(m: BitMatrix) -> tuple[int, ...]:
    return tuple(w for w in _rref_words(m.column_words(), m.rows))


def matroid_equivalent(m1: BitMatrix, m2: BitMatrix, row_perm: Sequence[int] | None = None) -> bool:
    """True iff some row permutation of ``m2`` shares ``m1``'s column echelon form.

    Zero columns are dropped after reduction, so column counts may differ.
    Row counts must match.  Without ``row_perm`` this is a brute force over
    row permutations, so only matrices with at most ``MATROID_ROW_CAP`` rows
    are accepted; with it, only that permutation is tried, at any size.
    """
    if m1.rows != m2.rows:
        raise ValueError(f"row counts differ: {m1.rows} vs {m2.rows}")
    if row_perm is not None:
        if sorted(row_perm) != list(range(m2.rows)):
            raise ValueError("row_perm must be a permutation of the row indices")
        return _nonzero_echelon_columns(m1) == _nonzero_echelon_columns(m2.select_rows(list(row_perm)))
    if m1.rows > MATROID_ROW_CAP:
        raise ValueError(f"exhaustive matroid search limited to {MATROID_ROW_CAP} rows")
    target = _nonzero_echelon_columns(m1)
    if len(target) != rank(m2):
        return False
    for perm in itertools.permutations(range(m2.rows)):
        if _nonzero_echelon_columns(m2.select_rows(perm)) == target:
            return True
    return False


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, int(n**0.5) + 1))


def quadratic_residues(n: int) -> set[int]:
    return {(x * x) % n for x in range(1, n)}


def qr_generator(n_a: int) -> BitMatrix:
    """Quadratic residue code generator with ``(n_a - 1) / 2`` columns.

    Column ``j`` is the indicator of nonzero residues mod ``n_a`` cyclically
    shifted down by ``j``.
    """
    if not is_prime(n_a) or (n_a + 1) % 8:
        raise ValueError(f"n_a must be a prime with n_a + 1 divisible by 8, got {n_a}")
    residues = quadratic_residues(n_a)
    indicator = [1 if i in residues else 0 for i in range(n_a)]
    k = (n_a - 1) // 2
    columns = [[indicator[(i - j) % n_a] for i in range(n_a)] for j in range(k)]
    return BitMatrix.from_columns(columns)
