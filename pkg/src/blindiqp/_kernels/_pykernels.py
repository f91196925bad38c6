"""Pure numpy fallback for the compiled kernels.

Every function mutates or returns exactly what its compiled twin does;
the test suite runs both against each other.
"""

from __future__ import annotations

import numpy as np


def _split(amps: np.ndarray, qubit: int) -> np.ndarray:
    # little-endian: qubit q is bit q of the flat index
    return amps.reshape(-1, 2, 1 << qubit)


def apply_1q(amps: np.ndarray, qubit: int, u) -> None:
    view = _split(amps, qubit)
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = u[0][0] * a0 + u[0][1] * a1
    view[:, 1, :] = u[1][0] * a0 + u[1][1] * a1


def apply_diag(amps: np.ndarray, qubit: int, d0: complex, d1: complex) -> None:
    view = _split(amps, qubit)
    view[:, 0, :] *= d0
    view[:, 1, :] *= d1


def apply_cz(amps: np.ndarray, i: int, j: int) -> None:
    idx = np.arange(amps.shape[0])
    mask = (1 << i) | (1 << j)
    amps[(idx & mask) == mask] *= -1


def measure_probs(amps: np.ndarray, qubit: int, u) -> tuple[float, float]:
    view = _split(amps, qubit)
    a0, a1 = view[:, 0, :], view[:, 1, :]
    b0 = u[0][0] * a0 + u[0][1] * a1
    b1 = u[1][0] * a0 + u[1][1] * a1
    return float(np.sum(b0.real**2 + b0.imag**2)), float(np.sum(b1.real**2 + b1.imag**2))


def project(amps: np.ndarray, qubit: int, u, outcome: int, scale: float) -> None:
    view = _split(amps, qubit)
    w0, w1 = u[outcome]
    c = w0 * view[:, 0, :] + w1 * view[:, 1, :]
    view[:, 0, :] = np.conj(w0) * scale * c
    view[:, 1, :] = np.conj(w1) * scale * c


def phase_sums(rows: np.ndarray, n_bits: int) -> np.ndarray:
    y = np.arange(1 << n_bits, dtype=np.uint64)
    out = np.zeros(1 << n_bits, dtype=np.int64)
    for row in rows:
        parity = np.bitwise_count(y & np.uint64(row)) & 1
        out += 1 - 2 * parity.astype(np.int64)
    return out


def fwht(a: np.ndarray) -> None:
    n = a.shape[0]
    h = 1
    while h < n:
        view = a.reshape(-1, 2, h)
        x = view[:, 0, :].copy()
        view[:, 0, :] += view[:, 1, :]
        view[:, 1, :] = x - view[:, 1, :]
        h *= 2


def weight_distribution(generators: np.ndarray, length: int) -> np.ndarray:
    counts = np.zeros(length + 1, dtype=np.int64)
    words = np.zeros(1, dtype=np.uint64)
    for g in generators:
        words = np.concatenate([words, words ^ np.uint64(g)])
    np.add.at(counts, np.bitwise_count(words).astype(np.int64), 1)
    return counts
