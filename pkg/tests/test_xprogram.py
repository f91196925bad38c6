import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from blindiqp.gf2 import BitMatrix, BitVector, random_invertible
from blindiqp.hypothesis import build_instance
from blindiqp.xprogram import (
    OutcomeDistribution,
    XProgram,
    bias_empirical,
    bias_theoretical,
    codeword_weights,
    exact_distribution,
    restricted_program_matrix,
    sample,
)

EXAMPLE_Q = BitMatrix.from_rows([[1, 0, 1], [0, 1, 0]])
C2, S2 = math.cos(math.pi / 8) ** 2, math.sin(math.pi / 8) ** 2


def expm_distribution(q: BitMatrix, theta: float) -> np.ndarray:
    """Independent oracle: exponentiate the X-program Hamiltonian densely."""
    x = np.array([[0, 1], [1, 0]])
    ham = np.zeros((1 << q.cols, 1 << q.cols), dtype=complex)
    for h in range(q.rows):
        term = np.eye(1)
        for j in reversed(range(q.cols)):
            term = np.kron(term, x if q[h, j] else np.eye(2))
        ham += term
    return np.abs(expm(1j * theta * ham)[:, 0]) ** 2


def random_program(rng, max_rows=5, max_cols=4, theta=None):
    q = BitMatrix.random(int(rng.integers(1, max_rows + 1)), int(rng.integers(1, max_cols + 1)), rng)
    return XProgram(q, rng.uniform(0, 2 * math.pi) if theta is None else theta)


def test_single_row_distribution():
    for theta in (0.3, math.pi / 8, 2.0):
        d = exact_distribution(XProgram(BitMatrix.from_rows([[1]]), theta))
        assert d[0] == pytest.approx(math.cos(theta) ** 2, abs=1e-12)
        assert d[1] == pytest.approx(math.sin(theta) ** 2, abs=1e-12)


def test_theta_zero_is_identity():
    d = exact_distribution(XProgram(BitMatrix.random(4, 3, np.random.default_rng(2)), 0.0))
    assert d[0] == pytest.approx(1.0, abs=1e-12)


def test_example_program_distribution_frozen():
    # rows act on disjoint qubits, so the distribution factorizes; values also
    # reproduced by the dense matrix exponential
    expected = np.zeros(8)
    expected[[0b000, 0b010, 0b101, 0b111]] = [C2 * C2, C2 * S2, S2 * C2, S2 * S2]
    d = exact_distribution(XProgram(EXAMPLE_Q, math.pi / 8))
    assert np.allclose(d.probs, expected, atol=1e-12)
    assert np.allclose(expm_distribution(EXAMPLE_Q, math.pi / 8), expected, atol=1e-12)


def test_matches_matrix_exponential_on_random_programs():
    rng = np.random.default_rng(11)
    for _ in range(40):
        p = random_program(rng, max_rows=6, max_cols=5)
        d = exact_distribution(p)
        assert d.probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(d.probs, expm_distribution(p.q, p.theta), atol=1e-10)


def test_oversize_rejected():
    with pytest.raises(ValueError):
        exact_distribution(XProgram(BitMatrix.zeros(1, 21), 0.1))


def test_theta_out_of_range_rejected():
    with pytest.raises(ValueError):
        XProgram(EXAMPLE_Q, -0.1)
    with pytest.raises(ValueError):
        XProgram(EXAMPLE_Q, 7.0)


def test_program_file_round_trip():
    p = XProgram(EXAMPLE_Q, math.pi / 8)
    text = p.format()
    assert text.endswith("theta 1 8\n")
    back = XProgram.parse(text)
    assert back.q == EXAMPLE_Q and back.theta == pytest.approx(math.pi / 8)


@pytest.mark.parametrize(
    "text", ["1 1\n1\n", "1 1\n1\ntheta 1\n", "1 1\n1\ntheta 1 0\n", "1 1\n1\nangle 1 8\n"]
)
def test_program_parse_errors(text):
    with pytest.raises(ValueError):
        XProgram.parse(text)


def test_sampling_deterministic_and_theta_zero():
    p = XProgram(EXAMPLE_Q, math.pi / 8)
    assert sample(p, 5, size=20) == sample(p, 5, size=20)
    zero = XProgram(EXAMPLE_Q, 0.0)
    assert all(x == BitVector.zeros(3) for x in sample(zero, 1, size=50))


def test_sampling_frequency():
    draws = sample(XProgram(BitMatrix.from_rows([[1]]), math.pi / 4), 3, size=100_000)
    ones = sum(x.bits[0] for x in draws) / len(draws)
    assert abs(ones - 0.5) < 0.01


def test_bias_empirical_examples():
    samples = [BitVector.parse("01"), BitVector.parse("11")]
    assert bias_empirical(samples, BitVector.parse("11")) == 0.5
    assert bias_empirical(samples, BitVector.parse("00")) == 1.0
    with pytest.raises(ValueError):
        bias_empirical(samples, BitVector.parse("1"))


def test_bias_empirical_uniform_samples():
    rng = np.random.default_rng(0)
    samples = [BitVector.random(5, rng) for _ in range(20_000)]
    assert abs(bias_empirical(samples, BitVector.parse("10110")) - 0.5) < 0.02


def test_bias_theoretical_single_row():
    for theta in (0.2, 1.1):
        p = XProgram(BitMatrix.from_rows([[1]]), theta)
        assert bias_theoretical(p, BitVector.parse("1")) == pytest.approx(math.cos(theta) ** 2, abs=1e-12)


def test_bias_theoretical_no_rows_selected():
    p = XProgram(EXAMPLE_Q, 0.7)
    assert bias_theoretical(p, BitVector.parse("000")) == 1.0
    assert restricted_program_matrix(EXAMPLE_Q, BitVector.parse("000")) is None


def test_codeword_weights_frozen():
    # brute-force enumeration of all coefficient vectors
    q7, _, s7 = build_instance(7, BitVector.parse("000"))
    assert dict(enumerate(codeword_weights(q7))) == {0: 1, 1: 0, 2: 0, 3: 7, 4: 7, 5: 0, 6: 0, 7: 1}
    q23, _, _ = build_instance(23, BitVector.zeros(11))
    counts = codeword_weights(q23)
    nonzero = {w: int(c) for w, c in enumerate(counts) if c}
    # binary Golay code weight enumerator
    assert nonzero == {0: 1, 7: 253, 8: 506, 11: 1288, 12: 1288, 15: 506, 16: 253, 23: 1}


def test_codeword_weights_distinct_codewords_only():
    # duplicate columns do not double count
    m = BitMatrix.from_rows([[1, 1], [1, 1]])
    assert list(codeword_weights(m)) == [1, 0, 1]


def test_bias_theoretical_equals_orthogonal_mass():
    rng = np.random.default_rng(5)
    for _ in range(100):
        p = random_program(rng, max_rows=6, max_cols=4)
        d = exact_distribution(p)
        for s in range(1 << p.n_p):
            sv = BitVector.from_int(s, p.n_p)
            assert bias_theoretical(p, sv) == pytest.approx(d.orthogonal_mass(sv), abs=1e-9)


def test_bias_invariant_under_invertible_change_of_basis():
    rng = np.random.default_rng(9)
    from blindiqp.gf2 import invert

    for _ in range(30):
        p = random_program(rng, max_rows=5, max_cols=4)
        a = random_invertible(p.n_p, rng)
        s = BitVector.random(p.n_p, rng)
        moved = XProgram(p.q @ a, p.theta)
        # rows q_h A pair with A^-1 s exactly as q_h pairs with s
        s_moved = invert(a).apply(s)
        assert bias_theoretical(moved, s_moved) == pytest.approx(bias_theoretical(p, s), abs=1e-12)


def test_bias_unchanged_by_orthogonal_rows():
    p = XProgram(EXAMPLE_Q, 0.4)
    s = BitVector.parse("110")
    extra = BitMatrix.from_rows(EXAMPLE_Q.to_rows() + [[1, 1, 0], [0, 0, 1]])
    assert bias_theoretical(XProgram(extra, 0.4), s) == pytest.approx(bias_theoretical(p, s), abs=1e-12)


@pytest.mark.parametrize("n_a", [7, 23])
def test_quadratic_residue_bias(n_a):
    rng = np.random.default_rng(n_a)
    for _ in range(3):
        q, _, s = build_instance(n_a, seed=rng)
        assert bias_theoretical(XProgram(q, math.pi / 8), s) == pytest.approx((2 + math.sqrt(2)) / 4, abs=1e-12)


def test_distribution_validation_and_format():
    with pytest.raises(ValueError):
        OutcomeDistribution(2, np.ones(3))
    d = exact_distribution(XProgram(BitMatrix.from_rows([[1]]), 0.0))
    assert d.format() == "0 1\n1 0\n"
    with pytest.raises(ValueError):
        d.total_variation(exact_distribution(XProgram(EXAMPLE_Q, 0.0)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_distribution_is_normalized(seed):
    p = random_program(np.random.default_rng(seed), max_rows=6, max_cols=6)
    assert exact_distribution(p).probs.sum() == pytest.approx(1.0, abs=1e-12)
