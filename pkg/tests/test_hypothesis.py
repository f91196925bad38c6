import math

import numpy as np
import pytest

from blindiqp.gf2 import BitMatrix, BitVector, matroid_equivalent, qr_generator
from blindiqp.hypothesis import (
    CLASSICAL_CEILING,
    EXPECTED_BIAS,
    STRICT_CONFIDENCE,
    HypothesisParams,
    build_instance,
    hoeffding_halfwidth,
    orthogonality_outcome,
    program_for,
    public_info,
    run_hypothesis_test,
    run_seeds,
    transformation_matrix,
)
from blindiqp.mbqc import ExtendedIqpGraph, compatibility
from blindiqp.protocol import PublicInfo, QDistribution, UniformServer, ZerosServer, blindness_harness


def test_expected_bias_value():
    assert EXPECTED_BIAS == pytest.approx((2 + math.sqrt(2)) / 4, abs=1e-15)


# instance construction


def test_build_instance_identity_transformation():
    q, pub, s = build_instance(7, BitVector.parse("000"))
    q_s = qr_generator(7).hstack(BitMatrix.from_rows([[1]] * 7))
    assert transformation_matrix(BitVector.parse("000")) == BitMatrix.identity(4)
    assert q == q_s
    assert s == BitVector.parse("0001")


def test_build_instance_direction_is_last_column():
    rng = np.random.default_rng(0)
    for _ in range(20):
        s_hat = BitVector.random(3, rng)
        q, _, s = build_instance(7, s_hat)
        assert s == BitVector(s_hat.bits + (1,))
        a = transformation_matrix(s_hat)
        assert a @ a == BitMatrix.identity(4)
        assert s == a.column(3)


def test_every_row_has_odd_overlap_with_direction():
    rng = np.random.default_rng(1)
    for n_a in (7, 23):
        for _ in range(5):
            q, _, s = build_instance(n_a, seed=rng)
            assert all(q.row(h).dot(s) == 1 for h in range(n_a))


def test_public_graph_shape_and_compatibility():
    q, pub, _ = build_instance(7, BitVector.parse("101"))
    qt = pub.qtilde
    assert (qt.n_a, qt.n_p, qt.n_b) == (7, 4, 7)
    assert all(row[-1] == -1 for row in qt.qtilde)
    assert [list(r[:-1]) for r in qt.qtilde] == qr_generator(7).to_rows()
    assert compatibility(q, qt) == q.column(3)
    assert pub.theta == pytest.approx(math.pi / 8)
    assert pub.q_dist.kind == "uniform-over-s-hat" and pub.q_dist.n_p == 4


def test_all_programs_share_the_matroid():
    q0 = program_for(7, BitVector.parse("000"))
    for v in range(8):
        assert matroid_equivalent(q0, program_for(7, BitVector.from_int(v, 3)))


@pytest.mark.parametrize("n_a", [5, 8, 13, 31 + 2])
def test_build_instance_rejects_invalid_n_a(n_a):
    with pytest.raises(ValueError):
        build_instance(n_a)


def test_build_instance_rejects_wrong_s_hat_length():
    with pytest.raises(ValueError):
        build_instance(7, BitVector.parse("01"))


def test_build_instance_seeded():
    assert build_instance(23, seed=5)[2] == build_instance(23, seed=5)[2]


# orthogonality


def test_orthogonality_examples():
    assert orthogonality_outcome(BitVector.zeros(4), BitVector.parse("1011")) == 1
    assert orthogonality_outcome(BitVector.parse("1011"), BitVector.parse("1011")) == 0
    assert orthogonality_outcome(BitVector.parse("010"), BitVector.parse("101")) == 1
    with pytest.raises(ValueError):
        orthogonality_outcome(BitVector.parse("01"), BitVector.parse("101"))


# parameters and confidence


def test_hoeffding_halfwidths_frozen():
    # sqrt(ln(2/alpha) / (2T)) at T = 2000
    assert hoeffding_halfwidth(2000, 0.95) == pytest.approx(math.sqrt(math.log(40) / 4000), abs=1e-15)
    assert hoeffding_halfwidth(2000, 0.95) == pytest.approx(0.030369, abs=1e-6)
    assert hoeffding_halfwidth(2000, STRICT_CONFIDENCE) == pytest.approx(0.060226, abs=1e-6)


def test_default_window_excludes_classical_ceiling_and_zeros_cheat():
    lo, hi = HypothesisParams().window()
    assert (lo, hi) == pytest.approx((EXPECTED_BIAS - 0.03, EXPECTED_BIAS + 0.03))
    assert not lo <= CLASSICAL_CEILING <= hi
    assert not lo <= 1.0 <= hi
    assert not lo <= 0.5 <= hi


@pytest.mark.parametrize("tolerance", [0.01, 0.05, 0.0999])
def test_window_excludes_cheats_below_ten_percent(tolerance):
    lo, hi = HypothesisParams(tolerance=tolerance).window()
    assert lo > CLASSICAL_CEILING and hi < 1.0


@pytest.mark.parametrize(
    "kwargs", [{"n_a": 11}, {"reps": 0}, {"tolerance": 0.0}, {"tolerance": 0.2}, {"confidence": 1.0}, {"theta": 0.1}]
)
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        HypothesisParams(**kwargs)


def test_params_n_p():
    assert HypothesisParams(n_a=23).n_p == 12


# runs


def test_run_seeds_deterministic_and_distinct():
    seeds = run_seeds(0, 100)
    assert seeds == run_seeds(0, 100)
    assert len(set(seeds)) == 100
    assert run_seeds(1, 10) != seeds[:10]
    # prefix-stable: adding runs does not change earlier seeds
    assert run_seeds(0, 10) == seeds[:10]


def test_honest_short_run_records_everything():
    result = run_hypothesis_test(HypothesisParams(reps=20, seed=3))
    assert len(result.transcripts) == len(result.directions) == 20
    assert set(np.unique(result.outcomes)) <= {0.0, 1.0}
    assert result.empirical_bias == pytest.approx(result.outcomes.mean())
    for t, s, o in zip(result.transcripts, result.directions, result.outcomes):
        assert o == orthogonality_outcome(t.x_tilde, s)
        assert s[3] == 1


def test_honest_exact_per_run_probability():
    # every run, whatever its keys and hidden direction, is orthogonal with probability cos^2(pi/8)
    result = run_hypothesis_test(HypothesisParams(reps=4, seed=1), exact=True)
    assert np.allclose(result.outcomes, EXPECTED_BIAS, atol=1e-9)
    assert result.accept


def test_zeros_and_uniform_servers_short():
    zeros = run_hypothesis_test(HypothesisParams(reps=50), ZerosServer())
    assert zeros.empirical_bias == 1.0 and not zeros.accept
    uniform = run_hypothesis_test(HypothesisParams(reps=400), UniformServer())
    assert abs(uniform.empirical_bias - 0.5) < 0.1 and not uniform.accept


def test_hidden_direction_is_fresh_per_run():
    result = run_hypothesis_test(HypothesisParams(reps=64, seed=9), ZerosServer())
    assert len({str(s) for s in result.directions}) == 8


def test_master_seeds_give_independent_estimates():
    # 50 meta-trials with a fair-coin server: the spread of the bias estimates
    # must match the binomial variance p(1-p)/T within three standard errors
    reps, trials = 200, 50
    biases = np.array(
        [run_hypothesis_test(HypothesisParams(reps=reps, seed=1000 + k), UniformServer()).empirical_bias for k in range(trials)]
    )
    var_expected = 0.25 / reps
    var_sample = biases.var(ddof=1)
    se = var_expected * math.sqrt(2 / (trials - 1))
    assert abs(var_sample - var_expected) <= 3 * se
    # neighbouring master seeds do not produce correlated estimates
    r = np.corrcoef(biases[:-1], biases[1:])[0, 1]
    assert abs(r) <= 3 / math.sqrt(trials - 1)


def test_server_view_independent_of_hidden_direction():
    # reduced family: two residue-generator rows plus the hidden column, 8 qubits
    rows = qr_generator(7).to_rows()[:2]
    qt = ExtendedIqpGraph.from_rows([r + [-1] for r in rows])
    pub = PublicInfo(qt, QDistribution(), math.pi / 8)
    progs = [BitMatrix.from_rows([r + [b0 if h == 0 else b1] for h, r in enumerate(rows)]) for b0 in (0, 1) for b1 in (0, 1)]
    for q in progs[1:]:
        assert blindness_harness(pub, progs[0], q).blind(1e-12)


def test_public_info_independent_of_s_hat():
    assert public_info(7) == build_instance(7, BitVector.parse("111"))[1]
