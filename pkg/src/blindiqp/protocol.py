"""Blind delegated IQP computation between a client and an untrusted server.

The client prepares single qubits with secret keys, the server entangles
them along the public extended graph, measures the bridge/break qubits,
receives rotated measurement instructions and reports the final outcomes.
The quantum register lives in a ``QuantumEnvironment``; servers only act on
it through operation requests and never read amplitudes.

Seeds: a run seeded with ``seed`` uses ``SeedSequence(seed).spawn(2)``;
child 0 drives the client's keys, child 1 the environment (measurement
outcomes and any server coins).
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gf2 import BitMatrix, BitVector
from .mbqc import ExtendedIqpGraph, IncompatibleProgram, compatibility, output_string
from .statevec import (
    PRUNE_THRESHOLD,
    ZERO_BRANCH,
    Basis,
    BridgeY,
    PlusZS,
    prepare_product,
    s_power,
)
from .xprogram import OutcomeDistribution

EXACT_KEY_CHUNK = 4096
DENSE_FINAL_QUBITS = 8
BLINDNESS_QUBIT_CAP = 8


@dataclass(frozen=True)
class QDistribution:
    """Public description of the distribution the client's program is drawn from.

    ``kind`` is ``"uniform-compatible"`` (every program buildable from the
    extended graph) or ``"uniform-over-s-hat"`` (the quadratic-residue
    hypothesis-test family on ``n_p`` output qubits).
    """

    kind: str = "uniform-compatible"
    n_p: int | None = None

    def support(self, qt: ExtendedIqpGraph) -> list[BitMatrix]:
        if self.kind == "uniform-compatible":
            return qt.compatible_programs()
        if self.kind == "uniform-over-s-hat":
            from .hypothesis import program_for

            n_a = qt.n_a
            return [program_for(n_a, BitVector.from_int(v, self.n_p - 1)) for v in range(1 << (self.n_p - 1))]
        raise ValueError(f"unknown program distribution {self.kind!r}")

    def contains(self, q: BitMatrix, qt: ExtendedIqpGraph) -> bool:
        if self.kind == "uniform-compatible":
            try:
                compatibility(q, qt)
            except IncompatibleProgram:
                return False
            return True
        return q in self.support(qt)


@dataclass(frozen=True)
class PublicInfo:
    qtilde: ExtendedIqpGraph
    q_dist: QDistribution
    theta: float


@dataclass(frozen=True)
class ClientKeys:
    r_p: BitVector
    d_p: BitVector
    r_a: BitVector
    d_a: BitVector
    r_b: BitVector
    d_b: BitVector

    @classmethod
    def random(cls, q: BitMatrix, qt: ExtendedIqpGraph, rng: np.random.Generator) -> "ClientKeys":
        d_b = compatibility(q, qt)
        bits = rng.integers(0, 2, size=2 * qt.n_p + 2 * qt.n_a + qt.n_b)
        n_p, n_a = qt.n_p, qt.n_a
        cut = np.cumsum([n_p, n_p, n_a, n_a])
        r_p, d_p, r_a, d_a, r_b = np.split(bits, cut)
        return cls(*(BitVector.of(v) for v in (r_p, d_p, r_a, d_a, r_b)), d_b)

    @classmethod
    def zero(cls, q: BitMatrix, qt: ExtendedIqpGraph) -> "ClientKeys":
        z = BitVector.zeros
        return cls(z(qt.n_p), z(qt.n_p), z(qt.n_a), z(qt.n_a), z(qt.n_b), compatibility(q, qt))


@dataclass(frozen=True)
class ProtocolTranscript:
    seed: int | None
    keys: ClientKeys
    s_b: BitVector
    a_msg: tuple[int, ...]
    pi_msg: tuple[int, ...]
    s_a: BitVector
    s_p: BitVector
    x_tilde: BitVector

    def to_line(self) -> str:
        def digits(v):
            return "".join(map(str, v)) or "-"

        return (
            f"seed={self.seed if self.seed is not None else '-'} s_b={self.s_b} "
            f"A={digits(self.a_msg)} Pi={digits(self.pi_msg)} "
            f"s_a={self.s_a} s_p={self.s_p} x_tilde={self.x_tilde}"
        )

    @staticmethod
    def parse_line(line: str) -> dict:
        fields = dict(tok.split("=", 1) for tok in line.split())
        expected = ["seed", "s_b", "A", "Pi", "s_a", "s_p", "x_tilde"]
        if list(fields) != expected:
            raise ValueError(f"transcript fields {list(fields)} != {expected}")
        out = {
            "seed": None if fields["seed"] == "-" else int(fields["seed"]),
            "A": tuple(int(c) for c in fields["A"] if c != "-"),
            "Pi": tuple(int(c) for c in fields["Pi"] if c != "-"),
        }
        for name in ("s_b", "s_a", "s_p", "x_tilde"):
            out[name] = BitVector.parse(fields[name])
        return out


def preparation_specs(keys: ClientKeys) -> list[PlusZS | BridgeY]:
    specs: list[PlusZS | BridgeY] = [PlusZS(r, d) for r, d in zip(keys.r_p, keys.d_p)]
    specs += [PlusZS(r, d) for r, d in zip(keys.r_a, keys.d_a)]
    specs += [BridgeY(r, d) for r, d in zip(keys.r_b, keys.d_b)]
    return specs


def client_prepare(q: BitMatrix, pub: PublicInfo, rng) -> tuple[ClientKeys, list]:
    rng = np.random.default_rng(rng)
    keys = ClientKeys.random(q, pub.qtilde, rng)
    return keys, preparation_specs(keys)


def _incidence(qt: ExtendedIqpGraph) -> tuple[np.ndarray, np.ndarray]:
    """0/1 matrices mapping bridge ``k`` to its primary and ancilla neighbours."""
    to_p = np.zeros((qt.n_b, qt.n_p), dtype=np.int64)
    to_a = np.zeros((qt.n_b, qt.n_a), dtype=np.int64)
    for k, (h, j) in enumerate(qt.bridges):
        to_p[k, j] = 1
        to_a[k, h] = 1
    return to_p, to_a


def _correction_terms(qt: ExtendedIqpGraph, r_p, d_p, r_a, d_a, r_b, d_b, s_b):
    """Integer correction strings ``(Pi^z, Pi^s, A^z, A^s)`` for arrays of keys.

    Every argument is an integer array whose last axis indexes qubits; leading
    axes broadcast, so a whole batch of key tuples is handled at once.
    """
    r_p, d_p, r_a, d_a, r_b, d_b, s_b = (np.asarray(v, dtype=np.int16) for v in (r_p, d_p, r_a, d_a, r_b, d_b, s_b))
    to_p, to_a = (m.astype(np.int16) for m in _incidence(qt))
    z_term = r_b * (1 - d_b)
    # The bridge leaves S^((-1)^(s+r)) on both neighbours; the rotation must
    # cancel it, so the S-term enters with the opposite sign.
    s_term = -(1 - 2 * ((s_b + r_b) % 2)) * d_b
    pi_z = z_term @ to_p - r_p
    pi_s = s_term @ to_p - d_p
    a_z = z_term @ to_a - r_a
    a_s = s_term @ to_a - d_a
    return pi_z, pi_s, a_z, a_s


def _correction_arrays(qt: ExtendedIqpGraph, *keys):
    """Measurement rotations ``(A, Pi)`` in ``{0,1,2,3}`` for arrays of keys."""
    pi_z, pi_s, a_z, a_s = _correction_terms(qt, *keys)
    return (a_s + 2 * a_z) % 4, (pi_s + 2 * pi_z) % 4


def correction_terms(keys: ClientKeys, s_b: BitVector, qt: ExtendedIqpGraph) -> dict[str, np.ndarray]:
    """The four integer correction strings before the mod-4 combination."""
    terms = _correction_terms(
        qt, keys.r_p.bits, keys.d_p.bits, keys.r_a.bits, keys.d_a.bits, keys.r_b.bits, keys.d_b.bits, s_b.bits
    )
    return dict(zip(("pi_z", "pi_s", "a_z", "a_s"), terms))


def client_corrections(
    keys: ClientKeys, s_b: BitVector, q: BitMatrix, qt: ExtendedIqpGraph
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    if len(s_b) != qt.n_b:
        raise ValueError(f"expected {qt.n_b} bridge outcomes, got {len(s_b)}")
    if len(keys.r_p) != qt.n_p or len(keys.r_a) != qt.n_a or len(keys.r_b) != qt.n_b:
        raise ValueError("key lengths do not match the extended graph")
    a_msg, pi_msg = _correction_arrays(
        qt, keys.r_p.bits, keys.d_p.bits, keys.r_a.bits, keys.d_a.bits, keys.r_b.bits, keys.d_b.bits, s_b.bits
    )
    return tuple(int(v) for v in a_msg), tuple(int(v) for v in pi_msg)


def client_output(s_p: BitVector, s_a: BitVector, q: BitMatrix) -> BitVector:
    return output_string(s_p, s_a, q)


class QuantumEnvironment:
    """Holds the register the client sent; executes server requests.

    In sampling mode outcomes come from ``rng``.  In script mode outcomes are
    replayed from ``script`` and, once it runs out, the first possible outcome
    is taken; ``choices`` records ``(outcome, prob, alternative_prob)`` for
    every random event so a driver can enumerate all branches.
    """

    def __init__(self, specs: Sequence, rng: np.random.Generator | None = None, script: Sequence[int] | None = None):
        self._specs = list(specs)
        self._state: StateVector | None = None
        self._rng = rng
        self._script = None if script is None else list(script)
        self.choices: list[tuple[int, float, float]] = []
        self.n_qubits = len(self._specs)

    @property
    def _register(self) -> StateVector:
        if self._state is None:
            self._state = prepare_product(self._specs)
        return self._state

    def _check(self, *qubits: int) -> None:
        for q in qubits:
            if not 0 <= q < self.n_qubits:
                raise IndexError(f"no qubit {q} in a register of {self.n_qubits}")

    def apply_cz(self, i: int, j: int) -> None:
        self._check(i, j)
        self._register.apply_cz(i, j)

    def apply_gate(self, qubit: int, u) -> None:
        self._check(qubit)
        self._register.apply_gate(qubit, u)

    def rotate(self, qubit: int, k: int) -> None:
        """Apply ``S^k``."""
        if k % 4:
            self.apply_gate(qubit, s_power(k))

    def _choose(self, p1: float) -> int:
        step = len(self.choices)
        if self._script is None:
            outcome = int(self._rng.random() < p1)
        elif step < len(self._script):
            outcome = self._script[step]
        else:
            outcome = 0 if 1.0 - p1 > ZERO_BRANCH else 1
        prob = p1 if outcome else 1.0 - p1
        self.choices.append((outcome, prob, 1.0 - prob))
        return outcome

    def measure(self, qubit: int, basis: Basis) -> int:
        self._check(qubit)
        reg = self._register
        outcome = self._choose(reg.outcome_probabilities(qubit, basis)[1])
        reg.measure(qubit, basis, outcome=outcome)
        return outcome

    def coin(self) -> int:
        """A fair random bit for server strategies."""
        return self._choose(0.5)

    @property
    def probability(self) -> float:
        return math.prod(p for _, p, _ in self.choices)


class ServerStrategy:
    """Base server: subclasses override the two measurement rounds."""

    name = "abstract"

    def receive_register(self, env: QuantumEnvironment, pub: PublicInfo) -> None:
        self.env = env
        self.pub = pub

    def measure_bridges(self) -> BitVector:
        raise NotImplementedError

    def measure_rest(self, a_msg: Sequence[int], pi_msg: Sequence[int]) -> tuple[BitVector, BitVector]:
        raise NotImplementedError


class HonestServer(ServerStrategy):
    name = "honest"

    def receive_register(self, env, pub):
        super().receive_register(env, pub)
        for i, j in pub.qtilde.edges():
            env.apply_cz(i, j)

    def measure_bridges(self):
        qt = self.pub.qtilde
        return BitVector(tuple(self.env.measure(qt.bridge(k), Basis.y()) for k in range(qt.n_b)))

    def measure_rest(self, a_msg, pi_msg):
        qt, env = self.pub.qtilde, self.env
        s_a = []
        for h, k in enumerate(a_msg):
            env.rotate(qt.ancilla(h), k)
            s_a.append(env.measure(qt.ancilla(h), Basis.angle(self.pub.theta)))
        s_p = []
        for j, k in enumerate(pi_msg):
            env.rotate(qt.primary(j), k)
            s_p.append(env.measure(qt.primary(j), Basis.x()))
        return BitVector(tuple(s_a)), BitVector(tuple(s_p))


class ZerosServer(ServerStrategy):
    """Ignores the register and reports all-zero outcomes."""

    name = "zeros"

    def measure_bridges(self):
        return BitVector.zeros(self.pub.qtilde.n_b)

    def measure_rest(self, a_msg, pi_msg):
        return BitVector.zeros(len(a_msg)), BitVector.zeros(len(pi_msg))


class UniformServer(ServerStrategy):
    """Reports independent fair coin flips."""

    name = "uniform"

    def measure_bridges(self):
        return BitVector(tuple(self.env.coin() for _ in range(self.pub.qtilde.n_b)))

    def measure_rest(self, a_msg, pi_msg):
        s_a = BitVector(tuple(self.env.coin() for _ in a_msg))
        s_p = BitVector(tuple(self.env.coin() for _ in pi_msg))
        return s_a, s_p


class FixedServer(ServerStrategy):
    """Reports ``s_p = bits`` and zeros elsewhere, forcing ``x_tilde = bits``."""

    name = "fixed"

    def __init__(self, bits: BitVector):
        self.bits = bits

    def measure_bridges(self):
        return BitVector.zeros(self.pub.qtilde.n_b)

    def measure_rest(self, a_msg, pi_msg):
        if len(self.bits) != len(pi_msg):
            raise ValueError(f"fixed string has length {len(self.bits)}, need {len(pi_msg)}")
        return BitVector.zeros(len(a_msg)), self.bits


def make_server(name: str) -> ServerStrategy:
    if name == "honest":
        return HonestServer()
    if name == "zeros":
        return ZerosServer()
    if name == "uniform":
        return UniformServer()
    if name.startswith("fixed:"):
        return FixedServer(BitVector.parse(name.split(":", 1)[1]))
    raise ValueError(f"unknown server strategy {name!r}")


def _execute(q, pub, server, keys, env, seed=None) -> ProtocolTranscript:
    qt = pub.qtilde
    server.receive_register(env, pub)
    s_b = server.measure_bridges()
    if len(s_b) != qt.n_b:
        raise ValueError(f"server returned {len(s_b)} bridge outcomes, expected {qt.n_b}")
    a_msg, pi_msg = client_corrections(keys, s_b, q, qt)
    s_a, s_p = server.measure_rest(a_msg, pi_msg)
    x_tilde = client_output(s_p, s_a, q)
    return ProtocolTranscript(seed, keys, s_b, a_msg, pi_msg, s_a, s_p, x_tilde)


def run_protocol(
    q: BitMatrix,
    pub: PublicInfo,
    server: ServerStrategy | None = None,
    *,
    seed=None,
    exact: bool = False,
    keys: ClientKeys | None = None,
    average_keys: bool = False,
):
    """Run one protocol instance.

    Sampling mode returns a ``ProtocolTranscript``.  With ``exact=True`` the
    output distribution of ``x_tilde`` is returned instead, summed over every
    measurement branch, for the given ``keys`` or, with ``average_keys``,
    averaged over every key assignment.
    """
    server = HonestServer() if server is None else server
    qt = pub.qtilde
    compatibility(q, qt)
    if not exact:
        client_ss, env_ss = np.random.SeedSequence(seed).spawn(2)
        if keys is None:
            keys = ClientKeys.random(q, qt, np.random.default_rng(client_ss))
        env = QuantumEnvironment(preparation_specs(keys), rng=np.random.default_rng(env_ss))
        return _execute(q, pub, server, keys, env, seed)
    if average_keys:
        key_list = None
    elif keys is not None:
        key_list = [keys]
    else:
        key_list = [ClientKeys.random(q, qt, np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[0]))]
    if type(server) is HonestServer:
        return honest_exact_distribution(q, pub, key_list)
    if key_list is None:
        key_list = list(all_keys(q, qt))
    total = np.zeros(1 << qt.n_p)
    for k in key_list:
        total += enumerate_runs(q, pub, server, k).probs
    return OutcomeDistribution(qt.n_p, total / len(key_list))


def all_keys(q: BitMatrix, qt: ExtendedIqpGraph):
    d_b = compatibility(q, qt)
    n = 2 * qt.n_p + 2 * qt.n_a + qt.n_b
    for bits in itertools.product((0, 1), repeat=n):
        cut = np.cumsum([qt.n_p, qt.n_p, qt.n_a, qt.n_a])
        parts = np.split(np.array(bits, dtype=int), cut)
        yield ClientKeys(*(BitVector.of(v) for v in parts), d_b)


def enumerate_runs(q: BitMatrix, pub: PublicInfo, server: ServerStrategy, keys: ClientKeys) -> OutcomeDistribution:
    """Exact output distribution for fixed keys by replaying every branch.

    Works for any strategy whose randomness comes from the environment; the
    strategy object is re-attached to a fresh register on every replay.
    """
    qt = pub.qtilde
    specs = preparation_specs(keys)
    out = np.zeros(1 << qt.n_p)
    stack: list[tuple[int, ...]] = [()]
    while stack:
        prefix = stack.pop()
        env = QuantumEnvironment(specs, script=prefix)
        transcript = _execute(q, pub, server, keys, env)
        for i in range(len(prefix), len(env.choices)):
            outcome, _, alt = env.choices[i]
            if alt > ZERO_BRANCH:
                stack.append(tuple(c for c, _, _ in env.choices[:i]) + (1 - outcome,))
        p = env.probability
        if p >= PRUNE_THRESHOLD:
            out[transcript.x_tilde.to_int()] += p
    return OutcomeDistribution(qt.n_p, out)


@functools.lru_cache(maxsize=32)
def _bits_table(n_bits: int) -> np.ndarray:
    """Row ``i`` holds the bits of ``i``, least significant first (read-only, cached)."""
    idx = np.arange(1 << n_bits)
    table = ((idx[:, None] >> np.arange(n_bits)) & 1).astype(np.int64)
    table.flags.writeable = False
    return table


def _output_index_map(q: BitMatrix) -> np.ndarray:
    """Map from joint (primary, ancilla) outcome index to the output-string index."""
    n_p, n_a = q.cols, q.rows
    bits = _bits_table(n_p + n_a)
    s_p, s_a = bits[:, :n_p], bits[:, n_p:]
    x = (s_p + s_a @ q.to_array().astype(np.int64)) % 2
    return x @ (1 << np.arange(n_p))


_PHASES = np.array([1, 1j, -1, -1j])


def _key_arrays(key_list: Sequence[ClientKeys]) -> tuple[np.ndarray, ...]:
    fields = ("r_p", "d_p", "r_a", "d_a", "r_b")
    return tuple(
        np.array([getattr(k, f).bits for k in key_list], dtype=np.int64).reshape(len(key_list), -1) for f in fields
    )


def all_key_arrays(qt: ExtendedIqpGraph) -> tuple[np.ndarray, ...]:
    """Every assignment of ``(r_p, d_p, r_a, d_a, r_b)`` as broadcastable arrays.

    Primary/ancilla keys run along axis 0 and bridge keys along axis 1, so
    any elementwise expression of all five covers every key tuple once.
    """
    own = _bits_table(2 * qt.n_p + 2 * qt.n_a).astype(np.int8)[:, None, :]
    r_p, d_p, r_a, d_a = np.split(own, np.cumsum([qt.n_p, qt.n_p, qt.n_a]), axis=2)
    r_b = _bits_table(qt.n_b).astype(np.int8)[None, :, :]
    return r_p, d_p, r_a, d_a, r_b


def _group_counts(codes: np.ndarray, space: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct values of ``codes`` (all in ``[0, space)``) and their multiplicities."""
    codes = codes.ravel()
    if space <= 1 << 20:
        counts = np.bincount(codes, minlength=space)
        present = np.flatnonzero(counts)
        return present, counts[present]
    return np.unique(codes, return_counts=True)


def _product_rows(tables: Sequence[np.ndarray]) -> np.ndarray:
    """Rows ``kron(t_{n-1}[i_{n-1}], ..., t_0[i_0])`` for every index tuple, ``i_0`` fastest."""
    out = np.ones((1, 1), dtype=complex)
    for t in tables:
        out = np.einsum("ka,jb->jkba", out, t).reshape(out.shape[0] * t.shape[0], -1)
    return out


def _apply_per_qubit(rows: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    """Apply ``mats[q]`` to qubit ``q`` of every row (rows are little-endian states)."""
    m = len(mats)
    t = rows.reshape((rows.shape[0],) + (2,) * m)
    for q, u in enumerate(mats):
        # axis 1 holds the most significant qubit
        axis = m - q
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [axis])), 0, axis)
    return t.reshape(rows.shape[0], -1)


def honest_exact_distribution(
    q: BitMatrix, pub: PublicInfo, key_list: Sequence[ClientKeys] | None = None
) -> OutcomeDistribution:
    """Exact honest-server output distribution averaged over key tuples.

    ``key_list=None`` averages over every key tuple.  After the bridge
    measurements, a key tuple affects the rest of the register only through
    its bridge key ``r_b`` and the power ``e_q = d_q + 2 r_q + rotation_q
    (mod 4)`` of ``S`` on each primary/ancilla qubit, so tuples are grouped by
    ``(r_b, e)`` and each distinct pair is simulated once.
    """
    qt = pub.qtilde
    n_p, n_a, n_b = qt.n_p, qt.n_a, qt.n_b
    m = n_p + n_a
    d_b = np.array(compatibility(q, qt).bits, dtype=np.int64)
    r_p, d_p, r_a, d_a, r_b = all_key_arrays(qt) if key_list is None else _key_arrays(key_list)
    n_keys = math.prod(np.broadcast_shapes(r_p.shape[:-1], r_b.shape[:-1]))
    base_pa = np.concatenate([d_p + 2 * r_p, d_a + 2 * r_a], axis=-1).astype(np.int8)
    base4 = 4 ** np.arange(m)
    # only the bridge keys that actually occur need their own bridge register
    rb_needed, rb_index = np.unique(r_b.astype(np.int64) @ (1 << np.arange(n_b)), return_inverse=True)
    rb_index = rb_index.reshape(r_b.shape[:-1])

    signs = np.ones(1 << (m + n_b))
    full_bits = _bits_table(m + n_b)
    for i, j in qt.edges():
        signs[(full_bits[:, i] & full_bits[:, j]) == 1] *= -1
    signs = signs.reshape(1 << n_b, 1 << m)
    # bridge_rows[r]: bridge register for key r; bra_rows[s]: Y bras for outcomes s
    bridge_rows = _product_rows([np.array([BridgeY(r, int(d)).vector() for r in (0, 1)]) for d in d_b])[rb_needed]
    bra_rows = _product_rows([Basis.y().bra_matrix()] * n_b)
    # w[s, r] = <bra_s| CZ-signs (bridge_r (x) |+..+>), up to the 2^(-m/2) of |+..+>
    w = (bra_rows[:, None, :] * bridge_rows[None, :, :]) @ signs
    p_branch = (w.real**2 + w.imag**2).sum(axis=2) / (1 << m)
    # final measurements: X on primaries, theta on ancillas
    final_bras = [Basis.x().bra_matrix()] * n_p + [Basis.angle(pub.theta).bra_matrix()] * n_a
    final = _product_rows(final_bras) if m <= DENSE_FINAL_QUBITS else None
    pa_bits_t = _bits_table(m).T
    joint = np.zeros(1 << m)

    s_table = _bits_table(n_b).astype(np.int8)
    # bridge outcomes are handled in chunks along a new leading axis
    chunk = max(1, EXACT_KEY_CHUNK * 64 // max(1, n_keys * m))
    for s_b in range(1 << n_b):
        if s_b % chunk == 0:
            rows = s_table[s_b : s_b + chunk]
            s_chunk = rows.reshape((len(rows),) + (1,) * (r_b.ndim - 1) + (n_b,))
            a_msg, pi_msg = _correction_arrays(qt, r_p, d_p, r_a, d_a, r_b, d_b, s_chunk)
            e = (base_pa + np.concatenate([pi_msg, a_msg], axis=-1)) % 4
            code_chunk = rb_index * (4**m) + e.astype(np.int64) @ base4
        codes, counts = _group_counts(code_chunk[s_b % chunk], len(rb_needed) * 4**m)
        rb_u, e_code = np.divmod(codes, 4**m)
        probs_r = p_branch[s_b, rb_u]
        live = probs_r > PRUNE_THRESHOLD
        if not np.any(live):
            continue
        rb_u, e_code, counts, probs_r = rb_u[live], e_code[live], counts[live], probs_r[live]
        e_u = (e_code[:, None] // base4) % 4
        branch = _PHASES[(e_u @ pa_bits_t) % 4] * w[s_b, rb_u]
        branch /= np.sqrt(probs_r * (1 << m))[:, None]
        amps = branch @ final.T if final is not None else _apply_per_qubit(branch, final_bras)
        joint += (counts * probs_r) @ (amps.real**2 + amps.imag**2)
    total = np.zeros(1 << n_p)
    np.add.at(total, _output_index_map(q), joint)
    return OutcomeDistribution(n_p, total / n_keys)


@dataclass
class BlindnessReport:
    rho_trace_distance: float
    max_marginal_distance: float
    message_distance: float
    message_nonuniformity: float
    details: dict = field(default_factory=dict)

    def blind(self, tol: float = 1e-12) -> bool:
        return max(
            self.rho_trace_distance, self.max_marginal_distance, self.message_distance, self.message_nonuniformity
        ) <= tol

    def format(self) -> str:
        return (
            f"trace distance of averaged registers: {self.rho_trace_distance:.3e}\n"
            f"max single-qubit distance from I/2:   {self.max_marginal_distance:.3e}\n"
            f"max (A, Pi) distance between programs: {self.message_distance:.3e}\n"
            f"max (A, Pi) distance from uniform:     {self.message_nonuniformity:.3e}\n"
        )


def _qubit_key_tables(qt: ExtendedIqpGraph, d_b: BitVector) -> list[np.ndarray]:
    """Per qubit, the possible prepared states (one row per key value)."""
    pa = np.array([PlusZS(r, d).vector() for r in (0, 1) for d in (0, 1)])
    tables = [pa] * (qt.n_p + qt.n_a)
    tables += [np.array([BridgeY(r, d).vector() for r in (0, 1)]) for d in d_b]
    return tables


def averaged_register(q: BitMatrix, qt: ExtendedIqpGraph) -> np.ndarray:
    """Density matrix of the sent register averaged over every key tuple."""
    tables = _qubit_key_tables(qt, compatibility(q, qt))
    n = len(tables)
    # low qubits are enumerated as one block of rows, high qubits one tuple at a time
    split = 0
    while split < n and math.prod(len(t) for t in tables[: split + 1]) <= EXACT_KEY_CHUNK:
        split += 1
    block = np.ones((1, 1), dtype=complex)
    for t in tables[:split]:
        # later qubits are more significant
        block = np.einsum("ka,jb->jkba", block, t).reshape(block.shape[0] * t.shape[0], -1)
    rho = np.zeros((1 << n, 1 << n), dtype=complex)
    count = 0
    for combo in itertools.product(*[range(len(t)) for t in tables[split:]]):
        high = np.ones(1, dtype=complex)
        for t, c in zip(tables[split:], combo):
            high = np.kron(t[c], high)
        psi = np.einsum("t,ka->kta", high, block).reshape(block.shape[0], -1)
        rho += psi.T @ psi.conj()
        count += psi.shape[0]
    return rho / count


def _trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.linalg.eigvalsh(a - b)).sum())


def _single_qubit_marginal(rho: np.ndarray, qubit: int, n: int) -> np.ndarray:
    t = rho.reshape([2] * (2 * n))
    axis = n - 1 - qubit
    others = [a for a in range(n) if a != axis]
    t = np.moveaxis(t, [axis, n + axis], [0, 1])
    for _ in others:
        t = np.trace(t, axis1=2, axis2=2 + (t.ndim - 2) // 2)
    return t


def message_distribution(q: BitMatrix, qt: ExtendedIqpGraph, s_b: BitVector) -> np.ndarray:
    """Distribution of ``(A, Pi)`` over every key tuple, for a fixed bridge outcome.

    Index is the base-4 number with ``A`` digits first (least significant).
    """
    d_b = np.array(compatibility(q, qt).bits, dtype=np.int64)
    n_p, n_a, n_b = qt.n_p, qt.n_a, qt.n_b
    n_free = 2 * n_p + 2 * n_a + n_b
    keys = _bits_table(n_free)
    cut = np.cumsum([n_p, n_p, n_a, n_a])
    r_p, d_p, r_a, d_a, r_b = np.split(keys, cut, axis=1)
    a_msg, pi_msg = _correction_arrays(
        qt, r_p, d_p, r_a, d_a, r_b, np.broadcast_to(d_b, (len(keys), n_b)),
        np.broadcast_to(np.array(s_b.bits, dtype=np.int64), (len(keys), n_b)),
    )
    digits = np.concatenate([a_msg, pi_msg], axis=1)
    index = digits @ (4 ** np.arange(n_a + n_p))
    hist = np.bincount(index, minlength=4 ** (n_a + n_p)).astype(float)
    return hist / hist.sum()


def blindness_harness(pub: PublicInfo, q1: BitMatrix, q2: BitMatrix) -> BlindnessReport:
    """Compare what the server sees for two secret programs, averaged over keys."""
    qt = pub.qtilde
    for q in (q1, q2):
        compatibility(q, qt)
    if qt.n_qubits > BLINDNESS_QUBIT_CAP:
        raise ValueError(f"blindness enumeration limited to {BLINDNESS_QUBIT_CAP} qubits")
    n = qt.n_qubits
    rho1, rho2 = averaged_register(q1, qt), averaged_register(q2, qt)
    half = np.eye(2) / 2
    marg = max(
        _trace_distance(_single_qubit_marginal(r, i, n), half) for r in (rho1, rho2) for i in range(n)
    )
    uniform = 1.0 / 4 ** (qt.n_a + qt.n_p)
    msg_dist, msg_unif = 0.0, 0.0
    for bits in range(1 << qt.n_b):
        s_b = BitVector.from_int(bits, qt.n_b)
        m1, m2 = message_distribution(q1, qt, s_b), message_distribution(q2, qt, s_b)
        msg_dist = max(msg_dist, 0.5 * float(np.abs(m1 - m2).sum()))
        msg_unif = max(msg_unif, *(0.5 * float(np.abs(m - uniform).sum()) for m in (m1, m2)))
    return BlindnessReport(_trace_distance(rho1, rho2), marg, msg_dist, msg_unif, {"n_qubits": n})
