"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py --qubits 18 --repeats 5
    python benchmarks/bench_kernels.py --end-to-end 20

Kernel timings import both backends directly.  The end-to-end timing runs
honest protocol repetitions in a subprocess per backend, because the backend
is chosen once at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from blindiqp._kernels import _pykernels

try:
    from blindiqp._kernels import _ckernels
except ImportError:
    _ckernels = None

H = (np.array([[1, 1], [1, -1]]) / np.sqrt(2)).tolist()

END_TO_END = """
import time
from blindiqp import _kernels
from blindiqp.hypothesis import HypothesisParams, run_hypothesis_test
start = time.perf_counter()
run_hypothesis_test(HypothesisParams(reps={reps}, seed=1))
print(_kernels.BACKEND, time.perf_counter() - start)
"""


def kernel_cases(n: int, rng: np.random.Generator):
    """``(name, setup, call)`` triples; ``setup`` returns fresh arguments."""
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    amps /= np.linalg.norm(amps)
    rows = rng.integers(0, 1 << min(n, 12), size=2 * n).astype(np.uint64)
    gens = rng.integers(0, 1 << 23, size=12).astype(np.uint64)
    mid = n // 2
    return [
        ("apply_1q", lambda: (amps.copy(),), lambda k, a: k.apply_1q(a, mid, H)),
        ("apply_diag", lambda: (amps.copy(),), lambda k, a: k.apply_diag(a, mid, 1.0, 1j)),
        ("apply_cz", lambda: (amps.copy(),), lambda k, a: k.apply_cz(a, 0, n - 1)),
        ("measure_probs", lambda: (amps,), lambda k, a: k.measure_probs(a, mid, H)),
        ("project", lambda: (amps.copy(),), lambda k, a: k.project(a, mid, H, 0, 1.0)),
        ("fwht", lambda: (amps.copy(),), lambda k, a: k.fwht(a)),
        ("phase_sums", lambda: (rows,), lambda k, r: k.phase_sums(r, min(n, 12))),
        ("weight_distribution", lambda: (gens,), lambda k, g: k.weight_distribution(g, 23)),
    ]


def best_time(kernel, setup, call, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        args = setup()
        times.append(timeit.timeit(lambda: call(kernel, *args), number=1))
    return min(times)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--qubits", type=int, default=18, help="statevector size for the kernel timings")
    parser.add_argument("--repeats", type=int, default=5, help="best-of repeats per kernel")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--end-to-end", type=int, default=0, metavar="REPS",
                        help="also time REPS honest protocol runs per backend")
    args = parser.parse_args(argv)

    if _ckernels is None:
        print("compiled kernels not built; only the numpy fallback is available")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<22}{'numpy (ms)':>12}{'cython (ms)':>13}{'speedup':>10}")
    for name, setup, call in kernel_cases(args.qubits, rng):
        t_py = best_time(_pykernels, setup, call, args.repeats)
        if _ckernels is None:
            print(f"{name:<22}{t_py * 1e3:>12.3f}{'-':>13}{'-':>10}")
            continue
        t_c = best_time(_ckernels, setup, call, args.repeats)
        print(f"{name:<22}{t_py * 1e3:>12.3f}{t_c * 1e3:>13.3f}{t_py / t_c:>9.1f}x")

    if args.end_to_end:
        print(f"\nhonest protocol, n_a = 7, {args.end_to_end} runs")
        code = END_TO_END.format(reps=args.end_to_end)
        for pure in ("1", "0"):
            env = dict(os.environ, BLINDIQP_PURE_PYTHON=pure)
            out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
            backend, seconds = out.stdout.split()
            print(f"{backend:<22}{float(seconds):>10.2f} s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
