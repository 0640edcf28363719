"""Compare the compiled and pure-Python cycle kernels on identical workloads.

    python benchmarks/bench_kernels.py --symbols 20000 --repeat 3
"""

import argparse
import random
import time

import numpy as np

from cama import kernels
from cama.encoder import compile_nfa
from cama.fuzz import random_graph_nfa
from cama.mapper import place
from cama.nfa import HomogeneousNfa, StartKind, Ste, SymbolClass
from cama.simulator import build_tables


def chain(n: int) -> HomogeneousNfa:
    states = [Ste(i, SymbolClass.of(b"ab" if i % 3 == 0 else b"a"),
                  StartKind.ALL_INPUT if i == 0 else StartKind.NONE, i == n - 1) for i in range(n)]
    return HomogeneousNfa(256, states, {i: {i + 1} for i in range(n - 1)})


def workloads(seed: int) -> dict[str, HomogeneousNfa]:
    rng = random.Random(seed)
    return {"chain-600": chain(600), "graph-400": random_graph_nfa(rng, 400)}


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--symbols", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = kernels.available_backends()
    data = np.random.default_rng(args.seed).choice(np.frombuffer(b"abcab", np.uint8), args.symbols)
    print(f"backends: {', '.join(backends)}; {args.symbols} symbols, best of {args.repeat}")
    print(f"{'workload':<12} {'version':<8} " + " ".join(f"{b + ' (s)':>14}" for b in backends)
          + f" {'speedup':>8}")
    for name, nfa in workloads(args.seed).items():
        tables = build_tables(place(compile_nfa(nfa)))
        for version, pipelined in (("E", False), ("T", True)):
            secs = {b: best_of(lambda: kernels.run_cycles(tables, data, pipelined, b), args.repeat)
                    for b in backends}
            ref = [np.asarray(x) for x in kernels.run_cycles(tables, data, pipelined, "python")]
            for b in backends:
                got = kernels.run_cycles(tables, data, pipelined, b)
                assert all(np.array_equal(r, np.asarray(g)) for r, g in zip(ref, got)), b
            speed = f"{secs['python'] / secs['cython']:>7.1f}x" if "cython" in secs else f"{'n/a':>8}"
            print(f"{name:<12} {version:<8} " + " ".join(f"{secs[b]:>14.4f}" for b in backends)
                  + f" {speed}")


if __name__ == "__main__":
    main()
