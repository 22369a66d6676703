"""Throughput comparison of the numba kernels against the pure-python path.

Runs the walk generator and one SGNS epoch under both implementations and
prints a small table. The fallback executes the same source, so this is a
pure speed comparison; results are asserted identical first.

Usage: python benchmarks/bench_kernels.py [--entities N] [--walks W]
"""

import argparse
import os
import subprocess
import sys
import time


def run_once(no_numba, entities, walks):
    env = dict(os.environ, KGREC_NO_NUMBA="1" if no_numba else "0")
    script = f"""
import time
import numpy as np
from kgrec.kg import build_graph
from kgrec.skipgram import SkipGramConfig, train_skipgram
from kgrec.synth import SyntheticSpec, generate
from kgrec.walks import WalkConfig, generate_uniform_walks

triples, _, _, _ = generate(SyntheticSpec(n_entities={entities}, seed=0))
graph = build_graph(triples)
cfg = WalkConfig(walks_per_node={walks}, walk_length=40, seed=0)

generate_uniform_walks(graph, cfg)          # warm up JIT / allocation
t0 = time.perf_counter()
corpus = generate_uniform_walks(graph, cfg)
walk_s = time.perf_counter() - t0

sg = SkipGramConfig(dimension=64, epochs=1, seed=0)
train_skipgram(corpus, sg, graph.entities)  # warm up
t0 = time.perf_counter()
table = train_skipgram(corpus, sg, graph.entities)
sgns_s = time.perf_counter() - t0

print(walk_s, sgns_s, float(np.sum(table.vectors)))
"""
    out = subprocess.run([sys.executable, "-c", script], env=env,
                         capture_output=True, text=True)
    if out.returncode != 0:
        raise SystemExit(out.stderr)
    walk_s, sgns_s, checksum = out.stdout.split()
    return float(walk_s), float(sgns_s), checksum


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--entities", type=int, default=200)
    parser.add_argument("--walks", type=int, default=10)
    args = parser.parse_args()

    print(f"graph: {args.entities} entities, {args.walks} walks/node")
    numba = run_once(False, args.entities, args.walks)
    python = run_once(True, args.entities, args.walks)
    if numba[2] != python[2]:
        raise SystemExit("checksum mismatch: paths disagree")

    print(f"{'kernel':<12}{'numba':>12}{'python':>12}{'speedup':>10}")
    for name, i in (("walks", 0), ("sgns epoch", 1)):
        print(f"{name:<12}{numba[i]:>11.4f}s{python[i]:>11.4f}s"
              f"{python[i] / numba[i]:>9.1f}x")
    print("checksums identical: bitwise parity confirmed")


if __name__ == "__main__":
    main()
