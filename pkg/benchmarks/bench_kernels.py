"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--n 20000]

Both backends get the same inputs; the script checks that their results
agree before reporting timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np
from scipy.special import zeta

from narrative_miner import _kernels_py, kernels, synthgen, tailfit

try:
    from narrative_miner import _kernels as compiled
except ImportError:  # pragma: no cover
    compiled = None


def ks_inputs(n: int, seed: int):
    rng = synthgen.stream(seed, 90)
    x = tailfit.sample_power_law(2.5, 5, n, rng)
    values, counts = np.unique(x, return_counts=True)
    idx = np.arange(len(values) - 1, dtype=np.int64)
    xm = values[idx].astype(float)
    # per-candidate MLE exponents, as in a real fit
    logs = np.log(values.astype(float))
    tail_n = np.cumsum(counts[::-1])[::-1][idx]
    tail_log = np.cumsum((counts * logs)[::-1])[::-1][idx]
    alphas = tailfit._mle_alphas(tail_log / tail_n, xm)
    return values.astype(np.float64), counts.astype(np.int64), idx, alphas, zeta(alphas, xm)


def louvain_inputs(n: int, seed: int):
    net = synthgen.heterogeneous_network(n_nodes=n, mean_degree=10.0, seed=seed)
    adj = net.adjacency()
    strength = np.asarray(adj.sum(axis=1)).ravel()
    return adj, strength


def run_louvain(backend, adj, strength):
    comm = np.arange(adj.shape[0], dtype=np.int64)
    tot = strength.copy()
    m2 = float(strength.sum())
    moves = backend.louvain_local_moves(
        adj.indptr.astype(np.int64), adj.indices.astype(np.int64), adj.data.astype(np.float64),
        strength, comm, tot, m2, 1e-12 * m2,
    )
    return comm, moves


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--n", type=int, default=100000, help="power-law sample size")
    ap.add_argument("--nodes", type=int, default=2000, help="Louvain graph size")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    print(f"active backend: {kernels.BACKEND}")
    if compiled is None:
        print("compiled extension not built; only the Python backend is timed")
    backends = [("python", _kernels_py)] + ([("compiled", compiled)] if compiled is not None else [])

    ks_args = ks_inputs(args.n, args.seed)
    adj, strength = louvain_inputs(args.nodes, args.seed)
    results, times = {}, {}
    print(f"{'kernel':<22}{'backend':<10}{'seconds':>10}")
    for name, mod in backends:
        t_ks, ks = timed(lambda: mod.ks_scan(*ks_args), args.repeat)
        t_lv, lv = timed(lambda: run_louvain(mod, adj, strength), args.repeat)
        results[name] = (ks, lv)
        times[name] = (t_ks, t_lv)
        print(f"{'ks_scan':<22}{name:<10}{t_ks:>10.6f}")
        print(f"{'louvain_local_moves':<22}{name:<10}{t_lv:>10.6f}")
    if len(results) == 2:
        (b1, k1), (c1, m1) = results["python"]
        (b2, k2), (c2, m2) = results["compiled"]
        # abandoned candidates keep backend-specific partial distances; the winner must match
        assert b1 == b2 and abs(k1[b1] - k2[b2]) < 1e-10, "ks_scan backends disagree"
        assert np.array_equal(c1, c2) and m1 == m2, "louvain backends disagree"
        print("backends agree")
        for i, kernel in enumerate(("ks_scan", "louvain_local_moves")):
            print(f"{kernel} speedup: {times['python'][i] / max(times['compiled'][i], 1e-9):.0f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
