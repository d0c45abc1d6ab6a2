"""Backend benchmark: compiled extension versus the pure-python kernels.

    python -m levy_mkv.benchmark [--t-end 0.5] [--cloud 256] [--pairs 200]

Reports wall time per workload and the speedup, and verifies that both
backends produce identical jump counts (shared bit stream).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ._kernels import backends
from ._rng import bit_generator


def _ensemble_workload(mod, t_end, m):
    bg = bit_generator(123)
    t0 = time.perf_counter()
    _, _, jumps, status, _ = mod.ensemble_run(
        bg, np.zeros(m), np.zeros(m), 0.0, t_end, np.array([t_end]),
        drift_tag=0, kernel_tag=1, eta=0.05, use_own_law=True,
        law_times=np.zeros(1), law_sin=np.zeros(1), law_cos=np.zeros(1),
        beta=0.5, c0=1.0, delta=1e-3, r_sup=1.0,
        rate_per_particle=122.49, gamma=2.0, dt_max=1e-3)
    return time.perf_counter() - t0, int(jumps[0]), status


def _pair_workload(mod, t_end, n_pairs):
    t0 = time.perf_counter()
    events = 0
    for r in range(n_pairs):
        _, diag, status, _ = mod.pair_run(
            bit_generator(124, r), 0.0, 0.0, 1.0, 0.0, 0.0, t_end,
            np.array([t_end]),
            drift_tag=0, kernel_tag=0, eta=0.0,
            law1_times=np.zeros(1), law1_sin=np.zeros(1), law1_cos=np.zeros(1),
            law2_times=np.zeros(1), law2_sin=np.zeros(1), law2_cos=np.zeros(1),
            beta=0.5, c0=1.0, delta=1e-3, r_sup=1.0, rate=122.49, gamma=2.0,
            dt_max=1e-3, alpha=0.5, eps=0.343, A=0.28125, B=0.375, C=0.25,
            d_gamma_val=4.883, kappa=1.0)
        events += int(diag[0])
    return time.perf_counter() - t0, events


def _systems_workload(mod, t_end, n):
    x0 = np.linspace(-0.5, 0.5, n)
    t0 = time.perf_counter()
    _, _, status, _ = mod.systems_run(
        bit_generator(125), x0.copy(), np.zeros(n), x0.copy(), np.zeros(n),
        0.0, t_end, np.array([t_end]),
        drift_tag=0, kernel_tag=1, eta=0.05,
        law_times=np.zeros(1), law_sin=np.zeros(1), law_cos=np.zeros(1),
        beta=0.5, c0=1.0, delta=1e-3, r_sup=1.0, rate_per_particle=122.49,
        gamma=2.0, dt_max=1e-3, alpha=0.5, eps=0.343, A=0.28125, B=0.375,
        C=0.25, d_gamma_val=4.883, kappa=1.0)
    return time.perf_counter() - t0, status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--t-end", type=float, default=0.5)
    parser.add_argument("--cloud", type=int, default=256)
    parser.add_argument("--pairs", type=int, default=200)
    args = parser.parse_args(argv)

    mods = backends()
    if "compiled" not in mods:
        print("compiled core not available; pure python only")
    results = {}
    for name, mod in mods.items():
        te, jumps, _ = _ensemble_workload(mod, args.t_end, args.cloud)
        tp, events = _pair_workload(mod, args.t_end, args.pairs)
        ts, _ = _systems_workload(mod, args.t_end, args.cloud)
        results[name] = (te, tp, ts)
        print(f"{name:9s} ensemble(M={args.cloud}): {te:7.3f}s  "
              f"pairs(x{args.pairs}): {tp:7.3f}s  "
              f"systems(N={args.cloud}): {ts:7.3f}s  "
              f"[{jumps} jumps, {events} pair events]")
    if len(results) == 2:
        pe = results["purepy"]
        ce = results["compiled"]
        print("speedup   ensemble: {:5.1f}x  pairs: {:5.1f}x  systems: {:5.1f}x".format(
            pe[0] / max(ce[0], 1e-9), pe[1] / max(ce[1], 1e-9),
            pe[2] / max(ce[2], 1e-9)))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
