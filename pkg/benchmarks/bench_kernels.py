"""Time the numba kernels against the numpy fallback.

Each backend runs in its own interpreter because the choice is made at
import time from FOXLINK_DISABLE_NUMBA.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 1000000]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _best(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def worker(size, repeat):
    import numpy as np

    from foxlink import _accel, fixed_gain, mc_sim
    from foxlink.params import FixedGain, GenKParams, MalagaParams, RelaySystem

    rng = np.random.default_rng(1)
    z = rng.uniform(0.1, 30, size) + 1j * rng.uniform(-40, 40, size)
    s = rng.uniform(-2, 2, size // 10) + 1j * rng.uniform(-50, 50, size // 10)
    g1, g2 = rng.exponential(10, size), rng.exponential(10, size)
    shift = np.array([0.0, 1.5, 2.5])
    cs = np.array([1.0, 0.5, -1.0])
    ct = np.zeros(3)
    sign = np.array([1.0, 1.0, -1.0])
    sys_ = RelaySystem(
        MalagaParams(5.4, 4, xi=1.1, r=2, mu1=100.0),
        GenKParams(2.5, 1.09, 2, 100.0),
        GenKParams(2.5, 3.5, 1, 1.0),
        FixedGain(1.7),
    )
    cfg = mc_sim.SimConfig(samples=max(size, 10_000), seed=3)

    results = {
        "loggamma": _best(lambda: _accel.loggamma(z), repeat),
        "log_kernel": _best(lambda: _accel.log_kernel(shift, cs, ct, sign, s, 0.0), repeat),
        "fixed_gain_sinr": _best(lambda: _accel.fixed_gain_sinr(g1, g2, 1.7), repeat),
        "csi_sinr": _best(lambda: _accel.csi_sinr(g1, g2), repeat),
        "outage (analytic)": _best(lambda: fixed_gain.outage(sys_, 3.0), repeat),
        "outage (Monte-Carlo)": _best(lambda: mc_sim.simulate_outage(sys_, 3.0, cfg), max(1, repeat // 2)),
    }
    check = {
        "loggamma": complex(_accel.loggamma(z[:5]).sum()).real,
        "outage": fixed_gain.outage(sys_, 3.0).value,
    }
    print(json.dumps({"numba": _accel.HAVE_NUMBA, "times": results, "check": check}))


def run(flag, size, repeat):
    env = dict(os.environ, FOXLINK_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, __file__, "--worker", "--size", str(size), "--repeat", str(repeat)],
        env=env, capture_output=True, text=True, check=True,
    )  # fmt: skip
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker(args.size, args.repeat)
        return
    nb = run("0", args.size, args.repeat)
    npy = run("1", args.size, args.repeat)
    if not nb["numba"]:
        print("numba is not available; both runs used numpy")
    print(f"{'kernel':<24}{'numba [ms]':>12}{'numpy [ms]':>12}{'speed-up':>10}")
    for name, t_nb in nb["times"].items():
        t_np = npy["times"][name]
        print(f"{name:<24}{1e3 * t_nb:>12.2f}{1e3 * t_np:>12.2f}{t_np / t_nb:>10.2f}")
    for key in nb["check"]:
        a, b = nb["check"][key], npy["check"][key]
        print(f"agreement {key}: {abs(a - b) / max(abs(a), 1e-300):.1e} relative")


if __name__ == "__main__":
    main()
