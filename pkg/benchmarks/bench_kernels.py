"""Time the compiled and numpy kernels on a study-sized batch.

    python3 benchmarks/bench_kernels.py [--dyads 101] [--q 50] [--h 50] [--repeats 20]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from asbim import kernels
from asbim.data import SyntheticConfig, generate_synthetic, preprocess
from asbim.model.params import FeatureScaler, Variant, init_params


def best_of(fn, repeats: int) -> float:
    fn()  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dyads", type=int, default=101)
    ap.add_argument("--q", type=int, default=50)
    ap.add_argument("--h", type=int, default=50)
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--variant", default="plus_d")
    args = ap.parse_args(argv)

    variant = Variant.parse(args.variant)
    dataset = preprocess(generate_synthetic(SyntheticConfig(n_dyads=args.dyads)))
    params = init_params(variant, args.q, args.h, np.random.default_rng(0))
    params.scaler = FeatureScaler.fit(dataset, variant.numeric_features)
    batch = kernels.make_batch(dataset, params)

    results = {}
    for name in kernels.available_backends():
        fwd = best_of(lambda: kernels.batch_loss(batch, params, backend=name), args.repeats)
        both = best_of(lambda: kernels.loss_and_grad(batch, params, 1e-4, backend=name), args.repeats)
        results[name] = (fwd, both)
    print(f"N={args.dyads} L={batch.dm.shape[1]} q={args.q} h={args.h} variant={variant.value}")
    print(f"{'backend':<8s} {'loss ms':>9s} {'loss+grad ms':>13s} {'500 epochs s':>13s}")
    for name, (fwd, both) in results.items():
        print(f"{name:<8s} {fwd * 1e3:9.3f} {both * 1e3:13.3f} {both * 500:13.2f}")
    if "cython" in results:
        print(f"speed-up (loss+grad): {results['python'][1] / results['cython'][1]:.2f}x")
        la, ga = kernels.loss_and_grad(batch, params, 1e-4, backend="python")
        lb, gb = kernels.loss_and_grad(batch, params, 1e-4, backend="cython")
        diff = max(float(np.max(np.abs(ga[k] - gb[k]))) for k in ga)
        print(f"agreement: |dloss|={abs(la - lb):.2e} max|dgrad|={diff:.2e}")
    else:
        print("compiled backend not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
