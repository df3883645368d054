"""Compare the compiled gradient kernel against the numpy fallback.

Times fidelity_grad_batch on the training shapes that dominate real
runs: one momentum step is a batch of 2 states, one epoch is 100 such
steps. Run as: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from gateforge import TrainConfig, build_search_space
from gateforge.evolution import haar_states
from gateforge import _pykernels

try:
    from gateforge import _fastkernels
except ImportError:
    _fastkernels = None

CASES = [
    ("toffoli reduced diag", "toffoli", "diagonal_pairwise", True),
    ("toffoli raw two-local", "toffoli", "full_two_local", False),
    ("double_fredkin reduced diag", "double_fredkin", "diagonal_pairwise", True),
    ("double_fredkin raw two-local", "double_fredkin", "full_two_local", False),
]
BATCH = 2
CALLS = 300


def bench(kernel, stack, lam, G, batches):
    t0 = time.perf_counter()
    for psis in batches:
        kernel.fidelity_grad_batch(stack, lam, G, psis)
    return (time.perf_counter() - t0) / len(batches)


def main():
    rng = np.random.default_rng(7)
    print(f"{'case':32} {'dim':>4} {'params':>6} {'numpy':>10} "
          f"{'compiled':>10} {'speedup':>8}")
    for label, gate, family, reduce_ in CASES:
        cfg = TrainConfig(gate=gate, basis_family=family,
                          reduce_by_commutant=reduce_, seed=7)
        model = build_search_space(cfg)
        stack = np.ascontiguousarray(model.stack)
        lam = rng.normal(size=len(model.lam))
        G = cfg.gate.matrix
        d = G.shape[0]
        batches = [haar_states(d, BATCH, rng) for _ in range(CALLS)]

        # warm both paths before timing
        _pykernels.fidelity_grad_batch(stack, lam, G, batches[0])
        t_py = bench(_pykernels, stack, lam, G, batches)
        if _fastkernels is None:
            print(f"{label:32} {d:>4} {len(lam):>6} {t_py * 1e6:>8.1f}us "
                  f"{'missing':>10} {'':>8}")
            continue
        f1, g1 = _pykernels.fidelity_grad_batch(stack, lam, G, batches[0])
        f2, g2 = _fastkernels.fidelity_grad_batch(stack, lam, G, batches[0])
        err = max(np.max(np.abs(f1 - f2)), np.max(np.abs(g1 - g2)))
        if err > 1e-12:
            raise AssertionError(f"{label}: backends disagree by {err:.2e}")
        _fastkernels.fidelity_grad_batch(stack, lam, G, batches[0])
        t_c = bench(_fastkernels, stack, lam, G, batches)
        print(f"{label:32} {d:>4} {len(lam):>6} {t_py * 1e6:>8.1f}us "
              f"{t_c * 1e6:>8.1f}us {t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
