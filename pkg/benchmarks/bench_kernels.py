"""Compare the compiled kernels with the numpy fallback.

Times each kernel and one full infidelity-plus-gradient evaluation (the cost of
one optimizer iteration) for a few ring sizes and slice counts.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from ringcurrent import kernels
from ringcurrent.evolve import slice_eigensystems
from ringcurrent.kernels import _fallback
from ringcurrent.ring import RingSpec, current_state, localized_state


def workload(L, n_slices, seed=0):
    ring = RingSpec.unit_hopping(L)
    gen = np.random.Generator(np.random.Philox(seed))
    values = gen.uniform(-3, 3, size=(n_slices, L))
    w, V = slice_eigensystems(ring, values)
    return w, V, 0.01, localized_state(ring, 1), current_state(ring, 1)


def iteration(impl, w, V, dt, psi0, target):
    U = impl.unitaries(V, w, dt)
    fwd = impl.forward_chain(U, psi0)
    bwd = impl.backward_chain(U, target)
    return impl.slice_overlaps(V, w, dt, fwd, bwd)


def bench(impl, args, repeat):
    w, V, dt, psi0, target = args
    U = impl.unitaries(V, w, dt)
    fwd = impl.forward_chain(U, psi0)
    bwd = impl.backward_chain(U, target)
    cases = {
        "unitaries": lambda: impl.unitaries(V, w, dt),
        "forward_chain": lambda: impl.forward_chain(U, psi0),
        "backward_chain": lambda: impl.backward_chain(U, target),
        "slice_overlaps": lambda: impl.slice_overlaps(V, w, dt, fwd, bwd),
        "iteration": lambda: iteration(impl, w, V, dt, psi0, target),
    }
    out = {}
    for name, fn in cases.items():
        number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
        out[name] = min(timeit.repeat(fn, number=number, repeat=repeat)) / number
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if kernels.native is None:
        print("compiled kernels not built; only the fallback is available")
    print(f"{'L':>3} {'slices':>6} {'kernel':<15} {'python [us]':>12} {'native [us]':>12} {'speedup':>8}")
    for L, n in ((8, 101), (8, 1001), (12, 1001)):
        problem = workload(L, n)
        if kernels.native is not None:
            ref = iteration(_fallback, *problem)
            got = iteration(kernels.native, *problem)
            assert np.max(np.abs(ref - got)) < 1e-12, "backends disagree"
        py = bench(_fallback, problem, args.repeat)
        nat = bench(kernels.native, problem, args.repeat) if kernels.native is not None else None
        for name, t in py.items():
            if nat is None:
                print(f"{L:>3} {n:>6} {name:<15} {t * 1e6:>12.1f} {'-':>12} {'-':>8}")
            else:
                print(f"{L:>3} {n:>6} {name:<15} {t * 1e6:>12.1f} {nat[name] * 1e6:>12.1f} {t / nat[name]:>8.2f}")


if __name__ == "__main__":
    main()
