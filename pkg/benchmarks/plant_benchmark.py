"""Compare the compiled plant kernel against the pure-Python fallback.

Usage: python benchmarks/plant_benchmark.py

Times the kernel microbenchmark (one action cycle of 33 subgoals x 3 plant
steps) and a full scripted one_leg episode through the environment, for
both implementations, and verifies they produce bit-identical results.
"""

import math
import time

from kitbench import _fastpath
from kitbench._fastpath import reference


def time_cycles(impl, n=2000):
    pos, quat = (0.22, -0.14, 0.20), (1.0, 0.0, 0.0, 0.0)
    linvel = angvel = (0.0, 0.0, 0.0)
    kp = (5e4,) * 3 + (500.0,) * 3
    kd = (200.0,) * 3 + (2.0,) * 3
    goal = (0.25, -0.12, 0.18)
    started = time.perf_counter()
    state = (pos, quat, linvel, angvel)
    for _ in range(n):
        for k in range(33):
            states, _ = impl.subgoal_cycle(
                *state, goal, quat, kp, kd, 1.0, 0.01, 2.0, 1e-3, 3,
                2000.0, 200.0,
            )
            state = states[-1]
    return (time.perf_counter() - started) / n, state


def time_episode():
    from kitbench.config import RunConfig
    from kitbench.env import Environment, run_episode
    from kitbench.experts import make_expert

    env = Environment(RunConfig(furniture="one_leg", level="low"))
    started = time.perf_counter()
    result, _ = run_episode(env, make_expert("one_leg"), seed=0)
    assert result.success
    return time.perf_counter() - started, result.length


def main():
    if _fastpath.IMPL != "compiled":
        print("compiled kernel unavailable; only the fallback was timed")
        t, _ = time_cycles(reference)
        print(f"pure python : {t * 1e3:7.3f} ms per action cycle")
        return

    t_c, end_c = time_cycles(_fastpath._impl)
    t_p, end_p = time_cycles(reference, n=200)
    identical = end_c == end_p
    print(f"compiled    : {t_c * 1e3:7.3f} ms per action cycle")
    print(f"pure python : {t_p * 1e3:7.3f} ms per action cycle")
    print(f"speedup     : {t_p / t_c:7.1f}x   bit-identical: {identical}")

    t_ep, steps = time_episode()
    print(f"one_leg scripted episode ({steps} actions): {t_ep:5.2f} s "
          f"with the {_fastpath.IMPL} kernel")
    if not identical:
        raise SystemExit("kernel outputs diverged")


if __name__ == "__main__":
    main()
