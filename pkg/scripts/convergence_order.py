"""Self-convergence of the rollout under step halving.

    python3 scripts/convergence_order.py

Integrates a smooth periodic shape-rate profile over a fixed horizon with step
h and h/2, reports the terminal pose gap for each h, and fits the order.
"""
import numpy as np

from purcell import se2
from purcell.integrator import DiscretizationParams, rollout
from purcell.swimmer import SwimmerGeometry


def profile(t, period=10.0):
    w = 2 * np.pi * t / period
    return np.stack([0.5 * np.sin(w), 0.4 * np.cos(w) + 0.1], -1)


def terminal_gap(h, T=10.0, geom=SwimmerGeometry()):
    N = int(round(T / h))
    coarse = rollout(se2.IDENTITY, [0, 0], profile(h * np.arange(N)), DiscretizationParams(h, N), geom)
    fine = rollout(se2.IDENTITY, [0, 0], profile(h / 2 * np.arange(2 * N)), DiscretizationParams(h / 2, 2 * N), geom)
    return float(np.linalg.norm(se2.log(se2.compose(se2.inverse(coarse.poses[-1]), fine.poses[-1]))))


def main():
    hs = [0.1, 0.05, 0.025, 0.0125]
    gaps = [terminal_gap(h) for h in hs]
    for h, e in zip(hs, gaps):
        print(f"h = {h:<8g} gap = {e:.6e}")
    order = np.polyfit(np.log(hs), np.log(gaps), 1)[0]
    print(f"fitted order {order:.3f}")


if __name__ == "__main__":
    main()
