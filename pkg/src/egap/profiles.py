"""Ratio-to-best performance profiles over an instance/algorithm result grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["ProfileEntry", "ProfileTable", "performance_profile"]


@dataclass(frozen=True)
class ProfileEntry:
    instance: str
    algorithm: str
    iterations: int
    time_ms: float
    success: bool

    def cost(self, metric):
        if not self.success:
            return math.inf
        return float(self.iterations) if metric == "iterations" else float(self.time_ms)


@dataclass(frozen=True, eq=False)
class ProfileTable:
    metric: str
    thetas: np.ndarray
    curves: dict  # algorithm -> fractions over thetas

    def fraction_at(self, algorithm, theta=0.0):
        idx = int(np.searchsorted(self.thetas, theta, side="right")) - 1
        return float(self.curves[algorithm][max(idx, 0)])

    def to_csv(self):
        algs = sorted(self.curves)
        lines = ["theta," + ",".join(algs)]
        for i, th in enumerate(self.thetas):
            lines.append(
                f"{th:.17g}," + ",".join(f"{self.curves[a][i]:.17g}" for a in algs)
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def performance_profile(entries, metric="iterations", points=129):
    """Standard ratio-to-best profile in log2 scale; failures count as ratio = inf.

    Needs at least two algorithms and two instances. Curves are nondecreasing
    in theta and their terminal value equals each algorithm's success fraction.
    """
    algs = sorted({e.algorithm for e in entries})
    instances = sorted({e.instance for e in entries})
    if len(algs) < 2 or len(instances) < 2:
        raise ValueError("profiles need at least two algorithms and two instances")
    cost = {(e.instance, e.algorithm): e.cost(metric) for e in entries}
    ratios = {a: [] for a in algs}
    max_finite = 1.0
    for p in instances:
        row = [cost.get((p, a), math.inf) for a in algs]
        best = min(row)
        for a, c in zip(algs, row):
            if not math.isfinite(best):
                r = math.inf  # nobody solved this instance
            elif best > 0:
                r = c / best
            else:
                r = 1.0 if c == 0 else math.inf
            ratios[a].append(r)
            if math.isfinite(r):
                max_finite = max(max_finite, r)
    theta_max = max(1.0, math.ceil(math.log2(max_finite))) + 1.0
    thetas = np.linspace(0.0, theta_max, points)
    curves = {}
    for a in algs:
        r = np.array(ratios[a])
        curves[a] = np.array(
            [np.mean(r <= (2.0**th) * (1.0 + 1e-12)) for th in thetas]
        )
    return ProfileTable(metric=metric, thetas=thetas, curves=curves)
