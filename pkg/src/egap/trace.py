"""Per-iteration convergence records and CSV emission."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["IterationRecord", "ConvergenceTrace", "CSV_HEADER"]

CSV_HEADER = (
    "k,tau,beta1,beta2,phi,dual_smoothed,gap_surrogate,feas_norm,"
    "rpfgap,rdfgap,e_d,e_p,time_ms"
)


@dataclass(frozen=True, eq=False)
class IterationRecord:
    k: int
    tau: float
    beta1: float
    beta2: float
    phi: float
    dual_smoothed: float
    gap_surrogate: float
    feas_norm: float
    rpfgap: float
    rdfgap: float
    e_d: float
    e_p: float
    time_ms: float
    # diagnostics kept out of the CSV
    y_norm: float = 0.0
    prox_values: np.ndarray | None = None

    def csv_row(self, deterministic_time=False):
        t = 0.0 if deterministic_time else self.time_ms
        vals = (
            self.tau, self.beta1, self.beta2, self.phi, self.dual_smoothed,
            self.gap_surrogate, self.feas_norm, self.rpfgap, self.rdfgap,
            self.e_d, self.e_p, t,
        )
        return f"{self.k}," + ",".join(f"{v:.17g}" for v in vals)


class ConvergenceTrace:
    """Ordered list of per-iteration records for one solver run."""

    def __init__(self):
        self.records = []
        self.stop_reason = None

    def append(self, record):
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    @property
    def last(self):
        return self.records[-1]

    def phi_values(self):
        return np.array([r.phi for r in self.records])

    def to_csv(self, deterministic_time=False):
        lines = [CSV_HEADER]
        lines.extend(r.csv_row(deterministic_time) for r in self.records)
        return "\n".join(lines) + "\n"

    def write_csv(self, path, deterministic_time=False):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv(deterministic_time))
