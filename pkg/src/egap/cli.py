"""Benchmark command line: single runs, manifest batches and performance profiles.

Problem sources are either a JSON problem file or one of the generator specs
``gen:example1``, ``gen:alloc:SEED:M:NX`` and ``gen:sconvex:SEED:M:NX``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from .algorithms import ALGORITHMS, SolverConfig, run
from .generators import (
    generate_example1,
    generate_random_allocation,
    generate_strongly_convex,
)
from .problem import load_problem
from .profiles import ProfileEntry, performance_profile

__all__ = ["RunManifest", "resolve_problem", "run_command", "main"]

_CONFIG_KEYS = (
    "tau0", "eps_p", "eps_d", "eps_phi", "omega", "max_iter", "inner_tolerance",
    "check_invariant_every_iter", "stop_rule", "workers", "gradient_map_mode",
    "strict_schedule", "tau_rule", "tau_simple_a", "tau_simple_b", "target_phi",
)


def resolve_problem(spec):
    """Returns (instance_tag, problem, seed-or-None) for a problem source spec."""
    if spec.startswith("gen:"):
        parts = spec.split(":")
        kind = parts[1]
        if kind == "example1":
            return "example1", generate_example1(), None
        if kind == "alloc":
            seed, M, nx = int(parts[2]), int(parts[3]), int(parts[4])
            return f"alloc_{seed}_{M}_{nx}", generate_random_allocation(seed, M, nx), seed
        if kind == "sconvex":
            seed, M, nx = int(parts[2]), int(parts[3]), int(parts[4])
            return f"sconvex_{seed}_{M}_{nx}", generate_strongly_convex(seed, M, nx), seed
        raise ValueError(f"unknown generator {spec!r}")
    tag = os.path.splitext(os.path.basename(spec))[0]
    return tag, load_problem(spec), None


@dataclass
class RunManifest:
    """Batch description: problem sources x algorithms with config overrides.

    Seeds live inside the generator specs, so a manifest pins every run
    bit-for-bit.
    """

    problems: list
    algorithms: list
    out_dir: str = "."
    config: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        return cls(
            problems=list(doc["problems"]),
            algorithms=list(doc["algorithms"]),
            out_dir=doc.get("out", "."),
            config=dict(doc.get("config", {})),
        )


def _make_config(algorithm, overrides):
    known = {k: v for k, v in overrides.items() if k in _CONFIG_KEYS}
    unknown = set(overrides) - set(known)
    if unknown:
        raise ValueError(f"unknown config overrides: {sorted(unknown)}")
    return SolverConfig(algorithm=algorithm, **known)


def run_manifest(manifest):
    """Execute every (problem, algorithm) pair; returns (summary_entries, had_error).

    Trace CSVs are written with the time column zeroed so repeated runs are
    byte-identical; wall times are reported in the summary instead.
    """
    os.makedirs(manifest.out_dir, exist_ok=True)
    summary = []
    had_error = False
    for source in manifest.problems:
        try:
            tag, problem, seed = resolve_problem(source)
        except Exception as exc:  # noqa: BLE001 - report and continue per run
            print(f"error: {source}: {exc}", file=sys.stderr)
            had_error = True
            continue
        for alg in manifest.algorithms:
            try:
                config = _make_config(alg, manifest.config)
                state, trace = run(problem, config)
            except Exception as exc:  # noqa: BLE001
                print(f"error: {tag} x {alg}: {exc}", file=sys.stderr)
                summary.append(
                    {"instance": tag, "algorithm": alg, "error": str(exc), "seed": seed}
                )
                had_error = True
                continue
            trace.write_csv(
                os.path.join(manifest.out_dir, f"{tag}__{alg}.csv"), deterministic_time=True
            )
            summary.append(
                {
                    "instance": tag,
                    "algorithm": alg,
                    "iterations": state.k,
                    "stop_reason": trace.stop_reason,
                    "phi": state.phi,
                    "feas_norm": state.residual_norm,
                    "time_ms": trace.last.time_ms,
                    "seed": seed,
                }
            )
    with open(os.path.join(manifest.out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary, had_error


def run_command(manifest):
    """Spec'd exit-code wrapper around run_manifest."""
    _, had_error = run_manifest(manifest)
    return 1 if had_error else 0


def _profile_entries(summary):
    out = []
    for row in summary:
        if "error" in row:
            out.append(ProfileEntry(row["instance"], row["algorithm"], 0, 0.0, False))
        else:
            out.append(
                ProfileEntry(
                    row["instance"],
                    row["algorithm"],
                    row["iterations"],
                    row["time_ms"],
                    row["stop_reason"] != "max_iter",
                )
            )
    return out


def _build_parser():
    parser = argparse.ArgumentParser(prog="egap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one algorithm on one problem")
    solve.add_argument("--problem", required=True)
    solve.add_argument("--alg", required=True, choices=ALGORITHMS)
    solve.add_argument("--tau0", type=float, default=None)
    solve.add_argument("--max-iter", type=int, default=10_000)
    solve.add_argument("--eps-p", type=float, default=1e-2)
    solve.add_argument("--eps-d", type=float, default=1e-1)
    solve.add_argument("--eps-phi", type=float, default=1e-5)
    solve.add_argument("--omega", type=float, default=1.0)
    solve.add_argument("--trace", default=None, help="write the per-iteration CSV here")
    solve.add_argument("--check-invariants", action="store_true")
    solve.add_argument("--workers", type=int, default=1)
    solve.add_argument("--deterministic-trace", action="store_true",
                       help="zero the time column of the trace CSV")

    profile = sub.add_parser("profile", help="run a manifest and build performance profiles")
    profile.add_argument("--manifest", required=True)
    profile.add_argument("--out", required=True)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "solve":
        try:
            tag, problem, seed = resolve_problem(args.problem)
            config = SolverConfig(
                algorithm=args.alg,
                tau0=args.tau0,
                max_iter=args.max_iter,
                eps_p=args.eps_p,
                eps_d=args.eps_d,
                eps_phi=args.eps_phi,
                omega=args.omega,
                check_invariant_every_iter=args.check_invariants,
                workers=args.workers,
            )
            state, trace = run(problem, config)
        except Exception as exc:  # noqa: BLE001
            print(f"error: {exc}", file=sys.stderr)
            return 1
        if args.trace:
            trace.write_csv(args.trace, deterministic_time=args.deterministic_trace)
        summary = {
            "instance": tag,
            "algorithm": args.alg,
            "iterations": state.k,
            "stop_reason": trace.stop_reason,
            "phi": state.phi,
            "feas_norm": state.residual_norm,
            "time_ms": trace.last.time_ms,
            "seed": seed,
        }
        print(json.dumps(summary, indent=2))
        return 0
    if args.command == "profile":
        try:
            manifest = RunManifest.from_file(args.manifest)
            manifest.out_dir = args.out
            summary, had_error = run_manifest(manifest)
            entries = _profile_entries(summary)
            for metric in ("iterations", "time_ms"):
                table = performance_profile(entries, metric=metric)
                name = "iterations" if metric == "iterations" else "time"
                table.write_csv(os.path.join(args.out, f"profile_{name}.csv"))
        except Exception as exc:  # noqa: BLE001
            print(f"error: {exc}", file=sys.stderr)
            return 1
        return 1 if had_error else 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
