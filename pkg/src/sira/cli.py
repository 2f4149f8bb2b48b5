"""Benchmark driver: ``sira solve`` runs experiments, ``sira verify`` runs the theory suites.

Exit codes: 0 success, 1 a solver run did not converge (or a verification
check failed), 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, MalformedInputError, NearSingularProjection, ZeroPivotError
from .outer import METHODS, InnerConfig, OuterConfig, solve
from .sparse import mm_load

log = logging.getLogger("sira")

HISTORY_COLUMNS = ("outer_index", "relative_residual", "inner_tol", "inner_iters")
TEPS_METHODS = ("SIRA", "JD")
CONFIG_KEYS = {
    "matrix", "sigma_re", "sigma_im", "methods", "teps", "droptol", "mmax", "max_restarts",
    "seed", "out", "m_budget", "outer_tol_factor", "start", "inner_maxit", "inner_restart",
}


@dataclass
class ExperimentSpec:
    matrix_path: str
    sigma: complex = 0.0
    methods: list = field(default_factory=lambda: ["SIRA"])
    teps: list = field(default_factory=lambda: [1e-3])
    droptol: float = 1e-3
    m_max: int = 150
    max_restarts: int = 0
    seed: int = 0
    out: str = "sira-out"
    m_budget: int | None = None
    outer_tol_factor: float = 1e-10
    start: str = "ones"
    inner_maxit: int = 300
    inner_restart: int = 30

    def validate(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        if not self.teps:
            raise ConfigError("at least one teps value is required")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        if self.droptol < 0:
            raise ConfigError("droptol must be nonnegative")
        if self.start not in ("ones", "random"):
            raise ConfigError("start must be 'ones' or 'random'")
        for t in self.teps:
            if not 0 < t < 0.5:
                raise ConfigError(f"teps must lie in (0, 0.5), got {t}")
        return self

    def runs(self):
        """``(method, teps)`` pairs; methods without a ``teps`` parameter run once."""
        out = []
        for m in self.methods:
            if m in TEPS_METHODS:
                out.extend((m, t) for t in self.teps)
            else:
                out.append((m, None))
        return out

    def config_for(self, method, teps):
        return OuterConfig(
            sigma=self.sigma,
            teps=teps if teps is not None else self.teps[0],
            outer_tol_factor=self.outer_tol_factor,
            m_max=self.m_max,
            max_restarts=self.max_restarts,
            method=method,
            inner=InnerConfig(restart=self.inner_restart, maxit=self.inner_maxit, droptol=self.droptol),
            sia_m_budget=self.m_budget,
        )


@dataclass
class RunOutcome:
    label: str
    method: str
    teps: float | None
    status: str
    record: object = None
    error: str | None = None
    eigenvalue: complex = complex("nan")


def run_label(method, teps):
    return f"{method}" if teps is None else f"{method}_{teps:g}"


def _start_vector(spec, n):
    if spec.start == "ones":
        return None
    rng = np.random.default_rng(spec.seed)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def run_experiment(spec: ExperimentSpec, a=None):
    """Run every ``(method, teps)`` pair and write the report files.

    Returns the list of :class:`RunOutcome`. A failing run is recorded with
    its status and the remaining runs continue.
    """
    spec.validate()
    if a is None:
        a = mm_load(spec.matrix_path)
    outcomes = []
    for method, teps in spec.runs():
        label = run_label(method, teps)
        cfg = spec.config_for(method, teps)
        try:
            res = solve(a, cfg, start=_start_vector(spec, a.n))
        except ZeroPivotError as exc:
            outcomes.append(RunOutcome(label, method, teps, "zero_pivot", error=str(exc)))
            continue
        except NearSingularProjection as exc:
            outcomes.append(RunOutcome(label, method, teps, "near_singular_projection", error=str(exc)))
            continue
        rec = res.record
        log.info("%s: %s lambda=%s I_out=%d I_inn=%d", label, rec.status, res.eigenvalue, rec.i_out, rec.i_inn)
        outcomes.append(RunOutcome(label, method, teps, rec.status, rec, eigenvalue=res.eigenvalue))
    emit_report(outcomes, spec, a.n)
    return outcomes


def _num(v):
    v = float(v)
    return None if math.isnan(v) else v


def summary_entry(o: RunOutcome, spec: ExperimentSpec, n):
    entry = {
        "label": o.label,
        "method": o.method,
        "teps": o.teps,
        "status": o.status,
        "converged": o.status in ("converged", "breakdown"),
        "n": n,
        "sigma": {"re": spec.sigma.real, "im": spec.sigma.imag},
        "droptol": spec.droptol,
        "m_max": spec.m_max,
        "eigenvalue": {"re": _num(o.eigenvalue.real), "im": _num(o.eigenvalue.imag)},
    }
    rec = o.record
    if rec is None:
        entry.update(error=o.error, i_out=0, i_inn=0, i_01=0, restarts=0)
        return entry
    last = rec.iterations[-1]
    entry.update(
        i_out=rec.i_out,
        i_inn=rec.i_inn,
        i_01=rec.i_01 if o.method in TEPS_METHODS else None,
        restarts=rec.restarts,
        inner_nonconverged=rec.inner_nonconverged,
        outer_tol=rec.tol,
        final_residual=last.residual_norm,
        final_relative_residual=last.relative_residual,
        history=f"history_{o.label}.csv",
    )
    return entry


def write_history(path, record):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HISTORY_COLUMNS)
        for it in record.iterations:
            w.writerow([it.outer_index, repr(float(it.relative_residual)), repr(float(it.inner_tol)), it.inner_iters])


def read_history(path):
    """Rows of a history CSV as dicts with typed values."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {
            "outer_index": int(r["outer_index"]),
            "relative_residual": float(r["relative_residual"]),
            "inner_tol": float(r["inner_tol"]),
            "inner_iters": int(r["inner_iters"]),
        }
        for r in rows
    ]


def format_table(outcomes, unit=1e-4):
    """Plain-text table in the layout Algorithm | I_inn I_out I_0.1 | T1..T4."""
    head = f"{'Algorithm':<16}  {'I_inn':>6} {'I_out':>6} {'I_0.1':>6}  {'T1':>8} {'T2':>8} {'T3':>8} {'T4':>8}  status"
    lines = [head, "-" * len(head)]
    for o in outcomes:
        name = _display_name(o)
        rec = o.record
        if rec is None:
            lines.append(f"{name:<16}  {'-':>6} {'-':>6} {'-':>6}  {'-':>8} {'-':>8} {'-':>8} {'-':>8}  {o.status}")
            continue
        i01 = str(rec.i_01) if o.method in TEPS_METHODS else "-"
        times = " ".join(f"{t / unit:>8.0f}" for t in (rec.t1, rec.t2, rec.t3, rec.t4))
        lines.append(f"{name:<16}  {rec.i_inn:>6d} {rec.i_out:>6d} {i01:>6}  {times}  {o.status}")
    lines.append(f"(T1-T4 in units of {unit:g} s)")
    return "\n".join(lines) + "\n"


def _display_name(o):
    if o.teps is not None:
        return f"{o.method}({o.teps:g})"
    return {"SIRA_exact": "Exact SIRA", "SIA_exact": "Exact SIA", "SIA_inexact": "Inexact SIA"}[o.method]


def emit_report(outcomes, spec: ExperimentSpec, n):
    """Write histories, ``summary.json``, ``timings.json`` and ``table.txt`` under ``spec.out``.

    Everything except ``timings.json`` and ``table.txt`` is deterministic.
    """
    if not outcomes:
        raise ConfigError("no runs to report")
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    timings = []
    for o in outcomes:
        summary.append(summary_entry(o, spec, n))
        if o.record is not None:
            write_history(out / f"history_{o.label}.csv", o.record)
            rec = o.record
            timings.append({"label": o.label, "t1": rec.t1, "t2": rec.t2, "t3": rec.t3, "t4": rec.t4})
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "timings.json", "w") as fh:
        json.dump(timings, fh, indent=2)
        fh.write("\n")
    (out / "table.txt").write_text(format_table(outcomes))
    return out


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a flat JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def spec_from_args(args) -> ExperimentSpec:
    """Merge the JSON config (if any) with command-line flags; flags win."""
    data = load_config(args.config) if args.config else {}
    flags = {
        "matrix": args.matrix, "sigma_re": args.sigma_re, "sigma_im": args.sigma_im,
        "methods": args.method, "teps": args.teps, "droptol": args.droptol, "mmax": args.mmax,
        "max_restarts": args.max_restarts, "seed": args.seed, "out": args.out,
        "m_budget": args.m_budget, "outer_tol_factor": args.outer_tol_factor, "start": args.start,
    }
    for k, v in flags.items():
        if v is not None:
            data[k] = v
    if "matrix" not in data:
        raise ConfigError("--matrix is required")
    methods = data.get("methods", ["SIRA"])
    teps = data.get("teps", [1e-3])
    if isinstance(methods, str):
        methods = [methods]
    if isinstance(teps, (int, float)):
        teps = [teps]
    try:
        spec = ExperimentSpec(
            matrix_path=str(data["matrix"]),
            sigma=complex(float(data.get("sigma_re", 0.0)), float(data.get("sigma_im", 0.0))),
            methods=list(methods),
            teps=[float(t) for t in teps],
            droptol=float(data.get("droptol", 1e-3)),
            m_max=int(data.get("mmax", 150)),
            max_restarts=int(data.get("max_restarts", 0)),
            seed=int(data.get("seed", 0)),
            out=str(data.get("out", "sira-out")),
            m_budget=None if data.get("m_budget") is None else int(data["m_budget"]),
            outer_tol_factor=float(data.get("outer_tol_factor", 1e-10)),
            start=str(data.get("start", "ones")),
            inner_maxit=int(data.get("inner_maxit", 300)),
            inner_restart=int(data.get("inner_restart", 30)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc
    spec.validate()
    # surface OuterConfig validation before any work
    for method, teps in spec.runs():
        spec.config_for(method, teps)
    return spec


def build_parser():
    p = argparse.ArgumentParser(prog="sira", description=__doc__.splitlines()[0])
    p.add_argument("--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run eigensolver experiments on a Matrix Market file")
    s.add_argument("--config", help="flat JSON config; flags override its fields")
    s.add_argument("--matrix")
    s.add_argument("--sigma-re", type=float)
    s.add_argument("--sigma-im", type=float)
    s.add_argument("--method", action="append", choices=METHODS, help="repeatable")
    s.add_argument("--teps", action="append", type=float, help="repeatable")
    s.add_argument("--droptol", type=float)
    s.add_argument("--mmax", type=int)
    s.add_argument("--max-restarts", type=int)
    s.add_argument("--m-budget", type=int, help="m in the relaxed SIA tolerance (default mmax)")
    s.add_argument("--outer-tol-factor", type=float)
    s.add_argument("--start", choices=("ones", "random"))
    s.add_argument("--out")
    s.add_argument("--seed", type=int)

    v = sub.add_parser("verify", help="run the identity and inequality suites")
    v.add_argument("--probes", type=int, default=500)
    v.add_argument("--seed", type=int, default=0)
    return p


def _cmd_solve(args):
    spec = spec_from_args(args)
    try:
        outcomes = run_experiment(spec)
    except (OSError, MalformedInputError, DimensionError) as exc:
        raise ConfigError(str(exc)) from exc
    sys.stdout.write(format_table(outcomes))
    if any(o.status in ("zero_pivot",) for o in outcomes):
        return 2
    return 0 if all(o.status in ("converged", "breakdown") for o in outcomes) else 1


def _cmd_verify(args):
    from .theory import run_identity_suite, run_inequality_suite

    if args.probes < 1:
        raise ConfigError("--probes must be positive")
    ok = True
    for runner in (run_identity_suite, run_inequality_suite):
        rep = runner(args.probes, args.seed)
        print("\n".join(rep.lines()))
        ok = ok and rep.ok
    return 0 if ok else 1


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        return _cmd_verify(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
