"""Run scenarios, write the time-series CSV and the invariant report."""

from __future__ import annotations

import glob as _glob
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from ..dynamics import PositivityError, evolve
from ..equilibrium import check_equilibrium_bipartite, check_equilibrium_undecomposed
from ..propagators import ConstraintError
from ..thermo import LEDGER_COLUMNS, ContactTemperatureError, ExchangeLedger, inequality_suite
from .config import ConfigError, Scenario, ScenarioConfig, build, resolve, validate

__all__ = ["RunReport", "run", "run_file", "batch", "write_csv", "format_float", "OUT_ENV", "default_out_dir"]

REPORT_SCHEMA = "quantherm-report/1"
OUT_ENV = "QUANTHERM_OUT"


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "quantherm_out"))


def format_float(x: float) -> str:
    """17 significant digits; round-trips every double."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_csv(path, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(LEDGER_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(format_float(v) for v in row.as_row()) + "\n")


@dataclass
class _Tracker:
    name: str
    checked: int = 0
    violations: int = 0
    first_violation_t: float | None = None
    worst_margin: float | None = None

    def update(self, t: float, margin: float):
        self.checked += 1
        if self.worst_margin is None or margin < self.worst_margin:
            self.worst_margin = margin
        if margin < 0.0:
            self.violations += 1
            if self.first_violation_t is None:
                self.first_violation_t = t

    def to_dict(self):
        return {
            "name": self.name,
            "checked": self.checked,
            "violations": self.violations,
            "first_violation_t": self.first_violation_t,
            "worst_margin": self.worst_margin,
        }


def _row_margins(row: ExchangeLedger, tol: dict) -> dict:
    """Signed margins (non-negative = satisfied) of the per-row invariants."""
    return {
        "trace": tol["trace"] - abs(row.res_trace),
        "hermiticity": tol["hermiticity"] - row.res_hermiticity,
        "positivity": row.min_eig + tol["trace"],
        "first_law": tol["first_law_rel"] * row.first_law_scale - abs(row.res_first_law),
        "energy_balance": tol["first_law_rel"] * row.first_law_scale
        - max(abs(row.res_balance_E1), abs(row.res_balance_E2), abs(row.res_balance_E12)),
        "heat_sum": tol["heat"] - abs(row.res_heat_sum),
        "ex_additivity": tol["heat"] - abs(row.res_ex_additivity),
        "internal_sum": tol["heat"] - abs(row.res_internal_sum),
        "internal_power": tol["heat"] - abs(row.res_W_int),
        "entropy_rate_cd": tol["entropy"] - abs(row.res_S_dot_cd),
        "subadditivity": tol["entropy"] - row.S_cd,
        "second_law": row.Sigma + tol["inequality"],
        "sigma_forms": tol["inequality"] - abs(row.res_Sigma_forms),
        "reservoir_heat": tol["reservoir"] - abs(row.Q2_HR - row.C_HR_Tdot),
    }


def summarize_invariants(rows, names, tol, bipartite: bool, omega_ex=None) -> list[dict]:
    """One entry per configured invariant, in configured order."""
    trackers = {n: _Tracker(n) for n in names}
    ineq = [n for n in names if n.startswith("ineq:")]
    for row in rows:
        margins = _row_margins(row, tol)
        for n, tr in trackers.items():
            if n in margins:
                tr.update(row.t, margins[n])
        if ineq:
            suite = inequality_suite(row, tol=tol["inequality"], bipartite=bipartite, omega_ex=omega_ex,
                                     partition_tol=tol["partition"])
            for res in suite:
                key = "ineq:" + res.name
                if key in trackers and res.applicable:
                    trackers[key].update(row.t, res.margin + tol["inequality"])
    return [trackers[n].to_dict() for n in names]


def _final_equilibrium(sc: Scenario, traj) -> dict:
    rho = traj.states[-1]
    ro = traj.propagators[-1]
    t = float(traj.times[len(traj.states) - 1])
    ham = sc.hamiltonian.at(t)
    tol = sc.config.data["tolerances"]
    eff = getattr(sc.policy, "effective_temperatures", None)
    try:
        temps = eff(t, rho, ham) if eff is not None else sc.temperatures(t)
    except (ContactTemperatureError, ValueError):
        temps = sc.temperatures(t)
    if sc.dims.bipartite:
        rep = check_equilibrium_bipartite(rho, ham, ro, temps, tol["equilibrium_op"], tol["equilibrium_rate"],
                                          k_B=sc.k_B, hbar=sc.hbar, z=sc.z)
    else:
        a_dot = np.concatenate([ham.a1_dot, ham.a12_dot])
        rep = check_equilibrium_undecomposed(rho, ham, ro, a_dot, temps.theta, temps.t_box,
                                             tol["equilibrium_op"], tol["equilibrium_rate"],
                                             k_B=sc.k_B, hbar=sc.hbar, z=sc.z)
    return rep.to_dict()


@dataclass
class RunReport:
    """Result of one scenario run.

    ``report`` is the deterministic JSON document written to disk;
    ``wall_clock`` is kept separately so that reports stay byte-identical.
    """

    name: str
    rows: list
    report: dict
    status: str
    exit_code: int
    wall_clock: dict = field(default_factory=dict)
    csv_path: str | None = None
    report_path: str | None = None

    @property
    def invariants(self) -> list:
        return self.report["invariants"]


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _sanitize_json(obj):
    # JSON has no NaN; use null so reports are standard JSON
    if isinstance(obj, float):
        return None if not math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _sanitize_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize_json(v) for v in obj]
    return obj


def run(cfg: ScenarioConfig, out_dir=None, write: bool = True) -> RunReport:
    """Build and integrate one scenario and write its outputs.

    Hard errors (positivity breach, non-finite values, infeasible
    propagator constraints, undefined extracted temperatures) end the run;
    the rows computed so far are still written and the exit code is 1.
    """
    start = time.perf_counter()
    data = cfg.data
    sc = build(cfg)
    error = None
    rows = []
    traj = None
    with threadpool_limits(limits=1):
        try:
            traj = evolve(sc.initial, sc.hamiltonian, sc.policy, sc.t_span, sc.dt,
                          temperatures=sc.temperatures, hbar=sc.hbar, k_B=sc.k_B, z=sc.z)
            rows = traj.ledger
        except (PositivityError, FloatingPointError, ConstraintError, ContactTemperatureError) as e:
            partial = getattr(e, "partial", None)
            rows = partial.ledger if partial is not None else []
            n_rows = len(rows)
            error = {
                "type": type(e).__name__,
                "message": str(e),
                "step": getattr(e, "step", n_rows),
                "t": getattr(e, "t", float(sc.t_span[0] + sc.dt * n_rows)),
            }
            traj = partial if partial is not None and partial.states else None
        tol = data["tolerances"]
        summary = summarize_invariants(rows, data["invariants"], tol, sc.dims.bipartite, sc.omega_ex)
        equilibrium = _final_equilibrium(sc, traj) if traj is not None else None
    steps = int(round((sc.t_span[1] - sc.t_span[0]) / sc.dt))
    status = "ok" if error is None else "error"
    report = {
        "schema": REPORT_SCHEMA,
        "scenario": cfg.name,
        "config_sha256": cfg.digest(),
        "policy": data["propagator"]["policy"],
        "dims": [sc.dims.d1, sc.dims.d2],
        "steps": steps,
        "rows": len(rows),
        "status": status,
        "error": error,
        "columns": list(LEDGER_COLUMNS),
        "invariants": summary,
        "violated": [s["name"] for s in summary if s["violations"]],
        "equilibrium": equilibrium,
    }
    report = _sanitize_json(report)
    elapsed = time.perf_counter() - start
    result = RunReport(cfg.name, rows, report, status, 0 if error is None else 1,
                       {"seconds": elapsed, "steps_per_second": steps / elapsed if elapsed > 0 else None})
    if write:
        out = Path(out_dir) if out_dir is not None else default_out_dir()
        out.mkdir(parents=True, exist_ok=True)
        prefix = data["output"]["prefix"]
        csv_path = out / f"{prefix}.csv"
        rep_path = out / f"{prefix}.report.json"
        write_csv(csv_path, rows)
        rep_path.write_text(json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n")
        (out / f"{prefix}.timing.json").write_text(json.dumps(result.wall_clock, indent=2) + "\n")
        result.csv_path, result.report_path = str(csv_path), str(rep_path)
    return result


def run_file(path, out_dir=None) -> dict:
    """Validate and run one config file; never raises for scenario errors.

    Returns a summary dict suitable for the batch table.
    """
    entry = {"file": str(path), "scenario": Path(path).stem}
    try:
        cfg = validate(path)
        entry["scenario"] = cfg.name
        res = run(cfg, out_dir)
    except ConfigError as e:
        entry.update(status="invalid", exit_code=2, errors=e.errors)
        return entry
    except Exception as e:  # noqa: BLE001 - one bad scenario must not stop a batch
        entry.update(status="error", exit_code=1, errors=[f"{type(e).__name__}: {e}"])
        return entry
    entry.update(
        status=res.status,
        exit_code=res.exit_code,
        rows=res.report["rows"],
        violated=res.report["violated"],
        csv=res.csv_path,
        report=res.report_path,
        errors=[res.report["error"]["message"]] if res.report["error"] else [],
    )
    return entry


def _run_file_star(args):
    return run_file(*args)


def batch(pattern: str, jobs: int = 1, out_dir=None) -> dict:
    """Run every config matching ``pattern``; failures are collected, not
    raised.  Output files are identical for any ``jobs``."""
    files = sorted(_glob.glob(pattern))
    if not files:
        raise FileNotFoundError(f"no scenario files match {pattern!r}")
    out = Path(out_dir) if out_dir is not None else default_out_dir()
    args = [(f, out) for f in files]
    if jobs <= 1:
        entries = [run_file(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(_run_file_star, args))
    summary = {
        "schema": "quantherm-batch/1",
        "pattern": pattern,
        "scenarios": entries,
        "n_ok": sum(e["status"] == "ok" for e in entries),
        "n_failed": sum(e["status"] != "ok" for e in entries),
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "batch_report.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary
