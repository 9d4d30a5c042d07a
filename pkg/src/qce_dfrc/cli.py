"""Command-line front end: solve, sweep, oracle-check and ser.

Configs are flat ``key = value`` files.  Scenario keys are bare
(``n_antennas = 32``); solver overrides use dotted namespaces
(``alm.tau = 1.01``, ``homotopy.lambda0 = 1e-3``); sweep axes live under
``sweep.`` and Monte Carlo settings under ``ser.``.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import itertools
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .alm import homotopy_solve
from .bsum import apply_A, f_value, g_value
from .config import AlmParams, ConfigError, HomotopyParams, SystemConfig
from .metrics import evaluate_beampattern, safety_margins, simulate_ser
from .oracle import BudgetExceeded, EnumerationBudget, exhaustive_solve
from .problem import Instance, RealWaveform, make_instance

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3


@dataclass
class RunConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    alm: AlmParams = field(default_factory=AlmParams)
    homotopy: HomotopyParams = field(default_factory=HomotopyParams)
    sweep_b: list = field(default_factory=list)
    sweep_L: list = field(default_factory=list)
    sweep_snr_db: list = field(default_factory=list)
    sweep_seeds: list = field(default_factory=list)
    ser_trials: int = 0            # 0 disables SER in ``solve``
    oracle_seeds: int = 50
    oracle_budget: int = 1_000_000
    out_dir: str = "results"


# --- config parsing --------------------------------------------------------

def _parse_value(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    if low == "-inf":
        return -math.inf
    if low in ("none", "null"):
        return None
    try:
        return json.loads(t.replace("'", '"'))
    except json.JSONDecodeError:
        pass
    if t.startswith("[") and t.endswith("]"):
        return [_parse_value(v) for v in t[1:-1].split(",") if v.strip()]
    return t


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = _parse_value(val)
    return out


_SECTIONS = {"alm": AlmParams, "homotopy": HomotopyParams}
_EXTRA = {"sweep.b": "sweep_b", "sweep.L": "sweep_L", "sweep.snr_db": "sweep_snr_db",
          "sweep.seeds": "sweep_seeds", "ser.trials": "ser_trials",
          "oracle.seeds": "oracle_seeds", "oracle.budget": "oracle_budget",
          "out_dir": "out_dir"}


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def build_run_config(values: dict) -> RunConfig:
    sys_kw, sec_kw, extra = {}, {k: {} for k in _SECTIONS}, {}
    sys_fields = {f.name for f in dataclasses.fields(SystemConfig)}
    for key, val in values.items():
        if key in _EXTRA:
            extra[_EXTRA[key]] = val
            continue
        head, _, tail = key.partition(".")
        if tail and head in _SECTIONS:
            if tail not in {f.name for f in dataclasses.fields(_SECTIONS[head])}:
                raise ConfigError(f"unknown key {key!r}")
            if isinstance(val, list):
                val = tuple(val)
            sec_kw[head][tail] = val
        elif not tail and key in sys_fields:
            sys_kw[key] = val
        else:
            raise ConfigError(f"unknown key {key!r}")
    try:
        rc = RunConfig(system=SystemConfig(**sys_kw), alm=AlmParams(**sec_kw["alm"]),
                       homotopy=HomotopyParams(**sec_kw["homotopy"]))
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    for name, val in extra.items():
        if name.startswith("sweep_"):
            val = _as_list(val)
            if not val:
                raise ConfigError(f"{name.replace('_', '.', 1)} is empty")
        setattr(rc, name, val)
    if rc.ser_trials < 0:
        raise ConfigError("ser.trials must be >= 0")
    return rc


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return build_run_config(parse_config_text(text))


# --- output helpers --------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path: Path, header: list[str], rows, units: str):
    buf = io.StringIO()
    buf.write(f"# {units}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_text(buf.getvalue())


def write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n")


def write_waveform(path: Path, X: RealWaveform):
    Z = X.to_complex()
    rows = [(t, n, Z[n, t].real, Z[n, t].imag) for t in range(X.T) for n in range(X.N)]
    write_csv(path, ["t", "n", "re", "im"], rows,
              "t: slot index; n: antenna index; re, im: transmit sample (sqrt(W))")


def read_waveform(path, N: int, T: int) -> RealWaveform:
    Z = np.full((N, T), np.nan, dtype=complex)
    with open(path) as fh:
        rows = csv.DictReader(line for line in fh if not line.startswith("#"))
        for r in rows:
            Z[int(r["n"]), int(r["t"])] = float(r["re"]) + 1j * float(r["im"])
    if np.isnan(Z).any():
        raise ConfigError("waveform file does not cover every (t, n)")
    return RealWaveform.from_complex(Z)


# --- single solve ----------------------------------------------------------

def solve_point(rc: RunConfig, seed: int):
    inst = make_instance(rc.system, seed=seed)
    X, report = homotopy_solve(inst, rc.homotopy, rc.alm)
    return inst, X, report


def solver_objective(X, inst: Instance) -> float:
    w = apply_A(inst, np.asarray(X.data if isinstance(X, RealWaveform) else X))
    return f_value(w, inst.obj_scale) + g_value(w, inst.c, inst.obj_scale)


def run_solve(rc: RunConfig, seed: int, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    inst, X, rep = solve_point(rc, seed)
    t_solve = time.perf_counter() - t0
    bp = evaluate_beampattern(X, inst)
    write_csv(out / "beampattern.csv", ["theta_deg", "power", "power_db", "desired"],
              zip(inst.grid, bp.power, bp.power_db, inst.d),
              "theta_deg: degrees; power: linear (W per unit gain); power_db: dB; desired: 0/1")
    conv_cols = ["stage", "m", "objective", "viol_C", "viol_A", "cert_norm", "rho",
                 "inner_iters", "lambda_stage"]
    write_csv(out / "convergence.csv", conv_cols, ([r[c] for c in conv_cols] for r in rep.rows),
              "objective: augmented Lagrangian value; viol_C, viol_A, cert_norm: 2-norms; "
              "rho: rho_mu; inner_iters: count; lambda_stage: penalty weight")
    write_waveform(out / "waveform.csv", X)
    margins = safety_margins(X, inst)
    summary = dict(
        seed=seed, mse=bp.mse, alpha_star=bp.alpha_star, objective=solver_objective(X, inst),
        min_margin=float(margins.min()), ci_violations=rep.feasibility.n_violated,
        max_ci_violation=rep.feasibility.max_violation,
        infeasible=not rep.feasibility.feasible, converged=rep.converged,
        stage_converged=rep.stage_converged, vertex_converged=rep.vertex_converged,
        lambdas=rep.lambdas, outer_iterations=len(rep.rows),
        timings=dict(solve_s=t_solve))
    if rc.ser_trials:
        t1 = time.perf_counter()
        summary["ser"] = simulate_ser(X, inst, rc.system.noise_std, rc.ser_trials, seed=seed)
        summary["snr_db"] = rc.system.snr_db
        summary["timings"]["ser_s"] = time.perf_counter() - t1
    write_json(out / "summary.json", summary)
    return summary


# --- sweep -----------------------------------------------------------------

SWEEP_COLS = ["b", "L", "snr_db", "seed", "mse", "ser", "min_margin", "converged", "feasible"]


def _sweep_task(args):
    rc, b, L, snrs, seed = args
    sysc = dataclasses.replace(rc.system, margin_threshold=b, quant_levels=L)
    inst = make_instance(sysc, seed=seed)
    X, rep = homotopy_solve(inst, rc.homotopy, rc.alm)
    bp = evaluate_beampattern(X, inst)
    mm = float(safety_margins(X, inst).min())
    trials = rc.ser_trials or 10_000
    rows = []
    for snr in snrs:
        sigma = math.sqrt(10.0 ** (-snr / 10.0))
        ser = simulate_ser(X, inst, sigma, trials, seed=seed)
        rows.append([b, L, snr, seed, bp.mse, ser, mm, rep.converged, rep.feasibility.feasible])
    return rows


def sweep_tasks(rc: RunConfig, seed_offset: int = 0):
    if not (rc.sweep_b or rc.sweep_L or rc.sweep_snr_db or rc.sweep_seeds):
        raise ConfigError("sweep needs at least one non-empty axis")
    bs = rc.sweep_b or [rc.system.margin_threshold]
    Ls = rc.sweep_L or [rc.system.quant_levels]
    snrs = rc.sweep_snr_db or [rc.system.snr_db]
    seeds = rc.sweep_seeds or [rc.system.rng_seed]
    return [(rc, float(b), int(L), [float(s) for s in snrs], int(s) + seed_offset)
            for b, L, s in itertools.product(bs, Ls, seeds)]


def run_sweep(rc: RunConfig, out: Path, threads: int = 1, seed_offset: int = 0) -> list:
    out.mkdir(parents=True, exist_ok=True)
    tasks = sweep_tasks(rc, seed_offset)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            chunks = list(ex.map(_sweep_task, tasks))
    else:
        chunks = [_sweep_task(t) for t in tasks]
    rows = [r for c in chunks for r in c]
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    units = ("b: margin threshold (sqrt(W)); L: levels; snr_db: dB; mse: W^2; ser: fraction; "
             "min_margin: sqrt(W); converged, feasible: 0/1")
    write_csv(out / "tradeoff.csv", SWEEP_COLS, rows, units)
    groups = {}
    for r in rows:
        groups.setdefault((r[0], r[1], r[2]), []).append(r)
    mean_rows = []
    for (b, L, snr), g in sorted(groups.items()):
        a = np.array([[r[4], r[5], r[6], r[7], r[8]] for r in g], dtype=float)
        mean_rows.append([b, L, snr, len(g), *a.mean(axis=0)])
    write_csv(out / "tradeoff_mean.csv",
              ["b", "L", "snr_db", "n_seeds", "mse", "ser", "min_margin", "converged",
               "feasible"], mean_rows, units + "; means over seeds")
    return rows


# --- oracle check ----------------------------------------------------------

ORACLE_COLS = ["seed", "oracle_feasible", "oracle_objective", "homotopy_objective",
               "rel_gap", "homotopy_feasible", "n_feasible"]


def run_oracle_check(rc: RunConfig, out: Path, seed_offset: int = 0, gap_tol: float = 0.05,
                     pass_frac: float = 0.8, sound_tol: float = 1e-9) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    budget = EnumerationBudget(int(rc.oracle_budget))
    n = rc.system.n_antennas * rc.system.block_len
    budget.check(rc.system.quant_levels ** n)
    rows, n_close, n_feas, unsound = [], 0, 0, []
    for seed in range(seed_offset, seed_offset + int(rc.oracle_seeds)):
        inst = make_instance(rc.system, seed=seed)
        ex = exhaustive_solve(inst, budget)
        X, rep = homotopy_solve(inst, rc.homotopy, rc.alm)
        hval = solver_objective(X, inst)
        hfeas = rep.feasibility.feasible
        if ex.feasible:
            n_feas += 1
            gap = (hval - ex.objective) / max(abs(ex.objective), 1e-300)
            if hfeas and hval < ex.objective - sound_tol:
                unsound.append(seed)
            if hfeas and gap <= gap_tol:
                n_close += 1
        else:
            gap = math.nan
        rows.append([seed, ex.feasible, ex.objective, hval, gap, hfeas, ex.n_feasible])
    write_csv(out / "oracle_check.csv", ORACLE_COLS, rows,
              "objectives: scaled quartic objective (W^2); rel_gap: (homotopy - oracle)/|oracle|; "
              "feasible flags: 0/1")
    frac = n_close / n_feas if n_feas else math.nan
    summary = dict(n_seeds=len(rows), n_oracle_feasible=n_feas,
                   n_oracle_infeasible=len(rows) - n_feas, n_within_gap=n_close,
                   fraction_within_gap=frac, gap_tol=gap_tol, unsound_seeds=unsound,
                   sound=not unsound,
                   passed=bool(not unsound and n_feas and frac >= pass_frac))
    write_json(out / "oracle_summary.json", summary)
    return summary


# --- ser -------------------------------------------------------------------

def run_ser(rc: RunConfig, seed: int, waveform_path, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    inst = make_instance(rc.system, seed=seed)
    X = read_waveform(waveform_path, inst.N, inst.T)
    trials = rc.ser_trials or 10_000
    ser = simulate_ser(X, inst, rc.system.noise_std, trials, seed=seed)
    res = dict(seed=seed, snr_db=rc.system.snr_db, n_trials=trials, ser=ser,
               min_margin=float(safety_margins(X, inst).min()))
    write_json(out / "ser.json", res)
    return res


# --- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qce-dfrc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("solve", "sweep", "oracle-check", "ser"):
        sp = sub.add_parser(name)
        sp.add_argument("config")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out-dir", default=None)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "ser":
            sp.add_argument("--waveform", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = load_config(args.config)
        out = Path(args.out_dir or rc.out_dir)
        seed = rc.system.rng_seed if args.seed is None else args.seed
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.command == "solve":
            res = run_solve(rc, seed, out)
        elif args.command == "sweep":
            offset = 0 if args.seed is None else args.seed
            res = {"rows": len(run_sweep(rc, out, args.threads, offset))}
        elif args.command == "oracle-check":
            res = run_oracle_check(rc, out, 0 if args.seed is None else args.seed)
        else:
            res = run_ser(rc, seed, args.waveform, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    print(json.dumps(res, sort_keys=True, default=float))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
