"""Command-line driver: load a JSON run config, run one experiment mode, write artifacts.

Config schema (SI units; every key optional unless noted)::

    {
      "mode": "thermal-run",               # or pass --mode
      "params": "paper" | "file.json" | {ExperimentParams fields},
      "A_scale": 1.0,                      # multiplies the derived A
      "schedule": {"intervals_pi": [1.0], "labels": [1]},   # or "intervals" in s
      "initial": {"kind": "thermal"} | {"kind": "coherent", "a0": 1, "b0": 1},
      "grid": {"nq": 201, "nk": 201},
      "sweep": {"A_scale": [0.01, 0.1, 1.0]},
      "oracle": {"nbar": 1.0, "kappa": 1.2, "larmor": 0.37, "n_max": 80},
      "scan": {"t_min_pi": 0.02, "t_max_pi": 2.0, "step_pi": 0.02},
      "deterministic": false,
      "workers": 1
    }

Output files are named ``<mode>_<outcomes>_<hash>.<ext>`` where ``outcomes``
spells the F_y labels with p/z/m for +1/0/-1 and ``hash`` is taken over the
resolved config, so sweeps never collide.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import coherent as coh
from . import oracle as orc
from . import thermal as th
from .functionals import MeasurementSchedule, dump_functionals_csv
from .grid import GridSpec, _jsonable
from .params import PAPER_PARAMS, DerivedParams, PhysicalConstants, derive_params, load_params, params_from_dict, visibility_ratio

MODES = ("derive", "thermal-run", "coherent-run", "sweep", "oracle-compare", "negativity-scan")
EXIT_OK, EXIT_CONFIG, EXIT_CAP, EXIT_ORACLE = 0, 2, 3, 4
TABLE_MAX_N = 4  # full 3**n outcome tables are emitted up to this many measurements
ORACLE_TOL = 1e-8
ORACLE_GRID_TOL = 1e-6


class ConfigError(ValueError):
    pass


class OracleFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    mode: str
    params: object = "paper"
    A_scale: float = 1.0
    intervals: tuple = ()
    labels: tuple = ()
    initial: dict = field(default_factory=lambda: {"kind": "thermal"})
    nq: int = 201
    nk: int = 201
    sweep: tuple = ()
    oracle: dict = field(default_factory=dict)
    scan: dict = field(default_factory=dict)
    out: str = "."
    deterministic: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}")
        if not isinstance(self.initial, dict) or not isinstance(self.oracle, dict) or not isinstance(self.scan, dict):
            raise ConfigError("initial, oracle and scan must be JSON objects")
        labels_needed = self.mode != "oracle-compare" or self.labels
        if labels_needed and len(self.intervals) != len(self.labels):
            raise ConfigError("schedule needs one label per interval")
        if any(not (math.isfinite(t) and t > 0) for t in self.intervals):
            raise ConfigError("schedule intervals must be positive")
        if any(lab not in (1, 0, -1) for lab in self.labels):
            raise ConfigError("labels must be F_y outcomes in {+1, 0, -1}")
        if self.mode in ("thermal-run", "coherent-run", "sweep", "oracle-compare") and not self.intervals:
            raise ConfigError(f"mode {self.mode} needs a schedule")
        if self.mode == "negativity-scan" and len(self.labels) != 1:
            raise ConfigError("negativity-scan needs exactly one outcome label")
        if self.mode == "sweep" and not self.sweep:
            raise ConfigError("sweep needs a list of A scales")
        if self.initial.get("kind") not in ("thermal", "coherent"):
            raise ConfigError("initial.kind must be 'thermal' or 'coherent'")
        if self.mode in ("coherent-run", "negativity-scan") and self.initial.get("kind") != "coherent":
            raise ConfigError(f"mode {self.mode} needs a coherent initial state")
        if self.nq < 2 or self.nk < 2:
            raise ConfigError("grid needs at least two points per axis")
        if not (math.isfinite(self.A_scale) and self.A_scale >= 0):
            raise ConfigError("A_scale must be non-negative")

    def identity(self) -> dict:
        """Everything that affects results (the output directory does not)."""
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True, default=_jsonable)
        return hashlib.sha256(blob.encode()).hexdigest()[:10]


def _outcome_tag(labels) -> str:
    return "".join({1: "p", 0: "z", -1: "m"}[int(v)] for v in labels) or "none"


def config_from_dict(data: dict, base_dir: Path | None = None, **overrides) -> RunConfig:
    data = dict(data)
    known = {"mode", "params", "A_scale", "schedule", "initial", "grid", "sweep", "oracle", "scan", "deterministic", "workers", "out"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    sched = data.pop("schedule", {}) or {}
    if "intervals" in sched and "intervals_pi" in sched:
        raise ConfigError("give either intervals (s) or intervals_pi, not both")
    kw = {}
    params = data.get("params", "paper")
    if isinstance(params, str) and params != "paper" and base_dir is not None:
        params = str((base_dir / params).resolve())
    kw["params"] = params
    try:
        omega = _experiment(params).omega_m
        if "intervals_pi" in sched:
            kw["intervals"] = tuple(math.pi * float(f) / omega for f in sched["intervals_pi"])
        else:
            kw["intervals"] = tuple(float(t) for t in sched.get("intervals", ()))
        kw["labels"] = tuple(int(v) for v in sched.get("labels", ()))
        grid = data.get("grid", {}) or {}
        kw["nq"], kw["nk"] = int(grid.get("nq", 201)), int(grid.get("nk", 201))
        sweep = data.get("sweep", {}) or {}
        kw["sweep"] = tuple(float(v) for v in sweep.get("A_scale", ()))
        kw["A_scale"] = float(data.get("A_scale", 1.0))
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    for key in ("mode", "initial", "oracle", "scan", "deterministic", "workers", "out"):
        if key in data:
            kw[key] = data[key]
    kw.update({k: v for k, v in overrides.items() if v is not None})
    if "mode" not in kw:
        raise ConfigError("no mode given (config key 'mode' or --mode)")
    return RunConfig(**kw)


def _experiment(params):
    try:
        if isinstance(params, str):
            return PAPER_PARAMS if params == "paper" else load_params(params)
        if isinstance(params, dict):
            return params_from_dict(params)
    except (OSError, json.JSONDecodeError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad params: {exc}") from exc
    raise ConfigError("params must be 'paper', a file path or an object")


def derived_for(cfg: RunConfig) -> DerivedParams:
    d = derive_params(PhysicalConstants(), _experiment(cfg.params))
    return d if cfg.A_scale == 1.0 else d.with_A(cfg.A_scale * d.A)


def _schedule(cfg: RunConfig, d: DerivedParams) -> MeasurementSchedule:
    return MeasurementSchedule(cfg.intervals, cfg.labels, d.omega_m)


def _init(cfg: RunConfig) -> coh.CoherentInit:
    try:
        return coh.CoherentInit(float(cfg.initial.get("a0", 0.0)), float(cfg.initial.get("b0", 0.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _table_json(table: dict) -> dict:
    return {",".join(f"{v:+d}" for v in k): p for k, p in table.items()}


class Runner:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.digest = cfg.digest()
        self.written: list[Path] = []

    def stem(self, labels=None, suffix: str = "") -> Path:
        labels = self.cfg.labels if labels is None else labels
        return self.out / f"{self.cfg.mode}_{_outcome_tag(labels)}_{self.digest}{suffix}"

    def base_summary(self, d: DerivedParams) -> dict:
        return {
            "mode": self.cfg.mode,
            "config": self.cfg.identity(),
            "derived": d.to_dict(),
            "visibility_ratio": visibility_ratio(d),
            "schedule": {"intervals": list(self.cfg.intervals), "labels": list(self.cfg.labels)},
        }

    def write_json(self, path: Path, data: dict) -> Path:
        path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n")
        self.written.append(path)
        return path

    def grid(self, base: GridSpec) -> GridSpec:
        return base.with_shape(self.cfg.nq, self.cfg.nk)

    # -- modes --------------------------------------------------------------

    def derive(self):
        d = derived_for(self.cfg)
        summary = self.base_summary(d)
        summary.update({"kappa": d.kappa, "larmor": d.larmor, "delta": d.delta, "nbar": d.nbar})
        self.write_json(self.stem().with_suffix(".json"), summary)

    def thermal_run(self):
        d = derived_for(self.cfg)
        sch = _schedule(self.cfg, d)
        th.check_cap(sch.n)
        stem = self.stem()
        summary = self.base_summary(d)
        summary["moments"] = th.moments(d, sch)
        summary["probability"] = summary["moments"]["probability"]
        if sch.n <= TABLE_MAX_N:
            table = th.outcome_table(d, sch.intervals)
            summary["outcome_probabilities"] = _table_json(table)
            summary["outcome_probability_total"] = sum(table.values())
        grid = self.grid(th.default_grid(d, th._table(d, sch, th.MAX_MEASUREMENTS)))
        W = th.wigner_post(d, sch, grid, deterministic=self.cfg.deterministic, workers=self.cfg.workers)
        self.written += list(W.write(stem, **summary))
        self.written.append(dump_functionals_csv(sch, self.stem(suffix="_functionals").with_suffix(".csv")))

    def coherent_run(self):
        d = derived_for(self.cfg)
        sch = _schedule(self.cfg, d)
        init = _init(self.cfg)
        state = coh.evolve_coherent(d, sch, init)
        summary = self.base_summary(d)
        summary["initial"] = {"a0": init.a0, "b0": init.b0}
        summary["probability"] = state.probability
        summary["A_over_A0"] = self.cfg.A_scale
        if sch.n <= TABLE_MAX_N:
            table = coh.outcome_table(d, sch.intervals, init)
            summary["outcome_probabilities"] = _table_json(table)
            summary["outcome_probability_total"] = sum(table.values())
        W = coh._state_wigner(d, state, self.grid(coh.default_grid(state, init)), self.cfg.deterministic)
        summary["min_w"] = W.min()
        summary["purity"] = W.purity()
        self.written += list(W.write(self.stem(), **summary))
        self.written.append(coh.write_branch_table(state, self.stem(suffix="_branches").with_suffix(".csv")))

    def sweep(self):
        base = derived_for(replace(self.cfg, A_scale=1.0))
        sch = _schedule(self.cfg, base)
        rows = []
        for i, scale in enumerate(self.cfg.sweep):
            d = base.with_A(scale * base.A)
            if self.cfg.initial.get("kind") == "coherent":
                init = _init(self.cfg)
                state = coh.evolve_coherent(d, sch, init)
                W = coh._state_wigner(d, state, self.grid(coh.default_grid(state, init)), self.cfg.deterministic)
                row = {"probability": state.probability, "min_w": W.min()}
            else:
                th.check_cap(sch.n)
                grid = th.fringe_resolving_grid(d, sch)
                grid = grid.with_shape(max(grid.nq, self.cfg.nq), max(grid.nk, self.cfg.nk))
                W = th.wigner_post(d, sch, grid, deterministic=self.cfg.deterministic, workers=self.cfg.workers)
                row = {"probability": W.meta["probability"], "fringe_amplitude": th.fringe_amplitude(W)}
            row.update({"A_scale": scale, "A": d.A, "kappa": d.kappa, "visibility_ratio": visibility_ratio(d)})
            csv_path, json_path = W.write(self.stem(suffix=f"_{i:03d}"), **row)
            self.written += [csv_path, json_path]
            row["grid"] = csv_path.name
            rows.append(row)
        summary = self.base_summary(base)
        summary["sweep"] = rows
        self.write_json(self.stem().with_suffix(".json"), summary)

    def negativity_scan(self):
        d = derived_for(self.cfg)
        init = _init(self.cfg)
        sc = self.cfg.scan
        lo, hi, step = float(sc.get("t_min_pi", 0.02)), float(sc.get("t_max_pi", 2.0)), float(sc.get("step_pi", 0.02))
        if not (0 < lo <= hi and step > 0):
            raise ConfigError("scan needs 0 < t_min_pi <= t_max_pi and step_pi > 0")
        n = int(round((hi - lo) / step)) + 1
        ts = [math.pi * (lo + i * step) / d.omega_m for i in range(n)]
        scan = coh.negativity_scan(d, init, self.cfg.labels[0], ts, grid_points=int(sc.get("grid_points", 121)))
        path = self.stem().with_suffix(".csv")
        with path.open("w") as fh:
            fh.write("t,t_over_pi_per_omega,min_w\n")
            for t, m in scan:
                fh.write(f"{t!r},{t * d.omega_m / math.pi!r},{m!r}\n")
        self.written.append(path)
        summary = self.base_summary(d)
        summary["initial"] = {"a0": init.a0, "b0": init.b0}
        summary["threshold"] = coh.NEGATIVITY_THRESHOLD
        summary["windows_pi"] = [[a * d.omega_m / math.pi, b * d.omega_m / math.pi] for a, b in coh.negative_windows(scan)]
        self.write_json(self.stem().with_suffix(".json"), summary)

    def oracle_compare(self):
        report = oracle_report(self.cfg)
        base = derived_for(self.cfg)
        summary = self.base_summary(base)
        summary.update(report)
        self.write_json(self.stem().with_suffix(".json"), summary)
        if not report["pass"]:
            raise OracleFailure(f"engine/oracle mismatch: {report['max_abs_diff']:.3e}")

    def run(self):
        getattr(self, self.cfg.mode.replace("-", "_"))()
        return self.written


def scaled_params(cfg: RunConfig) -> DerivedParams:
    o = cfg.oracle
    d = derived_for(cfg)
    try:
        d = d.with_kappa(float(o.get("kappa", 1.0)))
        d = d.with_nbar(float(o.get("nbar", 1.0)))
        d = d.with_larmor(float(o.get("larmor", 0.5)) * d.omega_m)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return d


def oracle_report(cfg: RunConfig, grid_points: int = 41) -> dict:
    """Compare engine and truncated-Fock oracle for every outcome of the schedule."""
    d = scaled_params(cfg)
    kind = cfg.initial.get("kind", "thermal")
    fcfg = orc.FockConfig(n_max=int(cfg.oracle.get("n_max", 80)))
    init = _init(cfg) if kind == "coherent" else None
    intervals = list(cfg.intervals)
    try:
        run = orc.run_schedule_oracle(d, intervals, initial=kind, coherent=(init.a0, init.b0) if init else (0.0, 0.0),
                                      cfg=fcfg if kind == "coherent" or "n_max" in cfg.oracle else None)
    except orc.TruncationError as exc:
        raise OracleFailure(str(exc)) from exc
    width = math.sqrt(d.coth_eta)
    q = np.linspace(-4 * width - 2, 4 * width + 2, 25)
    diffs = {"probability": 0.0, "density_matrix": 0.0, "wigner_rel": 0.0}
    for seq, out in run.outcomes.items():
        sch = MeasurementSchedule(tuple(intervals), seq, d.omega_m)
        if kind == "thermal":
            p = th.outcome_probability(d, sch)
            if out.probability < 1e-12:
                diffs["probability"] = max(diffs["probability"], abs(p - out.probability))
                continue
            rho = th.reduced_density_matrix(d, sch, q)
            grid = th.default_grid(d, th._table(d, sch, th.MAX_MEASUREMENTS), grid_points, grid_points, 4.0)
            W = th.wigner_post(d, sch, grid)
        else:
            state = coh.evolve_coherent(d, sch, init)
            p = state.probability
            if out.probability < 1e-12:
                diffs["probability"] = max(diffs["probability"], abs(p - out.probability))
                continue
            rho = state.reduced_density_matrix(q)
            grid = coh.default_grid(state, init, grid_points, grid_points, 5.0)
            W = coh._state_wigner(d, state, grid)
        rho_o = orc.fock_to_position(out.rho, q)
        Wo = orc.wigner_numeric(out.rho, grid)
        diffs["probability"] = max(diffs["probability"], abs(p - out.probability))
        diffs["density_matrix"] = max(diffs["density_matrix"], float(np.abs(rho - rho_o).max()))
        diffs["wigner_rel"] = max(diffs["wigner_rel"], float(np.abs(W.values - Wo.values).max() / np.abs(Wo.values).max()))
    max_abs = max(diffs["probability"], diffs["density_matrix"])
    ok = max_abs <= ORACLE_TOL and diffs["wigner_rel"] <= ORACLE_GRID_TOL
    return {
        "scaled": {"kappa": d.kappa, "nbar": d.nbar, "larmor": d.larmor, "initial": kind, "fock_dim": run.dim},
        "diffs": diffs,
        "max_abs_diff": max_abs,
        "oracle_total_probability": run.total_probability,
        "pass": bool(ok),
        "verdict": "PASS" if ok else "FAIL",
    }


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="backaction", description="Measurement-backaction simulations of a magnetised membrane.")
    p.add_argument("--config", type=Path, help="JSON run config")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--out", help="output directory (default: config value or .)")
    p.add_argument("--grid", help="grid shape NX,NP")
    p.add_argument("--sweep", help="comma-separated A scales (multiples of the derived A)")
    p.add_argument("--deterministic", action="store_true", default=None,
                   help="fixed-order reductions for byte-identical output")
    return p


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"--grid expects NX,NP, got {text!r}") from exc
    return a, b


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        data, base = {}, None
        if args.config is not None:
            try:
                data = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError("config must be a JSON object")
            base = args.config.parent
        over = {"mode": args.mode, "out": args.out, "deterministic": args.deterministic}
        if args.grid:
            over["nq"], over["nk"] = _parse_pair(args.grid)
        if args.sweep:
            try:
                over["sweep"] = tuple(float(v) for v in args.sweep.split(","))
            except ValueError as exc:
                raise ConfigError(f"bad --sweep list: {args.sweep!r}") from exc
        cfg = config_from_dict(data, base, **over)
        written = Runner(cfg).run()
    except th.CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as exc:  # ConfigError and schema violations raised by the dataclasses
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleFailure as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
