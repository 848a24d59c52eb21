"""Batch command line front end.

Every experiment reads one YAML config (a JSON result file works too, its
``config`` echo is picked up), applies ``--set key=value`` overrides, runs,
and writes a CSV or JSON table.

    ladder-transfer rr-transfer config.yaml --set transfer.r=2 --output f.csv
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from importlib import metadata
from pathlib import Path
from typing import Any, Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, model_validator

from . import analysis, codec, models, transfer
from .lattice import SpinLattice

EXPERIMENTS = (
    "rr-transfer",
    "effective-transfer",
    "single-qubit",
    "bare-baseline",
    "haar-average",
    "epsilon",
    "sweep-r",
    "optimize",
    "ggm-curve",
    "high-energy-scan",
    "validate-couplings",
)
STOCHASTIC = {"haar-average"}


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# --- config schema ----------------------------------------------------------------


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LatticeConfig(_Section):
    N: int = Field(ge=2)
    L: int = Field(ge=2)
    bc_rung: Literal["open", "periodic"] = "open"
    bc_leg: Literal["open", "periodic"] = "open"


class ParamsConfig(_Section):
    u: float = 0.05
    v: float = 0.0
    dw: float = 0.0
    transfer_generator: Literal["full", "perturbation_only"] = "full"


class InputConfig(_Section):
    variant: Literal["low_energy", "xi_L2", "w_class_L3"] = "low_energy"
    a1: float = Field(0.0, ge=0.0, le=1.0)
    a2: float = 0.0
    b: float = 0.0
    theta: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    theta1: float = 0.0
    theta2: float = 0.0


Complex = float | tuple[float, float]


class QubitConfig(_Section):
    c0: Complex = 1.0
    c1: Complex = 0.0


class HaarConfig(_Section):
    n: int = Field(1000, ge=1)
    seed: int | None = None
    pipeline: Literal["rung", "effective"] = "rung"


class TransferConfig(_Section):
    i: int = Field(1, ge=1)
    r: int = Field(1, ge=1)
    r_range: list[int] | None = None
    projection_mode: Literal["normalized", "unnormalized"] = "normalized"


class ProtocolConfig(_Section):
    name: Literal["two_leg", "four_leg"] | None = None
    target_j: int = Field(1, ge=1)
    sender_j: int = Field(1, ge=1)


class GridConfig(_Section):
    t_max: float = Field(100.0, gt=0)
    dt: float = Field(0.1, gt=0)


class AxisConfig(_Section):
    name: str
    start: float
    stop: float
    num: int = Field(101, ge=1)

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


class ScanConfig(_Section):
    x: AxisConfig = AxisConfig(name="b", start=-1.0, stop=1.0)
    y: AxisConfig = AxisConfig(name="theta", start=0.0, stop=2 * np.pi)
    fixed: dict[str, float] = {}
    r: int = Field(2, ge=1)
    with_eps: bool = True


class OptimizeConfig(_Section):
    box: list[tuple[float, float]] = [(0.0, 0.1)] * 3
    grid_points: int = Field(5, ge=1)
    xatol: float = 1e-4
    fatol: float = 1e-7
    max_evaluations: int = 400


class SweepConfig(_Section):
    optimize: bool = False
    haar: bool = False


class GgmConfig(_Section):
    a1_num: int = Field(21, ge=2)
    a1_values: list[float] | None = None


class ValidateConfig(_Section):
    geometries: list[tuple[int, Literal["open", "periodic"]]] = [(2, "open"), (3, "open"), (4, "open"), (4, "periodic")]
    sizes: list[int] = [2, 3]


class OutputConfig(_Section):
    path: str | None = None
    format: Literal["csv", "json"] = "csv"


class Config(_Section):
    experiment: str | None = None
    lattice: LatticeConfig
    params: ParamsConfig = ParamsConfig()
    input: InputConfig = InputConfig()
    qubit: QubitConfig | None = None
    haar: HaarConfig | None = None
    transfer: TransferConfig = TransferConfig()
    protocol: ProtocolConfig = ProtocolConfig()
    grid: GridConfig = GridConfig()
    scan: ScanConfig = ScanConfig()
    optimize: OptimizeConfig = OptimizeConfig()
    sweep: SweepConfig = SweepConfig()
    ggm: GgmConfig = GgmConfig()
    validate_couplings: ValidateConfig = ValidateConfig()
    output: OutputConfig = OutputConfig()
    _threads: int | None = PrivateAttr(None)

    @model_validator(mode="after")
    def _known_experiment(self):
        if self.experiment is not None and self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        return self

    # conversions into library objects
    def build_lattice(self) -> SpinLattice:
        return SpinLattice(**self.lattice.model_dump())

    def build_params(self) -> models.ModelParams:
        return models.ModelParams(**self.params.model_dump())

    def build_input(self) -> transfer.RungInput:
        return transfer.RungInput(**self.input.model_dump())

    def build_qubit(self) -> codec.QubitInput:
        q = self.qubit or QubitConfig()
        return codec.QubitInput(_complex(q.c0), _complex(q.c1))

    def t_grid(self) -> np.ndarray:
        return transfer.default_t_grid(self.grid.t_max, self.grid.dt)


def _complex(c: Complex) -> complex:
    return complex(*c) if isinstance(c, tuple) else complex(c)


class ConfigError(ValueError):
    pass


def _format_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "invalid config:\n  " + "\n  ".join(lines)


def _set_path(d: dict, dotted: str, value: Any):
    keys = dotted.split(".")
    model: Any = Config
    for k in keys[:-1]:
        info = getattr(model, "model_fields", {}).get(k)
        default = info.default if info is not None else None
        model = type(default) if isinstance(default, BaseModel) else None
        node = d.get(k)
        if node is None:
            # start from the section defaults so sibling keys survive the override
            node = d[k] = default.model_dump() if isinstance(default, BaseModel) else {}
        elif not isinstance(node, dict):
            raise ConfigError(f"--set {dotted}: {k!r} is not a section")
        d = node
    d[keys[-1]] = value


def load_config(path: str | None, overrides: list[str] = (), text: str | None = None) -> Config:
    """Parse, override and validate a config. ``path='-'`` reads stdin."""
    if text is None:
        if path is None:
            raise ConfigError("no config file given")
        text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    if "config" in raw and "data" in raw:
        raw = raw["config"]  # a JSON result file
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        _set_path(raw, key.strip(), yaml.safe_load(value))
    try:
        return Config.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from exc


# --- experiments ------------------------------------------------------------------


def _haar_seed(cfg: Config, name: str) -> tuple[int, int]:
    haar = cfg.haar
    if haar is None or haar.seed is None:
        raise ConfigError(f"{name} is stochastic: pass --seed or set haar.seed")
    return haar.n, haar.seed


def _record_table(rec, column="f") -> dict:
    return {"t": rec.t_grid, column: rec.f_values}


def run_rr_transfer(cfg: Config):
    lat, p = cfg.build_lattice(), cfg.build_params()
    rec = transfer.rr_transfer(lat, p, cfg.build_input(), cfg.transfer.i, cfg.transfer.r, cfg.t_grid())
    f_m, t_star = transfer.max_fidelity(rec)
    return _record_table(rec), {"f_m": f_m, "t_star": t_star}


def run_effective_transfer(cfg: Config):
    lat, p = cfg.build_lattice(), cfg.build_params()
    rec = transfer.effective_transfer_for(
        lat, p, cfg.build_input(), cfg.transfer.i, cfg.transfer.r, cfg.t_grid(), cfg.transfer.projection_mode
    )
    return _record_table(rec, "f_eff"), {"couplings": models.couplings_for(lat, p).as_tuple()}


def _single_qubit(cfg: Config, pipeline: str):
    lat, p, pr = cfg.build_lattice(), cfg.build_params(), cfg.protocol
    if cfg.haar is not None:
        n, seed = _haar_seed(cfg, pipeline)
        avg = codec.haar_average_single_qubit(
            lat, p, cfg.transfer.r, pr.target_j, cfg.t_grid(), n, seed, pipeline, pr.name, pr.sender_j
        )
        return {"t": avg.t_grid, "mean_f": avg.mean_f}, {"mean_f_m": avg.mean_f_m, "t_star": avg.t_star, "seed": seed}
    q = cfg.build_qubit()
    if pipeline == "protocol":
        rec = codec.single_qubit_transfer(lat, p, q, cfg.transfer.r, pr.target_j, cfg.t_grid(), pr.name, pr.sender_j)
    else:
        rec = codec.bare_transfer_baseline(lat, p, q, cfg.transfer.r, pr.target_j, cfg.t_grid(), pr.sender_j)
    k = int(np.argmax(rec.f_values))
    return _record_table(rec), {"f_m": float(rec.f_values[k]), "t_star": float(rec.t_grid[k])}


def run_single_qubit(cfg: Config):
    return _single_qubit(cfg, "protocol")


def run_bare_baseline(cfg: Config):
    return _single_qubit(cfg, "bare")


def run_haar_average(cfg: Config):
    n, seed = _haar_seed(cfg, "haar-average")
    avg = transfer.haar_average(
        cfg.build_lattice(), cfg.build_params(), cfg.transfer.i, cfg.transfer.r, cfg.t_grid(), n, seed,
        cfg.haar.pipeline,
    )
    return {"t": avg.t_grid, "mean_f": avg.mean_f}, {"mean_f_m": avg.mean_f_m, "t_star": avg.t_star, "seed": seed}


def run_epsilon(cfg: Config):
    eps, rec = transfer.epsilon_records(
        cfg.build_lattice(), cfg.build_params(), cfg.build_input(), cfg.transfer.i, cfg.transfer.r,
        cfg.t_grid(), cfg.transfer.projection_mode,
    )
    table = {"t": rec.t_grid, "f": rec.f_values, "f_eff": rec.f_eff_values,
             "abs_diff": np.abs(rec.f_values - rec.f_eff_values)}
    return table, {"epsilon": eps}


def run_sweep_r(cfg: Config):
    haar = _haar_seed(cfg, "sweep-r with haar averages") if cfg.sweep.haar else None
    opt = cfg.optimize
    table = analysis.sweep_r(
        cfg.build_lattice(), cfg.build_params(), cfg.build_input(), cfg.transfer.r_range, cfg.t_grid(),
        haar=haar, optimize=cfg.sweep.optimize, i=cfg.transfer.i, threads=cfg._threads,
        **(dict(box=opt.box, grid_points=opt.grid_points, xatol=opt.xatol, fatol=opt.fatol,
                max_evaluations=opt.max_evaluations) if cfg.sweep.optimize else {}),
    )
    extra = {"spearman_f_m_r": analysis.spearman(table["r"], table["f_m"])} if len(table["r"]) > 1 else {}
    if haar:
        extra["seed"] = haar[1]
    return table, extra


def run_optimize(cfg: Config):
    opt = cfg.optimize
    res = analysis.optimize_fm(
        cfg.build_lattice(), cfg.build_input(), cfg.transfer.r, opt.box, opt.grid_points, cfg.t_grid(),
        cfg.transfer.i, cfg.build_params(), opt.xatol, opt.fatol, opt.max_evaluations, cfg._threads,
    )
    table = {
        "r": [cfg.transfer.r], "f_tilde": [res.f_tilde], "u": [res.x[0]], "v": [res.x[1]], "dw": [res.x[2]],
        "t_star": [res.t_star], "f_reference": [res.f_reference],
    }
    return table, {"n_evaluations": res.n_evaluations, "converged": res.converged}


def run_ggm_curve(cfg: Config):
    g = cfg.ggm
    grid = g.a1_values if g.a1_values is not None else np.linspace(0.0, 1.0, g.a1_num)
    return analysis.ggm_curve(cfg.lattice.L, cfg.lattice.bc_rung, grid), {}


def run_high_energy_scan(cfg: Config):
    s = cfg.scan
    res = analysis.high_energy_scan(
        cfg.build_lattice(), cfg.build_params(), (s.x.name, s.x.values()), (s.y.name, s.y.values()),
        cfg.input.a1, cfg.input.a2, s.fixed, s.r, cfg.t_grid(), s.with_eps, cfg._threads,
    )
    return res.table(), {"fixed": res.fixed}


def run_validate_couplings(cfg: Config):
    p = cfg.build_params()
    rows: dict[str, list] = {k: [] for k in ("L", "bc_rung", "N", "Jxy", "Jzz", "h", "h_boundary",
                                              "max_abs_diff", "fit_residual")}
    for L, bc in cfg.validate_couplings.geometries:
        for N in cfg.validate_couplings.sizes:
            lat = SpinLattice(N, L, bc, "open")
            fit = models.fit_xxz(models.projected_hamiltonian_oracle(lat, p), N, "open")
            closed = models.effective_couplings(L, bc, p.u, p.v, p.dw)
            got, want = np.array(fit.couplings.as_tuple()), np.array(closed.as_tuple())
            if N == 2:  # only h + h_boundary is identifiable on two rungs
                want = np.array([want[0], want[1], want[2] + want[3], 0.0])
            for k, val in zip(rows, (L, bc, N, *got, float(np.max(np.abs(got - want))), fit.residual)):
                rows[k].append(val)
    return rows, {"max_abs_diff": float(max(rows["max_abs_diff"]))}


RUNNERS = {
    "rr-transfer": run_rr_transfer,
    "effective-transfer": run_effective_transfer,
    "single-qubit": run_single_qubit,
    "bare-baseline": run_bare_baseline,
    "haar-average": run_haar_average,
    "epsilon": run_epsilon,
    "sweep-r": run_sweep_r,
    "optimize": run_optimize,
    "ggm-curve": run_ggm_curve,
    "high-energy-scan": run_high_energy_scan,
    "validate-couplings": run_validate_couplings,
}


# --- persistence -------------------------------------------------------------------


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def to_csv(table: dict) -> str:
    cols = list(table)
    n = len(next(iter(table.values()))) if cols else 0
    if any(len(v) != n for v in table.values()):
        raise ValueError("table columns differ in length")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for k in range(n):
        w.writerow([_cell(table[c][k]) for c in cols])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def to_json(cfg: Config, table: dict, meta: dict) -> str:
    doc = {"config": cfg.model_dump(mode="json"), "data": _jsonable(table), "metadata": _jsonable(meta)}
    return json.dumps(doc, indent=2) + "\n"


def execute(cfg: Config, experiment: str, threads: int | None = None) -> tuple[dict, dict]:
    """Run an experiment; returns ``(table, metadata)``."""
    cfg = cfg.model_copy(update={"experiment": experiment})
    cfg._threads = threads
    start = time.perf_counter()
    table, extra = RUNNERS[experiment](cfg)
    meta = {
        "tool_version": tool_version(),
        "experiment": experiment,
        "seed": cfg.haar.seed if cfg.haar is not None else None,
        "wall_time": time.perf_counter() - start,
        **extra,
    }
    return table, meta


# --- argument parsing --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ladder-transfer", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {tool_version()}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="YAML config or JSON result file ('-' for stdin)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key, e.g. --set lattice.N=10 (repeatable)")
    common.add_argument("--seed", type=int, help="random seed for Haar sampling (required when sampling)")
    common.add_argument("--threads", type=int, default=None, help="worker threads for grid evaluations")
    common.add_argument("--output", "-o", help="output path (default: config output.path, else stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format (default: config output.format)")
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    sub.add_parser("run", parents=[common], help="run the experiment named by the config's 'experiment' key")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = list(args.overrides)
        if args.seed is not None:
            overrides.append(f"haar.seed={args.seed}")
        cfg = load_config(args.config, overrides)
        experiment = cfg.experiment if args.command == "run" else args.command
        if experiment is None:
            raise ConfigError("experiment: required for 'run'")
        if experiment in STOCHASTIC and cfg.haar is None:
            raise ConfigError(f"{experiment} is stochastic: pass --seed or set haar.seed")
        table, meta = execute(cfg, experiment, args.threads)
        fmt = args.format or cfg.output.format
        text = to_csv(table) if fmt == "csv" else to_json(cfg.model_copy(update={"experiment": experiment}), table, meta)
        path = args.output or cfg.output.path
        if path and path != "-":
            Path(path).write_text(text, encoding="utf-8")
        else:
            try:
                sys.stdout.write(text)
                sys.stdout.flush()
            except BrokenPipeError:
                pass
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, models.NoEffectiveQubit, codec.UnsupportedProtocol) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
