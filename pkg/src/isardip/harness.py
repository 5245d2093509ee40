"""Experiment runner: mask -> complete -> image -> score over a parameter grid.

Config files are INI-style (``configparser``)::

    [experiment]
    methods = zero-fill, nnm, ialm, dip
    scenarios = pixel, column
    ratios = 0.3, 0.5, 0.7
    seeds = 0, 1, 2
    noise_snr_db =            ; optional, e.g. 0, 30
    output_dir = results
    top_db = 20
    input =                   ; CISR file; empty -> simulate [scene]

    [scene]
    rows = 64
    cols = 64
    scatterers = 5
    extent = 8
    seed = 0

    [solver]                  ; SolverConfig fields
    max_iters = 10000
    tol = 1e-5

    [dip]                     ; DipConfig / NetworkConfig fields
    max_iters = 3000
    channels = 32, 16, 16, 16, 16, 32
    skip_channels = 16

Outputs in ``output_dir``: ``results.csv`` (one row per cell, fixed column
order; noisy cells get a ``@<snr>dB`` scenario suffix), ``errors.csv``
(failed cells), ``summary.csv`` (median over seeds), ``timing.csv``,
``reference.pgm`` and per-cell artifact folders under ``cells/``.
"""

from __future__ import annotations

import configparser
import csv
import io as _io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import io as fio
from .dip import DipConfig, EarlyStop, dip_complete_complex
from .lowrank import SolverConfig, complete_ialm, complete_nnm
from .metrics import CSV_COLUMNS, MetricsReport, add_noise, score_images, snr_db
from .neural import NetworkConfig
from .radar import default_params, random_scene, rd_image, simulate_echo, to_db_image
from .sampling import (KINDS, apply_mask, gen_mask, invert_pretransform, merge_complex,
                       pretransform, split_complex)

log = logging.getLogger(__name__)

METHODS = ("zero-fill", "nnm", "ialm", "dip")
SUMMARY_COLUMNS = ("method", "scenario", "ratio", "noise_snr_db", "n", "rmse",
                   "correlation", "contrast", "flagged")


class ConfigError(ValueError):
    pass


@dataclass
class SceneSpec:
    rows: int = 64
    cols: int = 64
    scatterers: int = 5
    extent: int | None = 8
    seed: int = 0

    def echo(self) -> np.ndarray:
        scene = random_scene(default_params(self.rows, self.cols), self.scatterers,
                             self.seed, self.extent)
        return simulate_echo(scene)


@dataclass
class ExperimentConfig:
    methods: list[str]
    scenarios: list[str]
    ratios: list[float]
    seeds: list[int]
    output_dir: Path = Path("results")
    noise_snr_db: list[float] | None = None
    input_path: Path | None = None
    scene: SceneSpec = field(default_factory=SceneSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    dip: DipConfig = field(default_factory=DipConfig)
    top_db: float = 20.0
    shift: bool = True

    def __post_init__(self):
        for name in ("methods", "scenarios", "ratios", "seeds"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be non-empty")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ConfigError(f"unknown methods: {sorted(bad)}")
        bad = set(self.scenarios) - set(KINDS)
        if bad:
            raise ConfigError(f"unknown scenarios: {sorted(bad)}")
        if any(not 0 <= r < 1 for r in self.ratios):
            raise ConfigError("ratios must lie in [0, 1)")
        self.output_dir = Path(self.output_dir)

    def load_data(self) -> np.ndarray:
        if self.input_path is not None:
            return fio.load_matrix(self.input_path)
        return self.scene.echo()


# config parsing ----------------------------------------------------------------

def _list(value: str, conv) -> list:
    return [conv(v.strip()) for v in value.split(",") if v.strip()]


def _coerce(dc_type, section: configparser.SectionProxy, skip=()):
    kwargs = {}
    for f in fields(dc_type):
        if f.name in skip or f.name not in section:
            continue
        raw = section[f.name].strip()
        default = f.default
        if raw.lower() in ("", "none", "auto", "full"):
            kwargs[f.name] = None
        elif f.name == "channels":
            kwargs[f.name] = tuple(_list(raw, int))
        elif isinstance(default, bool):
            kwargs[f.name] = section.getboolean(f.name)
        elif isinstance(default, int):
            kwargs[f.name] = int(float(raw))
        elif isinstance(default, str):
            kwargs[f.name] = raw
        else:
            kwargs[f.name] = float(raw)
    return kwargs


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    ex = cp["experiment"]
    base_dir = Path(base_dir) if base_dir else Path(".")
    try:
        noise = _list(ex.get("noise_snr_db", ""), float) or None
        input_path = ex.get("input", "").strip()
        scene = SceneSpec(**_coerce(SceneSpec, cp["scene"])) if "scene" in cp else SceneSpec()
        solver = SolverConfig(**_coerce(SolverConfig, cp["solver"])) if "solver" in cp else SolverConfig()
        dip = DipConfig()
        if "dip" in cp:
            sec = cp["dip"]
            net_kw = _coerce(NetworkConfig, sec)
            if "channels" in net_kw and "depth" not in net_kw:
                net_kw["depth"] = len(net_kw["channels"])
            net = NetworkConfig(**net_kw)
            es = EarlyStop(**_coerce(EarlyStop, sec))
            dip = DipConfig(net=net, early_stop=es, **_coerce(DipConfig, sec, skip=("net", "early_stop")))
        out_dir = Path(ex.get("output_dir", "results").strip())
        return ExperimentConfig(
            methods=_list(ex.get("methods", ""), str),
            scenarios=_list(ex.get("scenarios", ""), str),
            ratios=_list(ex.get("ratios", ""), float),
            seeds=_list(ex.get("seeds", ""), int),
            output_dir=out_dir if out_dir.is_absolute() else base_dir / out_dir,
            noise_snr_db=noise,
            input_path=(base_dir / input_path) if input_path else None,
            scene=scene, solver=solver, dip=dip,
            top_db=ex.getfloat("top_db", 20.0),
            shift=ex.getboolean("shift", True),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


# single cell -------------------------------------------------------------------

def complete(method: str, M_obs: np.ndarray, mask, solver: SolverConfig, dip: DipConfig,
             seed: int = 0):
    """Run one completion method; returns ``(Z, iterations, converged, extras)``."""
    if method == "zero-fill":
        return apply_mask(M_obs, mask), 0, True, {}
    if method == "ialm":
        r = complete_ialm(M_obs, mask, solver)
        return r.Z, r.iterations, r.converged, {}
    if method == "nnm":
        perm = None
        work, wmask = M_obs, mask
        if mask.kind in ("column", "compressed"):
            work, wmask, perm = pretransform(M_obs, mask, seed)
        re, im = split_complex(work)
        parts = []
        for p in (re, im):
            if np.any(np.where(wmask.observed, p, 0.0)):
                parts.append(complete_nnm(p, wmask, solver))
            else:
                parts.append(None)
        Zs = [np.zeros(work.shape) if r is None else r.Z for r in parts]
        Z = merge_complex(*Zs)
        if perm is not None:
            Z = invert_pretransform(Z, perm)
        its = sum(r.iterations for r in parts if r is not None)
        conv = all(r.converged for r in parts if r is not None)
        return Z, its, conv, {}
    if method == "dip":
        cfg = DipConfig(**{**dip.__dict__, "seed": seed})
        Z, traces = dip_complete_complex(M_obs, mask, cfg)
        its = sum(len(t) for t in traces)
        conv = all(t.stopped_early or t.degenerate for t in traces)
        return Z, its, conv, {"traces": traces}
    raise ValueError(f"unknown method {method!r}")


def cell_name(method, scenario, ratio, seed, noise=None) -> str:
    name = f"{method}_{scenario}_{ratio:g}_s{seed}"
    return name if noise is None else f"{name}_snr{noise:g}"


def run_cell(M_full: np.ndarray, method: str, scenario: str, ratio: float, seed: int,
             solver: SolverConfig | None = None, dip: DipConfig | None = None,
             noise_snr_db: float | None = None, out_dir=None, top_db: float = 20.0,
             shift: bool = True, deterministic: bool = False):
    """Score one (method, scenario, ratio, seed[, noise]) cell.

    Solver failures are recorded on the report instead of raised. Returns
    ``(report, artifacts)`` where artifacts holds the completed matrix and
    both images.
    """
    solver = solver or SolverConfig()
    dip = dip or DipConfig()
    rows, cols = M_full.shape
    report = MetricsReport(method, scenario, float(ratio), int(seed))
    ref_img = rd_image(M_full)
    artifacts = {"reference_image": ref_img}
    t0 = time.perf_counter()
    try:
        mask = gen_mask(scenario, ratio, rows, cols, seed)
        data = M_full if noise_snr_db is None else add_noise(M_full, noise_snr_db, seed)
        M_obs = apply_mask(data, mask)
        Z, its, conv, extras = complete(method, M_obs, mask, solver, dip, seed)
        report.runtime_s = time.perf_counter() - t0
        report.iterations, report.converged = int(its), bool(conv)
        if not np.all(np.isfinite(Z)):
            raise FloatingPointError("non-finite completion")
        est_img = rd_image(Z)
        artifacts.update(completed=Z, image=est_img, mask=mask, **extras)
        if np.any(est_img):
            s = score_images(ref_img, est_img)
            report.rmse, report.correlation, report.contrast = s["rmse"], s["correlation"], s["contrast"]
        else:
            report.rmse = 1.0
        report.snr_db = snr_db(M_full, Z)
    except Exception as exc:  # noqa: BLE001 - recorded on the row, grid continues
        log.warning("cell %s failed: %s", cell_name(method, scenario, ratio, seed, noise_snr_db), exc)
        report.runtime_s = time.perf_counter() - t0
        report.converged = False
        report.error = f"{type(exc).__name__}: {exc}"
    if deterministic:
        artifacts["runtime_s"] = report.runtime_s
        report.runtime_s = 0.0
    if out_dir is not None and "completed" in artifacts:
        _write_cell(Path(out_dir), artifacts, top_db, shift, deterministic)
    return report, artifacts


def _display(img, shift):
    return np.fft.fftshift(img) if shift else img


def _write_cell(d: Path, art: dict, top_db: float, shift: bool, deterministic: bool) -> None:
    d.mkdir(parents=True, exist_ok=True)
    fio.save_matrix(art["completed"], d / "completed.cisr")
    fio.save_mask(art["mask"], d / "mask.imsk")
    if np.any(art["image"]):
        render_figure([to_db_image(_display(art["image"], shift), top_db)], ["image"], d, top_db)
    for part, tr in zip(("re", "im"), art.get("traces", ())):
        tr.write_csv(d / f"trace_{part}.csv", deterministic)


def render_figure(images, names, out_dir, top_db: float = 20.0) -> list[Path]:
    """Write each dB panel as an 8-bit PGM, ``[-top_db, 0]`` mapped to ``[0, 255]``."""
    if len(images) != len(names):
        raise ValueError("one name per panel required")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for img, name in zip(images, names):
        p = out_dir / f"{name}.pgm"
        fio.write_pgm(fio.db_to_gray(img, top_db), p)
        paths.append(p)
    return paths


# grid ---------------------------------------------------------------------------

def _grid(cfg: ExperimentConfig):
    noises = cfg.noise_snr_db or [None]
    for noise in noises:
        for scenario in cfg.scenarios:
            for ratio in cfg.ratios:
                for method in cfg.methods:
                    for seed in cfg.seeds:
                        yield method, scenario, ratio, seed, noise


def scenario_label(scenario: str, noise: float | None) -> str:
    """Scenario column value; noisy cells carry their input SNR as a suffix."""
    return scenario if noise is None else f"{scenario}@{noise:g}dB"


def _run_one(args):
    M_full, cfg, (method, scenario, ratio, seed, noise), deterministic = args
    out = cfg.output_dir / "cells" / cell_name(method, scenario, ratio, seed, noise)
    rep, art = run_cell(M_full, method, scenario, ratio, seed, cfg.solver, cfg.dip, noise,
                        out, cfg.top_db, cfg.shift, deterministic)
    runtime = art.get("runtime_s", rep.runtime_s)
    return rep, noise, runtime


def summarize(reports, noises) -> list[dict]:
    groups: dict[tuple, list[MetricsReport]] = {}
    for rep, noise in zip(reports, noises):
        groups.setdefault((rep.method, rep.scenario, rep.ratio, noise), []).append(rep)
    rows = []
    for (method, scenario, ratio, noise), reps in groups.items():
        ok = [r for r in reps if not r.error]

        def med(attr):
            vals = [getattr(r, attr) for r in ok if np.isfinite(getattr(r, attr))]
            return float(np.median(vals)) if vals else float("nan")

        rows.append({"method": method, "scenario": scenario, "ratio": ratio,
                     "noise_snr_db": "" if noise is None else noise, "n": len(reps),
                     "rmse": med("rmse"), "correlation": med("correlation"),
                     "contrast": med("contrast"),
                     "flagged": int(any(r.error or not r.converged for r in reps))})
    return rows


def run_grid(cfg: ExperimentConfig, jobs: int = 1, deterministic: bool = False):
    """Run every cell, write the CSV outputs and return ``(reports, summary)``.

    ``deterministic`` (the CLI's ``--single-thread``) runs cells in order in
    this process and writes ``runtime_s = 0`` so reruns are byte-identical;
    measured runtimes still go to ``timing.csv``.
    """
    M_full = cfg.load_data()
    cells = list(_grid(cfg))
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    args = [(M_full, cfg, c, deterministic) for c in cells]
    if jobs > 1 and not deterministic:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_one, args))
    else:
        results = [_run_one(a) for a in args]
    reports = [r[0] for r in results]
    noises = [r[1] for r in results]

    ref = rd_image(M_full)
    if np.any(ref):
        render_figure([to_db_image(_display(ref, cfg.shift), cfg.top_db)], ["reference"],
                      cfg.output_dir, cfg.top_db)

    with open(cfg.output_dir / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rep, noise in zip(reports, noises):
            row = rep.csv_row()
            if noise is not None:
                row[1] = scenario_label(rep.scenario, noise)
            w.writerow(row)
    with open(cfg.output_dir / "errors.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "scenario", "ratio", "seed", "error"])
        for rep, noise in zip(reports, noises):
            if rep.error:
                w.writerow([rep.method, scenario_label(rep.scenario, noise), rep.ratio,
                            rep.seed, rep.error])
    summary = summarize(reports, noises)
    with open(cfg.output_dir / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in summary:
            w.writerow({k: (repr(round(v, 12)) if isinstance(v, float) else v) for k, v in row.items()})
    with open(cfg.output_dir / "timing.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "scenario", "ratio", "seed", "noise_snr_db", "runtime_s"])
        for (rep, noise, rt) in results:
            w.writerow([rep.method, rep.scenario, rep.ratio, rep.seed,
                        "" if noise is None else f"{noise:g}", f"{rt:.6f}"])
    return reports, summary


def format_summary(summary: list[dict]) -> str:
    """Fixed-width text table: one line per method, scenario and ratio."""
    buf = _io.StringIO()
    buf.write(f"{'method':<10} {'scenario':<11} {'ratio':>5} {'snr':>5} "
              f"{'RMSE':>8} {'Corr':>8} {'IC':>8}  flag\n")
    for r in summary:
        buf.write(f"{r['method']:<10} {r['scenario']:<11} {r['ratio']:>5.2f} "
                  f"{str(r['noise_snr_db']):>5} {r['rmse']:>8.4f} {r['correlation']:>8.4f} "
                  f"{r['contrast']:>8.4f}  {'*' if r['flagged'] else ''}\n")
    return buf.getvalue()
