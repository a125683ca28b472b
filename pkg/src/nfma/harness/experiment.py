"""Monte Carlo experiment runner and scheme comparison."""

from __future__ import annotations

import csv
import io
import itertools
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..analog import optimize_analog, optimize_analog_statistical
from ..arrays import benchmark_geometry, format_geometry, init_subregion_grid
from ..bounds import max_min_bound
from ..digital import (optimize_digital, optimize_digital_statistical, write_trace_csv,
                       zf_min_sinr)
from ..exceptions import InfeasibleSpacing, NFMAError
from .config import ExperimentConfig
from .scenario import sample_realizations, sample_users

__all__ = ["TrialRecord", "SchemeSummary", "OrderingReport", "ExperimentResult",
           "trial_rng", "training_rng", "initial_geometry", "train_statistical",
           "run_trial", "run_experiment", "summarize", "compare_schemes"]


@dataclass
class TrialRecord:
    trial: int
    architecture: str
    scheme: str
    value: float  # min-SINR (digital) or min-SNR (analog), linear
    status: str = "ok"
    n_iter: int = 0


@dataclass
class SchemeSummary:
    architecture: str
    scheme: str
    trials: int
    mean_linear: float
    std_db: float
    min_db: float
    max_db: float

    @property
    def mean_db(self) -> float:
        return _db(self.mean_linear)


@dataclass
class ExperimentResult:
    records: list
    summary: list
    report: "OrderingReport"
    files: dict = field(default_factory=dict)


def _db(v):
    with np.errstate(divide="ignore"):
        return float(10 * np.log10(v))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one Monte Carlo trial."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, trial)))


def training_rng(seed: int, architecture: str) -> np.random.Generator:
    """Stream for the statistical-CSI training set of one architecture."""
    idx = ("digital", "analog").index(architecture)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, idx)))


def initial_geometry(cfg: ExperimentConfig, architecture: str):
    """Movable-array starting grid, shrunk as far as ``d_min`` allows.

    If the configured sub-region is too small for the spacing constraint the
    smallest feasible sub-region is used instead.
    """
    sc = cfg.scenario
    region = sc.region
    scale = cfg.digital_init_scale if architecture == "digital" else cfg.analog_init_scale
    try:
        return init_subregion_grid(sc.M, region, scale, sc.offsets)
    except InfeasibleSpacing:
        cols = math.isqrt(sc.M - 1) + 1
        scale = cols * region.d_min / region.side_A * (1 + 1e-12)
        if scale > 1:
            raise
        return init_subregion_grid(sc.M, region, scale, sc.offsets)


def train_statistical(cfg: ExperimentConfig, architecture: str):
    """Optimize one geometry for the configured user distribution."""
    sc = cfg.scenario
    reals = sample_realizations(sc, training_rng(cfg.seed, architecture), cfg.stat_realizations)
    init = initial_geometry(cfg, architecture)
    opt = optimize_digital_statistical if architecture == "digital" \
        else optimize_analog_statistical
    return opt(init, reals, sc.power, sc.noise, sc.wavelength, cfg.optimizer)


def _trace_text(trace, architecture):
    buf = io.StringIO()
    write_trace_csv(trace, buf, architecture)
    return buf.getvalue()


def run_trial(cfg: ExperimentConfig, trial: int, stat_geoms: dict | None = None):
    """Evaluate every configured scheme on one user drop.

    Returns the records plus ``{filename: text}`` for optional traces and
    geometry dumps. Failures of ZF on a fixed array are recorded as a zero
    metric with the error class as status.
    """
    sc = cfg.scenario
    lam, P, s2 = sc.wavelength, sc.power, sc.noise
    users = sample_users(sc, trial_rng(cfg.seed, trial))
    stat_geoms = stat_geoms or {}
    records, files = [], {}
    tag = f"trial{trial:04d}"
    for arch in cfg.architectures:
        for scheme in dict.fromkeys(cfg.schemes):
            rec = TrialRecord(trial, arch, scheme, 0.0)
            try:
                if scheme == "upper_bound":
                    rec.value = max_min_bound(users, sc.M, sc.N, P, s2)[0]
                elif scheme == "ma_instant":
                    init = initial_geometry(cfg, arch)
                    if arch == "digital":
                        sol = optimize_digital(init, users, P, s2, lam, cfg.optimizer)
                        rec.value = sol.min_sinr
                    else:
                        sol = optimize_analog(init, users, P, s2, lam, cfg.optimizer)
                        rec.value = sol.min_snr
                    rec.status, rec.n_iter = sol.status, sol.n_iter
                    if cfg.traces:
                        files[f"traces/{arch}_{scheme}_{tag}.csv"] = _trace_text(sol.trace, arch)
                    if cfg.geometries:
                        files[f"geometries/{arch}_{scheme}_{tag}.txt"] = \
                            format_geometry(sol.geometry)
                else:
                    if scheme == "ma_statistical":
                        geom = stat_geoms[arch]
                    else:
                        geom = benchmark_geometry(scheme, sc.M * sc.N, sc.region, lam)
                    if arch == "digital":
                        rec.value = zf_min_sinr(geom, users, P, s2, lam)
                    else:
                        sol = optimize_analog(geom, users, P, s2, lam, cfg.optimizer,
                                              freeze_positions=True)
                        rec.value, rec.status, rec.n_iter = sol.min_snr, sol.status, sol.n_iter
            except NFMAError as e:
                rec.value, rec.status = 0.0, type(e).__name__
            records.append(rec)
    return records, files


def _run_trial_star(args):
    return run_trial(*args)


def summarize(records) -> list[SchemeSummary]:
    """Per (architecture, scheme) statistics; ``mean_db`` is the dB of the linear mean."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.architecture, r.scheme), []).append(r.value)
    out = []
    for (arch, scheme), vals in groups.items():
        v = np.array(vals, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            db = 10 * np.log10(v)
        out.append(SchemeSummary(arch, scheme, v.size, float(v.mean()),
                                 float(np.std(db)) if np.all(v > 0) else float("nan"),
                                 float(db.min()), float(db.max())))
    return out


@dataclass
class OrderingReport:
    """Mean metric per scheme and all pairwise orderings.

    ``pairs`` rows are ``(architecture, better, worse, mean_diff_db,
    win_fraction, n_trials, diff_std_db)`` where ``win_fraction`` is the share
    of trials in which ``better`` was at least as good as ``worse``.
    """

    means_db: dict
    pairs: list

    def holds(self, architecture: str, chain) -> bool:
        """True if mean values are non-increasing along ``chain``."""
        m = [self.means_db[(architecture, s)] for s in chain]
        return all(a >= b for a, b in zip(m, m[1:]))

    def format(self) -> str:
        lines = []
        for arch in dict.fromkeys(a for a, _ in self.means_db):
            ranked = sorted((k for k in self.means_db if k[0] == arch),
                            key=lambda k: -self.means_db[k])
            lines.append(f"{arch}: " + " >= ".join(
                f"{s} ({self.means_db[(arch, s)]:.2f} dB)" for _, s in ranked))
        return "\n".join(lines)


def compare_schemes(records) -> OrderingReport:
    """Rank schemes by mean metric within each architecture."""
    by: dict = {}
    for r in records:
        by.setdefault((r.architecture, r.scheme), {})[r.trial] = r.value
    means = {k: _db(np.mean(list(v.values()))) for k, v in by.items()}
    pairs = []
    for (ka, va), (kb, vb) in itertools.permutations(by.items(), 2):
        if ka[0] != kb[0] or means[ka] < means[kb] or (means[ka] == means[kb] and ka > kb):
            continue
        common = sorted(set(va) & set(vb))
        a = np.array([va[t] for t in common])
        b = np.array([vb[t] for t in common])
        with np.errstate(divide="ignore", invalid="ignore"):
            d = 10 * np.log10(a) - 10 * np.log10(b)
        finite = d[np.isfinite(d)]
        pairs.append((ka[0], ka[1], kb[1], means[ka] - means[kb],
                      float(np.mean(a >= b)) if common else float("nan"), len(common),
                      float(np.std(finite)) if finite.size else float("nan")))
    return OrderingReport(means, pairs)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _num(v):
    return repr(float(v))


def run_experiment(cfg: ExperimentConfig, out_dir=None, quiet: bool = True) -> ExperimentResult:
    """Run ``cfg.trials`` trials of every configured scheme and write CSV outputs.

    Files written to ``out_dir`` (when given): ``trials.csv``,
    ``summary.csv``, ``comparisons.csv`` and, if enabled, ``traces/`` and
    ``geometries/``. Output depends only on the configuration and seed.
    """
    log = (lambda *a: None) if quiet else (lambda *a: print(*a, file=sys.stderr))
    files: dict = {}
    stat_geoms = {}
    if "ma_statistical" in cfg.schemes:
        for arch in cfg.architectures:
            log(f"training statistical {arch} geometry on {cfg.stat_realizations} drops")
            sol = train_statistical(cfg, arch)
            stat_geoms[arch] = sol.geometry
            if cfg.traces:
                files[f"traces/{arch}_ma_statistical_training.csv"] = \
                    _trace_text(sol.trace, arch)
            if cfg.geometries:
                files[f"geometries/{arch}_ma_statistical.txt"] = format_geometry(sol.geometry)

    jobs = [(cfg, t, stat_geoms) for t in range(cfg.trials)]
    records = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_run_trial_star, jobs))
    else:
        results = []
        for job in jobs:
            results.append(_run_trial_star(job))
            log(f"trial {job[1] + 1}/{cfg.trials} done")
    for recs, fs in results:
        records.extend(recs)
        files.update(fs)

    summary = summarize(records)
    report = compare_schemes(records)
    written = {}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "trials.csv",
                   ["trial", "architecture", "scheme", "value_linear", "value_db", "status",
                    "n_iter"],
                   [[r.trial, r.architecture, r.scheme, _num(r.value), _num(_db(r.value)),
                     r.status, r.n_iter] for r in records])
        _write_csv(out / "summary.csv",
                   ["architecture", "scheme", "trials", "mean_linear", "mean_db", "std_db",
                    "min_db", "max_db"],
                   [[s.architecture, s.scheme, s.trials, _num(s.mean_linear), _num(s.mean_db),
                     _num(s.std_db), _num(s.min_db), _num(s.max_db)] for s in summary])
        _write_csv(out / "comparisons.csv",
                   ["architecture", "better", "worse", "mean_diff_db", "win_fraction",
                    "n_trials", "diff_std_db"],
                   [[a, b, c, _num(d), _num(f), n, _num(s)]
                    for a, b, c, d, f, n, s in report.pairs])
        written = {name: out / name for name in ("trials.csv", "summary.csv",
                                                  "comparisons.csv")}
        for name in sorted(files):
            p = out / name
            p.parent.mkdir(parents=True, exist_ok=True)
            with open(p, "w", newline="", encoding="utf-8") as fh:
                fh.write(files[name])
            written[name] = p
    return ExperimentResult(records, summary, report, written)

