"""Experiment specs, presets, the seeded runner, CSV logs and comparisons.

Output layout of :func:`run` (one directory per experiment)::

    spec.yaml                resolved spec; feeding it back reproduces the run
    oracle[_vX].json         NE reference per scenario variant
    diagnostics[_vX].json    coupling / modulus / Lipschitz report per variant
    <arm>_seed<k>.csv        one log per (arm, seed)
    plot_data.csv            long format: iteration, series, value
    plot.py                  plotting stub for the long-format file

Every CSV starts with ``# {json}`` holding the resolved configuration, then a
header row and one row per iteration.  Reals use 17 significant digits and
lines end in LF, so equal inputs give byte-identical files.
"""

from __future__ import annotations

import json
import logging
import re
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import __version__
from .analysis import DiagnosticsReport, NeSolution, audit_recursion, diagnose, nse_series, solve_ne
from .channel import ConfigError
from .learners import NoiseModel, RunLog, StepSchedule, check_step_condition, iwfa_run, run_sdla
from .rng import stream
from .scenario import Scenario, scenario_preset

log = logging.getLogger(__name__)

ALGORITHMS = ("sdla1", "sdla2", "sdla-mixed", "iwfa")
PRESETS = ("fig1", "fig2", "fig3", "fig4")
METRICS = ("nse_final", "nse_curve", "fluctuation")
FLUCTUATION_WINDOW = 200

# Harmonic schedule used by the figure presets.  On the full-scale scenario
# a0 = 100 converges well before n = 2000 and stays clear of the regime
# (a0 around 400) where the first steps throw iterates onto a far corner.
PRESET_HARMONIC = StepSchedule("harmonic", 100.0)


@dataclass(frozen=True)
class Arm:
    """One algorithm configuration inside an experiment."""

    label: str
    algorithm: str
    schedule: Optional[StepSchedule] = None
    switch_at: Optional[int] = None
    perturbation: Optional[float] = None  # overrides the scenario value
    update_order: str = "sequential"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if not re.fullmatch(r"[A-Za-z0-9_.+-]+", self.label):
            raise ConfigError(f"arm label {self.label!r} must be file-name safe")
        if self.algorithm != "iwfa" and self.schedule is None:
            raise ConfigError(f"arm {self.label!r} needs a step schedule")
        if self.algorithm == "sdla-mixed" and (self.switch_at is None or self.switch_at < 1):
            raise ConfigError("sdla-mixed needs switch_at >= 1")
        if self.update_order not in ("sequential", "simultaneous"):
            raise ConfigError(f"unknown update order {self.update_order!r}")

    @property
    def average_from(self) -> Optional[int]:
        return {"sdla1": None, "sdla2": 0, "sdla-mixed": self.switch_at}.get(self.algorithm)

    def to_dict(self) -> dict:
        d = {"label": self.label, "algorithm": self.algorithm}
        if self.schedule is not None:
            d["schedule"] = self.schedule.to_dict()
        if self.switch_at is not None:
            d["switch_at"] = int(self.switch_at)
        if self.perturbation is not None:
            d["perturbation"] = float(self.perturbation)
        if self.algorithm == "iwfa":
            d["update_order"] = self.update_order
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Arm:
        try:
            sched = d.get("schedule")
            return cls(
                label=str(d["label"]),
                algorithm=str(d["algorithm"]),
                schedule=None if sched is None else StepSchedule.from_dict(sched),
                switch_at=None if d.get("switch_at") is None else int(d["switch_at"]),
                perturbation=None if d.get("perturbation") is None else float(d["perturbation"]),
                update_order=str(d.get("update_order", "sequential")),
            )
        except KeyError as exc:
            raise ConfigError(f"arm is missing {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class OracleSettings:
    method: str = "saa"
    n_samples: int = 2000
    tol: float = 1e-8
    max_iter: int = 500
    seed: int = 0


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """Everything needed to reproduce a batch of runs.

    ``p0`` is None (uniform ``p_max / K``), ``"skewed"`` (each user starts
    with 40/30/20/10 percent of its budget on channels rotated by its index)
    or an explicit ``(N, K)`` list.
    """

    name: str
    scenario: Scenario
    arms: tuple
    iterations: int
    seeds: tuple
    noise: NoiseModel = NoiseModel()
    oracle: OracleSettings = OracleSettings()
    p0: object = None
    out: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if len(self.seeds) == 0:
            raise ConfigError("seeds must be nonempty")
        if len(self.arms) == 0:
            raise ConfigError("at least one arm is required")
        labels = [a.label for a in self.arms]
        if len(set(labels)) != len(labels):
            raise ConfigError("arm labels must be unique")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        object.__setattr__(self, "arms", tuple(self.arms))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        self.initial_profile()  # validate early

    def initial_profile(self) -> np.ndarray:
        cfg = self.scenario.cfg
        if self.p0 is None or (isinstance(self.p0, str) and self.p0 == "uniform"):
            return cfg.uniform_profile().copy()
        if isinstance(self.p0, str) and self.p0 == "skewed":
            N, K = cfg.shape
            w = np.arange(K, 0, -1, dtype=float)
            w /= w.sum()
            p = np.stack([np.roll(w, j) for j in range(N)]) * cfg.p_max[:, None]
            p = np.minimum(p, cfg.effective_mask)
        elif isinstance(self.p0, str):
            raise ConfigError(f"unknown initial profile {self.p0!r}")
        else:
            p = np.asarray(self.p0, dtype=float)
        if not cfg.contains(p):
            raise ConfigError("initial profile is not feasible")
        return p

    def to_dict(self) -> dict:
        p0 = self.p0 if self.p0 is None or isinstance(self.p0, str) else np.asarray(self.p0, float).tolist()
        return {
            "name": self.name,
            "scenario": self.scenario.to_dict(),
            "arms": [a.to_dict() for a in self.arms],
            "noise": self.noise.to_dict(),
            "iterations": int(self.iterations),
            "seeds": list(self.seeds),
            "oracle": {
                "method": self.oracle.method, "n_samples": int(self.oracle.n_samples),
                "tol": float(self.oracle.tol), "max_iter": int(self.oracle.max_iter),
                "seed": int(self.oracle.seed),
            },
            "p0": p0,
            "out": self.out,
            "workers": int(self.workers),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentSpec:
        if not isinstance(d, dict):
            raise ConfigError("experiment spec must be a mapping")
        try:
            scn = d["scenario"]
            scenario = scenario_preset(scn) if isinstance(scn, str) else Scenario.from_dict(scn)
            o = d.get("oracle") or {}
            return cls(
                name=str(d.get("name", "experiment")),
                scenario=scenario,
                arms=tuple(Arm.from_dict(a) for a in d["arms"]),
                iterations=int(d["iterations"]),
                seeds=tuple(parse_seeds(d.get("seeds", [0]))),
                noise=NoiseModel.from_dict(d.get("noise")),
                oracle=OracleSettings(
                    method=str(o.get("method", "saa")), n_samples=int(o.get("n_samples", 2000)),
                    tol=float(o.get("tol", 1e-8)), max_iter=int(o.get("max_iter", 500)),
                    seed=int(o.get("seed", 0)),
                ),
                p0=d.get("p0"),
                out=d.get("out"),
                workers=int(d.get("workers", 1)),
            )
        except KeyError as exc:
            raise ConfigError(f"experiment spec is missing {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc


def parse_seeds(value) -> list:
    """``"0..19"`` (inclusive), ``"1,4,7"``, an int or a list."""
    if isinstance(value, (int, np.integer)):
        return [int(value)]
    if isinstance(value, (list, tuple, range)):
        return [int(v) for v in value]
    text = str(value).strip()
    m = re.fullmatch(r"(\d+)\.\.(\d+)", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ConfigError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse seeds {text!r}") from None


def load_spec(path) -> ExperimentSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return ExperimentSpec.from_dict(data)


def dump_spec(spec: ExperimentSpec, path) -> None:
    Path(path).write_text(yaml.safe_dump(spec.to_dict(), sort_keys=False), encoding="utf-8")


def preset(name: str, iterations: Optional[int] = None, seeds=(0,)) -> ExperimentSpec:
    """Full-scale experiment presets.

    Every preset starts from the skewed profile: on this symmetric network the
    equilibrium is close to the uniform split, which would make the default
    start almost a fixed point.
    """
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {list(PRESETS)}")
    scn = scenario_preset("strong")
    const = StepSchedule("constant", 0.5)
    if name == "fig1":
        arms = (Arm("sdla1", "sdla1", const),
                Arm("sdla1-harmonic", "sdla1", PRESET_HARMONIC),
                Arm("iwfa", "iwfa"))
        default_iter = 1000
    elif name == "fig2":
        arms = tuple(Arm(f"sdla1-c{a}", "sdla1", StepSchedule("constant", a)) for a in (0.5, 0.1, 0.01))
        arms += (Arm("sdla1-harmonic", "sdla1", PRESET_HARMONIC),)
        default_iter = 2000
    elif name == "fig3":
        arms = tuple(Arm(f"sdla1-v{v}", "sdla1", StepSchedule("constant", 0.1), perturbation=v)
                     for v in (0.1, 0.2, 0.3, 0.4, 0.5))
        default_iter = 2000
    else:
        scn = scn.with_perturbation(0.3)
        arms = (Arm("sdla1", "sdla1", const),
                Arm("sdla2", "sdla2", const),
                Arm("sdla-mixed", "sdla-mixed", const, switch_at=100))
        default_iter = 1000
    return ExperimentSpec(name=name, scenario=scn, arms=arms,
                          iterations=default_iter if iterations is None else iterations,
                          seeds=tuple(parse_seeds(seeds)), p0="skewed")


# ---------------------------------------------------------------- CSV logs


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _columns(algorithm: str, N: int, K: int) -> list:
    cols = ["n"]
    sdla = algorithm != "iwfa"
    if sdla:
        cols += [f"a_{j}" for j in range(N)]
    cols += [f"p_{j}_{k}" for j in range(N) for k in range(K)]
    averaged = algorithm in ("sdla2", "sdla-mixed")
    if averaged:
        cols += [f"pavg_{j}_{k}" for j in range(N) for k in range(K)]
    cols.append("nse_norm_ratio")
    if averaged:
        cols.append("nse_avg_norm_ratio")
    cols += [f"rate_{j}" for j in range(N)]
    if sdla:
        cols += [f"s_{j}_{k}" for j in range(N) for k in range(K)]
        cols += [f"shat_norm_{j}" for j in range(N)]
        cols += [f"eps_{j}" for j in range(N)]
        cols += ["recursion_lhs", "recursion_rhs"]
    return cols


def write_runlog(path, run: RunLog, p_star, meta: dict) -> int:
    """Write one run as CSV.  Returns the number of recursion-audit violations."""
    T, N, K = run.p.shape
    blocks = [np.arange(1, T + 1, dtype=float)[:, None]]
    violations = 0
    sdla = run.algorithm != "iwfa"
    if sdla:
        blocks.append(run.steps)
    blocks.append(run.p.reshape(T, -1))
    if run.p_avg is not None:
        blocks.append(run.p_avg.reshape(T, -1))
    blocks.append(nse_series(run.p, p_star)[:, None])
    if run.p_avg is not None:
        blocks.append(nse_series(run.p_avg, p_star)[:, None])
    blocks.append(run.rate)
    if sdla:
        audit = audit_recursion(run, p_star)
        violations = audit.violations
        meta = dict(meta, c_hat=audit.c_hat, recursion_violations=violations)
        blocks += [run.grad.reshape(T, -1), run.grad_hat_norm, run.eps,
                   audit.lhs[:, None], audit.rhs[:, None]]
    data = np.concatenate(blocks, axis=1)
    if not np.all(np.isfinite(data)):
        raise ValueError("run log contains non-finite values")
    cols = _columns(run.algorithm, N, K)
    assert data.shape[1] == len(cols)
    lines = ["# " + json.dumps(meta, sort_keys=True), ",".join(cols)]
    lines += [",".join(map(_fmt, row)) for row in data]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return violations


def read_runlog(path) -> RunLog:
    """Rebuild a :class:`RunLog` (plus ``meta``) from a CSV written by :func:`run`."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path}: missing metadata line")
        meta = json.loads(first[2:])
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    col = {c: i for i, c in enumerate(header)}
    N, K = meta["n_users"], meta["n_channels"]
    T = data.shape[0]

    def grid(prefix):
        if f"{prefix}_0_0" not in col:
            return None
        idx = [col[f"{prefix}_{j}_{k}"] for j in range(N) for k in range(K)]
        return data[:, idx].reshape(T, N, K)

    def per_user(prefix):
        if f"{prefix}_0" not in col:
            return None
        return data[:, [col[f"{prefix}_{j}"] for j in range(N)]]

    return RunLog(
        algorithm=meta["algorithm"], p0=np.asarray(meta["p0"], dtype=float), p=grid("p"),
        rate=per_user("rate"), steps=per_user("a"), grad=grid("s"),
        grad_hat_norm=per_user("shat_norm"), eps=per_user("eps"), p_avg=grid("pavg"),
        average_from=meta.get("average_from"), meta=meta,
    )


# ---------------------------------------------------------------- running


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    out_dir: Optional[Path]
    logs: list = field(default_factory=list)
    oracles: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    recursion_violations: int = 0


def _variant_key(v: float) -> str:
    return format(v, "g")


def _oracle_for(scn: Scenario, settings: OracleSettings) -> NeSolution:
    rng = stream(settings.seed, "oracle")
    return solve_ne(scn.cfg, scn.dist, settings.method, settings.tol, settings.max_iter,
                    settings.n_samples, rng)


def _run_arm(arm: Arm, scn: Scenario, spec: ExperimentSpec, p0, seed: int) -> RunLog:
    if arm.algorithm == "iwfa":
        return iwfa_run(scn.cfg, scn.dist, p0, spec.iterations, arm.update_order, seed=seed)
    return run_sdla(scn.cfg, scn.dist, p0, spec.iterations, arm.schedule, spec.noise,
                    seed=seed, average_from=arm.average_from)


def run(spec: ExperimentSpec, out=None, diagnostics: bool = True) -> ExperimentResult:
    """Execute every (arm, seed) pair of ``spec``.

    The NE reference is computed once per scenario variant from a frozen pool
    drawn on the oracle stream.  Logs are written when an output directory is
    given (argument or ``spec.out``); otherwise only the in-memory result is
    returned.
    """
    out_dir = Path(out or spec.out) if (out or spec.out) else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        dump_spec(replace(spec, out=None), out_dir / "spec.yaml")
    base_v = spec.scenario.dist.perturbation
    variants = {}
    for arm in spec.arms:
        v = base_v if arm.perturbation is None else arm.perturbation
        if _variant_key(v) not in variants:
            variants[_variant_key(v)] = spec.scenario.with_perturbation(v)
    suffix = {key: "" if len(variants) == 1 else f"_v{key}" for key in variants}
    res = ExperimentResult(spec=spec, out_dir=out_dir)

    for key, scn in variants.items():
        sol = _oracle_for(scn, spec.oracle)
        res.oracles[key] = sol
        log.info("oracle for v=%s: residual %.2e after %d sweeps", key, sol.residual, sol.sweeps)
        if diagnostics:
            rep = diagnose(scn.cfg, scn.dist, stream(spec.oracle.seed, "diagnostics"))
            for arm in spec.arms:
                v = base_v if arm.perturbation is None else arm.perturbation
                if arm.schedule is not None and _variant_key(v) == key:
                    with warnings.catch_warnings(record=True) as caught:
                        warnings.simplefilter("always")
                        check_step_condition(arm.schedule, rep.tau_hat, rep.lipschitz_hat)
                    for w in caught:
                        rep.notices.append(f"{arm.label}: {w.message}")
                        warnings.warn(f"{arm.label}: {w.message}", stacklevel=2)
            res.diagnostics[key] = rep
        if out_dir is not None:
            _write_json(out_dir / f"oracle{suffix[key]}.json", {
                "p_star": sol.p_star.tolist(), "residual": sol.residual, "method": sol.method,
                "samples_used": sol.samples_used, "sweeps": sol.sweeps, "perturbation": scn.dist.perturbation,
            })

    p0 = spec.initial_profile()
    jobs = []
    for arm in spec.arms:
        v = base_v if arm.perturbation is None else arm.perturbation
        for seed in spec.seeds:
            jobs.append((arm, _variant_key(v), seed))

    def work(job):
        arm, key, seed = job
        scn = variants[key]
        runlog = _run_arm(arm, scn, spec, p0, seed)
        p_star = res.oracles[key].p_star
        runlog.meta = {
            "algorithm": arm.algorithm, "label": arm.label, "seed": seed, "arm": arm.to_dict(),
            "experiment": spec.name, "n_users": scn.cfg.n_users, "n_channels": scn.cfg.n_channels,
            "scenario": scn.to_dict(), "noise": spec.noise.to_dict(), "iterations": spec.iterations,
            "p0": p0.tolist(), "p_star": p_star.tolist(), "average_from": arm.average_from,
            "version": __version__,
        }
        viol = 0
        if out_dir is not None:
            viol = write_runlog(out_dir / f"{arm.label}_seed{seed}.csv", runlog, p_star, runlog.meta)
        elif arm.algorithm != "iwfa":
            viol = audit_recursion(runlog, p_star).violations
        return runlog, viol

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as ex:
            outputs = list(ex.map(work, jobs))
    else:
        outputs = [work(j) for j in jobs]
    for runlog, viol in outputs:
        res.logs.append(runlog)
        res.recursion_violations += viol

    if out_dir is not None:
        for key, rep in res.diagnostics.items():
            d = rep.to_dict()
            d["recursion_violations"] = sum(v for (r, v) in outputs
                                         if _variant_key(r.meta["scenario"]["perturbation"]) == key)
            d["oracle_residual"] = res.oracles[key].residual
            _write_json(out_dir / f"diagnostics{suffix[key]}.json", d)
        write_plot_data(out_dir, res.logs)
    for key, rep in res.diagnostics.items():
        rep.recursion_violations = sum(v for (r, v) in outputs
                                    if _variant_key(r.meta["scenario"]["perturbation"]) == key)
    return res


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


_PLOT_STUB = '''"""Plot the long-format series written next to this file.

Usage: python plot.py [plot_data.csv]
"""
import sys

import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv(sys.argv[1] if len(sys.argv) > 1 else "plot_data.csv")
for metric, sub in df.groupby(df["series"].str.split("/").str[-1]):
    fig, ax = plt.subplots()
    for name, s in sub.groupby("series"):
        ax.plot(s["iteration"], s["value"], label=name, lw=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel(metric)
    if metric.startswith("nse"):
        ax.set_yscale("log")
    ax.legend(fontsize=6)
    fig.savefig(f"{metric}.png", dpi=150)
'''


def write_plot_data(out_dir: Path, logs: list) -> None:
    """Long-format ``iteration,series,value`` rows: NSE curves and ``p_1^1`` per run."""
    lines = ["iteration,series,value"]
    for r in logs:
        tag = f"{r.meta['label']}/seed{r.meta['seed']}"
        p_star = np.asarray(r.meta["p_star"])
        n = np.arange(1, r.iterations + 1)
        series = [("nse", nse_series(r.p, p_star)), ("p11", r.transmitted[:, 0, 0])]
        if r.p_avg is not None:
            series.insert(1, ("nse_avg", nse_series(r.p_avg, p_star)))
        for name, vals in series:
            lines += [f"{i},{tag}/{name},{_fmt(v)}" for i, v in zip(n, vals)]
    with open(out_dir / "plot_data.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    (out_dir / "plot.py").write_text(_PLOT_STUB, encoding="utf-8")


# ---------------------------------------------------------------- comparison


def fluctuation(run: RunLog, window: int = FLUCTUATION_WINDOW) -> float:
    """Variance of the transmitted ``p_1^1`` over the last ``window`` iterations."""
    return float(np.var(run.transmitted[-window:, 0, 0]))


def metric_value(run: RunLog, metric: str, p_star=None) -> float:
    if metric == "fluctuation":
        return fluctuation(run)
    p_star = np.asarray(run.meta["p_star"] if p_star is None else p_star)
    curve = nse_series(run.transmitted, p_star)
    if metric == "nse_final":
        return float(curve[-1])
    if metric == "nse_curve":
        return float(curve.mean())
    raise ValueError(f"unknown metric {metric!r}")


@dataclass
class ComparisonRow:
    label: str
    algorithm: str
    n_runs: int
    median: float
    delta: float  # median minus the reference row's median


@dataclass
class Comparison:
    metric: str
    rows: list

    def format(self) -> str:
        out = [f"{'label':<20} {'algorithm':<11} {'runs':>4} {'median':>14} {'delta':>14}"]
        for r in self.rows:
            out.append(f"{r.label:<20} {r.algorithm:<11} {r.n_runs:>4} {r.median:>14.6g} {r.delta:>14.6g}")
        return "\n".join(out)


def scenario_fingerprint(run: RunLog) -> str:
    m = run.meta
    return json.dumps([m.get("scenario"), m.get("p_star")], sort_keys=True)


def compare(logs, metric: str, reference: Optional[str] = None) -> Comparison:
    """Per-label medians of ``metric`` across seeds.

    The first label (or ``reference``) is the baseline of the ``delta``
    column.  All logs must come from the same scenario and oracle.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {list(METRICS)}")
    logs = list(logs)
    if not logs:
        raise ValueError("no logs to compare")
    if len({scenario_fingerprint(r) for r in logs}) > 1:
        raise ConfigError("logs come from different scenarios or oracles")
    groups: dict = {}
    for r in logs:
        groups.setdefault(r.meta.get("label", r.algorithm), []).append(r)
    meds = {lab: float(np.median([metric_value(r, metric) for r in rs])) for lab, rs in groups.items()}
    ref = reference if reference is not None else next(iter(groups))
    if ref not in meds:
        raise ValueError(f"reference label {ref!r} not among the logs")
    rows = [ComparisonRow(lab, rs[0].algorithm, len(rs), meds[lab], meds[lab] - meds[ref])
            for lab, rs in groups.items()]
    return Comparison(metric=metric, rows=rows)


def load_logs(directory) -> list:
    """Every run CSV in ``directory`` in sorted file-name order."""
    paths = sorted(p for p in Path(directory).glob("*_seed*.csv"))
    return [read_runlog(p) for p in paths]


__all__ = [
    "Arm", "OracleSettings", "ExperimentSpec", "ExperimentResult", "PRESETS", "METRICS",
    "preset", "parse_seeds", "load_spec", "dump_spec", "run", "write_runlog", "read_runlog",
    "write_plot_data", "fluctuation", "metric_value", "compare", "Comparison", "ComparisonRow",
    "load_logs", "scenario_fingerprint", "DiagnosticsReport",
]
