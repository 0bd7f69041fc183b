"""Experiment configs, validation and the sweep runner behind the CLI.

A config is a JSON-compatible dict (see `ExperimentConfig`).  Running one
produces full-precision CSV tables, an optional PNG per table, and a run
manifest.  Given the same seed the CSV bodies are byte-identical across
runs; only the manifest timestamp changes.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .criteria import (
    CriterionResult,
    hz_original,
    measured_first_order,
    measured_second_order,
)
from .fock import CutoffConvergenceError, QuantumState
from .homodyne import (
    MeasurementBudget,
    fluctuation_delta_m,
    sample_first_order,
)
from .spin_bec import evolve
from .states import StateSpec, auto_cutoff, build
from . import plots

SCHEMA_VERSION = 1

EXPERIMENTS = (
    "criterion_eval",
    "fluctuation_sweep",
    "lo_sweep",
    "second_order_compare",
    "spin_bec_trajectory",
    "sample_run",
)

_CRITERIA_NEEDING_LO = frozenset({"M1", "M2", "S1", "S2"})
_CRITERION_IDS = frozenset({"HZ1", "HZ2", "M1", "M2", "S1", "S2"})

# sweep parameter handled by recomputing n_th from the grid value
RATIO_PARAM = "n_th_over_alpha_sq"


@dataclass(frozen=True)
class SweepSpec:
    target: str  # "lo" | "signal"
    parameter: str
    grid: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"target": self.target, "parameter": self.parameter, "grid": list(self.grid)}

    @classmethod
    def from_dict(cls, payload: dict) -> "SweepSpec":
        grid = payload.get("grid")
        if isinstance(grid, dict):
            pts = int(grid["points"])
            values = np.linspace(float(grid["start"]), float(grid["stop"]), pts)
            grid = [float(v) for v in values]
        return cls(
            target=payload.get("target", "lo"),
            parameter=payload["parameter"],
            grid=tuple(float(g) for g in grid or ()),
        )


@dataclass(frozen=True)
class SpinRun:
    pump_mean_n: float = 50.0
    n_max: int | None = None
    lambda_t_stop: float = 0.2
    lambda_t_points: int = 81

    def to_dict(self) -> dict:
        out = {
            "pump_mean_n": self.pump_mean_n,
            "lambda_t_stop": self.lambda_t_stop,
            "lambda_t_points": self.lambda_t_points,
        }
        if self.n_max is not None:
            out["n_max"] = self.n_max
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "SpinRun":
        return cls(
            pump_mean_n=float(payload.get("pump_mean_n", 50.0)),
            n_max=payload.get("n_max"),
            lambda_t_stop=float(payload.get("lambda_t_stop", 0.2)),
            lambda_t_points=int(payload.get("lambda_t_points", 81)),
        )

    def resolved_n_max(self) -> int:
        if self.n_max is not None:
            return int(self.n_max)
        return math.ceil(self.pump_mean_n + 8.0 * math.sqrt(self.pump_mean_n))

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.lambda_t_stop, self.lambda_t_points)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    signal: StateSpec | None = None
    lo: StateSpec | None = None
    criterion: dict = field(default_factory=dict)
    sweep: SweepSpec | None = None
    budget: MeasurementBudget | None = None
    spin: SpinRun | None = None
    seed: int = 0
    check_convergence: bool = False

    def to_dict(self) -> dict:
        out: dict = {"schema_version": SCHEMA_VERSION, "experiment": self.experiment}
        if self.signal is not None:
            out["signal"] = self.signal.to_dict()
        if self.lo is not None:
            out["lo"] = self.lo.to_dict()
        if self.criterion:
            out["criterion"] = dict(self.criterion)
        if self.sweep is not None:
            out["sweep"] = self.sweep.to_dict()
        if self.budget is not None:
            out["budget"] = {
                "samples": self.budget.samples,
                "excess_noise": self.budget.excess_noise,
            }
        if self.spin is not None:
            out["spin"] = self.spin.to_dict()
        out["seed"] = self.seed
        if self.check_convergence:
            out["check_convergence"] = True
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        version = payload.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {version}")
        budget = None
        if "budget" in payload:
            budget = MeasurementBudget(
                samples=int(payload["budget"]["samples"]),
                excess_noise=float(payload["budget"].get("excess_noise", 0.0)),
            )
        return cls(
            experiment=payload.get("experiment", ""),
            signal=StateSpec.from_dict(payload["signal"]) if "signal" in payload else None,
            lo=StateSpec.from_dict(payload["lo"]) if "lo" in payload else None,
            criterion=dict(payload.get("criterion", {})),
            sweep=SweepSpec.from_dict(payload["sweep"]) if "sweep" in payload else None,
            budget=budget,
            spin=SpinRun.from_dict(payload["spin"]) if "spin" in payload else None,
            seed=int(payload.get("seed", 0)),
            check_convergence=bool(payload.get("check_convergence", False)),
        )

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# validation


def _check_spec(spec: StateSpec, who: str) -> list[str]:
    errors = []
    p = spec.params
    checks: list[tuple[bool, str]] = []
    if spec.kind == "thermal" or spec.kind == "displaced_thermal":
        checks.append((p.get("n_th", 0.0) >= 0.0, "n_th must be >= 0"))
    if spec.kind in ("squeezed_vacuum", "displaced_squeezed"):
        checks.append((p.get("r", 0.0) >= 0.0, "r must be >= 0"))
    if spec.kind == "tmsv":
        checks.append((0.0 <= p.get("x", 0.0) < 1.0, "need 0 <= x < 1"))
    if spec.kind == "binomial":
        checks.append((p.get("n", 0) >= 1, "n must be >= 1"))
    if spec.kind in ("fock", "displaced_fock"):
        checks.append((p.get("n", 0) >= 0, "n must be >= 0"))
    for ok, msg in checks:
        if not ok:
            errors.append(f"{who}: {msg}")
    return errors


def validate_config(config: ExperimentConfig) -> dict:
    """Schema/range validation plus a size estimate; never raises."""
    errors: list[str] = []
    warnings: list[str] = []
    if config.experiment not in EXPERIMENTS:
        errors.append(f"unknown experiment {config.experiment!r}; valid: {EXPERIMENTS}")
        return {"ok": False, "errors": errors, "warnings": warnings}

    needs_signal = config.experiment != "spin_bec_trajectory"
    if needs_signal:
        if config.signal is None:
            errors.append("signal spec is required")
        elif config.signal.n_modes != 2:
            errors.append(
                f"signal must be a two-mode spec, got {config.signal.kind!r}"
            )
        if config.signal is not None:
            errors.extend(_check_spec(config.signal, "signal"))

    crit_id = config.criterion.get("id")
    needs_lo = config.experiment in (
        "fluctuation_sweep",
        "second_order_compare",
        "sample_run",
    ) or (
        config.experiment in ("criterion_eval", "lo_sweep")
        and (crit_id is None or crit_id in _CRITERIA_NEEDING_LO)
    )
    if needs_lo:
        if config.lo is None:
            errors.append("lo spec is required for this experiment")
        else:
            if config.lo.n_modes != 1:
                errors.append("lo must be a single-mode spec")
            errors.extend(_check_spec(config.lo, "lo"))

    if config.experiment in ("criterion_eval", "lo_sweep"):
        if crit_id not in _CRITERION_IDS:
            errors.append(f"criterion.id must be one of {sorted(_CRITERION_IDS)}")

    if config.experiment in ("fluctuation_sweep", "lo_sweep", "second_order_compare"):
        if config.sweep is None:
            errors.append("sweep specification is required")
        else:
            if not config.sweep.grid:
                errors.append("sweep grid must be nonempty")
            if not all(math.isfinite(g) for g in config.sweep.grid):
                errors.append("sweep grid must be finite")
            target_spec = config.lo if config.sweep.target == "lo" else config.signal
            if config.sweep.target not in ("lo", "signal"):
                errors.append("sweep target must be 'lo' or 'signal'")
            elif target_spec is not None:
                param = config.sweep.parameter
                if param == RATIO_PARAM:
                    if target_spec.kind != "displaced_thermal":
                        errors.append(
                            f"{RATIO_PARAM} sweeps need a displaced_thermal LO"
                        )
                elif param not in target_spec.params:
                    errors.append(
                        f"sweep parameter {param!r} not found on the "
                        f"{config.sweep.target} spec ({target_spec.kind})"
                    )

    if config.experiment == "sample_run" and config.budget is None:
        errors.append("sample_run needs a measurement budget")

    if config.experiment == "spin_bec_trajectory":
        spin = config.spin or SpinRun()
        if spin.pump_mean_n <= 0:
            errors.append("pump_mean_n must be positive")
        if spin.lambda_t_points < 2:
            errors.append("need at least two grid points")

    est_dim = None
    est_bytes = None
    if not errors and needs_signal and config.signal is not None:
        dims = [auto_cutoff(config.signal) + 1] * 2
        mixed = config.signal.kind in ("thermal", "displaced_thermal")
        if config.lo is not None:
            dims += [auto_cutoff(config.lo) + 1] * 2
            mixed = mixed or config.lo.kind in ("thermal", "displaced_thermal")
        est_dim = int(np.prod(dims))
        est_bytes = est_dim * est_dim * 16 if mixed else est_dim * 16
        if est_bytes > 1 << 33:
            warnings.append(
                f"estimated state storage {est_bytes/2**30:.1f} GiB; "
                "full-path evaluation may be infeasible (factored paths are fine)"
            )
    return {
        "ok": not errors,
        "errors": errors,
        "warnings": warnings,
        "estimated_dimension": est_dim,
        "estimated_memory_bytes": est_bytes,
    }


# ---------------------------------------------------------------------------
# running


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence], note: str) -> None:
    lines = [f"# homodyne-sim schema={SCHEMA_VERSION} {note}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(
            ",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row)
        )
    path.write_text("\n".join(lines) + "\n")


def _build_pair(spec: StateSpec) -> QuantumState:
    return build(spec, ("a", "b"))


def _build_lo(spec: StateSpec, label: str) -> QuantumState:
    return build(spec, label)


def _coerce_like(old, value: float):
    if isinstance(old, complex):
        return complex(value)
    if isinstance(old, int) and not isinstance(old, bool):
        return int(value)
    return float(value)


def _apply_sweep_value(config: ExperimentConfig, value: float) -> ExperimentConfig:
    assert config.sweep is not None
    param = config.sweep.parameter
    spec = config.lo if config.sweep.target == "lo" else config.signal
    assert spec is not None
    if param == RATIO_PARAM:
        alpha = spec.params["alpha"]
        params = dict(spec.params, n_th=value * abs(alpha) ** 2)
    else:
        params = dict(spec.params)
        params[param] = _coerce_like(spec.params[param], value)
    new_spec = replace(spec, params=params)
    if config.sweep.target == "lo":
        return replace(config, lo=new_spec)
    return replace(config, signal=new_spec)


def _eval_criterion(
    config: ExperimentConfig,
) -> CriterionResult:
    crit = config.criterion
    crit_id = crit["id"]
    signal = _build_pair(config.signal)
    kwargs = {"check_convergence": config.check_convergence}
    if crit_id in ("HZ1", "HZ2"):
        return hz_original(
            signal, 1 if crit_id == "HZ1" else 2, int(crit.get("s", 1)), int(crit.get("t", 1)),
            **kwargs,
        )
    lo_c = _build_lo(config.lo, "c")
    lo_d = _build_lo(config.lo, "d")
    if crit_id in ("M1", "M2"):
        return measured_first_order(
            signal, lo_c, lo_d, 1 if crit_id == "M1" else 2, **kwargs
        )
    bound = "eq16" if crit_id == "S1" else "eq18"
    return measured_second_order(signal, lo_c, lo_d, bound, **kwargs)


def _eval_criterion_flagged(config: ExperimentConfig) -> CriterionResult:
    """Convergence failures become a flagged result, not a crash."""
    try:
        return _eval_criterion(config)
    except CutoffConvergenceError:
        relaxed = replace(config, check_convergence=False)
        result = _eval_criterion(relaxed)
        return replace(result, converged=False)


def _parallel_map(fn: Callable, values: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(values) <= 1:
        return [fn(v) for v in values]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, values))


def run_experiment(
    config: ExperimentConfig,
    out_dir: Path,
    *,
    name: str = "run",
    jobs: int = 1,
    make_plots: bool = True,
) -> dict:
    """Execute a validated config; returns the manifest dict."""
    report = validate_config(config)
    if not report["ok"]:
        raise ValueError("config failed validation: " + "; ".join(report["errors"]))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    outputs: list[str] = []

    runner = {
        "criterion_eval": _run_criterion_eval,
        "lo_sweep": _run_lo_sweep,
        "fluctuation_sweep": _run_fluctuation_sweep,
        "second_order_compare": _run_second_order_compare,
        "spin_bec_trajectory": _run_spin_trajectory,
        "sample_run": _run_sample,
    }[config.experiment]
    outputs.extend(runner(config, out_dir, name, jobs, make_plots))

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "name": name,
        "experiment": config.experiment,
        "config": config.to_dict(),
        "config_digest": config.digest(),
        "seed": config.seed,
        "wall_time_s": time.perf_counter() - started,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "outputs": outputs,
    }
    manifest_path = out_dir / f"{name}_manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def _run_criterion_eval(config, out_dir, name, jobs, make_plots) -> list[str]:
    result = _eval_criterion_flagged(replace(config, check_convergence=True))
    csv_path = out_dir / f"{name}.csv"
    write_csv(
        csv_path,
        ["criterion_id", "s", "t", "lhs", "rhs", "margin", "violated", "converged"],
        [
            [
                result.criterion_id,
                result.s,
                result.t,
                result.lhs,
                result.rhs,
                result.margin,
                int(result.violated),
                -1 if result.converged is None else int(result.converged),
            ]
        ],
        "experiment=criterion_eval",
    )
    json_path = out_dir / f"{name}_result.json"
    json_path.write_text(json.dumps(result.to_dict(), indent=2) + "\n")
    return [csv_path.name, json_path.name]


def _run_lo_sweep(config, out_dir, name, jobs, make_plots) -> list[str]:
    grid = list(config.sweep.grid)

    def point(value: float) -> CriterionResult:
        return _eval_criterion_flagged(_apply_sweep_value(config, value))

    results = _parallel_map(point, grid, jobs)
    header = [config.sweep.parameter, "lhs", "rhs", "margin", "violated", "converged"]
    rows = [
        [
            v,
            r.lhs,
            r.rhs,
            r.margin,
            int(r.violated),
            -1 if r.converged is None else int(r.converged),
        ]
        for v, r in zip(grid, results)
    ]
    csv_path = out_dir / f"{name}.csv"
    write_csv(csv_path, header, rows, f"experiment=lo_sweep criterion={config.criterion['id']}")
    outputs = [csv_path.name]
    if make_plots:
        png = out_dir / f"{name}.png"
        plots.plot_sweep(
            png,
            grid,
            {"lhs": [r.lhs for r in results], "rhs": [r.rhs for r in results]},
            xlabel=config.sweep.parameter,
            ylabel="moment value",
            title=f"{config.criterion['id']} under LO sweep",
        )
        outputs.append(png.name)
    return outputs


def _run_fluctuation_sweep(config, out_dir, name, jobs, make_plots) -> list[str]:
    grid = list(config.sweep.grid)
    type_ = int(config.criterion.get("type", 1))

    def point(value: float) -> float:
        cfg = _apply_sweep_value(config, value)
        signal = _build_pair(cfg.signal)
        lo_c = _build_lo(cfg.lo, "c")
        lo_d = _build_lo(cfg.lo, "d")
        return fluctuation_delta_m(signal, lo_c, lo_d, type_)

    values = _parallel_map(point, grid, jobs)
    csv_path = out_dir / f"{name}.csv"
    write_csv(
        csv_path,
        [config.sweep.parameter, "delta_m_sq"],
        [[g, v] for g, v in zip(grid, values)],
        "experiment=fluctuation_sweep",
    )
    outputs = [csv_path.name]
    if make_plots:
        png = out_dir / f"{name}.png"
        plots.plot_sweep(
            png,
            grid,
            {"delta_m_sq": values},
            xlabel=config.sweep.parameter,
            ylabel=r"$\Delta_m^2$",
            title="measurement fluctuation vs LO amplitude",
        )
        outputs.append(png.name)
    return outputs


def _run_second_order_compare(config, out_dir, name, jobs, make_plots) -> list[str]:
    grid = list(config.sweep.grid)

    def point(value: float) -> tuple[CriterionResult, CriterionResult]:
        cfg = _apply_sweep_value(config, value)
        signal = _build_pair(cfg.signal)
        lo_c = _build_lo(cfg.lo, "c")
        lo_d = _build_lo(cfg.lo, "d")
        r16 = measured_second_order(signal, lo_c, lo_d, "eq16")
        r18 = measured_second_order(signal, lo_c, lo_d, "eq18")
        return r16, r18

    results = _parallel_map(point, grid, jobs)
    rows = [
        [v, r16.lhs, r16.rhs, r18.rhs, r16.margin, r18.margin]
        for v, (r16, r18) in zip(grid, results)
    ]
    csv_path = out_dir / f"{name}.csv"
    write_csv(
        csv_path,
        [config.sweep.parameter, "lhs", "rhs_eq16", "rhs_eq18", "margin_eq16", "margin_eq18"],
        rows,
        "experiment=second_order_compare",
    )
    outputs = [csv_path.name]
    if make_plots:
        png = out_dir / f"{name}.png"
        plots.plot_sweep(
            png,
            grid,
            {
                "lhs": [r[0].lhs for r in results],
                "rhs (number-moment bound)": [r[0].rhs for r in results],
                "rhs (intensity bound)": [r[1].rhs for r in results],
            },
            xlabel=config.sweep.parameter,
            ylabel="moment value",
            title="second-order criterion comparison",
            logy=True,
        )
        outputs.append(png.name)
    return outputs


def _run_spin_trajectory(config, out_dir, name, jobs, make_plots) -> list[str]:
    spin = config.spin or SpinRun()
    alpha = math.sqrt(spin.pump_mean_n)
    traj = evolve(alpha, spin.grid(), spin.resolved_n_max())
    rows = [
        [
            float(t),
            float(pop),
            float(pc.real),
            float(pc.imag),
            float(margin),
        ]
        for t, pop, pc, margin in zip(
            traj.lambda_t, traj.population, traj.pair_corr, traj.criterion_margin
        )
    ]
    csv_path = out_dir / f"{name}.csv"
    write_csv(
        csv_path,
        ["lambda_t", "pop1", "pair_corr_re", "pair_corr_im", "margin"],
        rows,
        "experiment=spin_bec_trajectory",
    )
    dist_rows = []
    for it, t in enumerate(traj.lambda_t):
        for k in range(traj.number_dist.shape[1]):
            dist_rows.append([float(t), k, float(traj.number_dist[it, k])])
    dist_path = out_dir / f"{name}_number_dist.csv"
    write_csv(dist_path, ["lambda_t", "k", "p"], dist_rows, "experiment=spin_bec_trajectory")
    outputs = [csv_path.name, dist_path.name]
    if make_plots:
        png = out_dir / f"{name}.png"
        plots.plot_trajectory(
            png,
            traj.lambda_t,
            traj.population,
            traj.criterion_margin,
            title=f"pair production, <n_0(0)> = {spin.pump_mean_n:g}",
        )
        outputs.append(png.name)
    return outputs


def _run_sample(config, out_dir, name, jobs, make_plots) -> list[str]:
    signal = _build_pair(config.signal)
    lo_c = _build_lo(config.lo, "c")
    lo_d = _build_lo(config.lo, "d")
    results = sample_first_order(signal, lo_c, lo_d, config.budget, config.seed)
    rows = []
    summary = {}
    outcome_map = {}
    for setting_id, res in sorted(results.items()):
        summary[setting_id] = {
            "mean": res.mean,
            "stderr": res.stderr,
            "samples": res.samples,
            "excess_noise": res.excess_noise,
            "exact_mean": res.exact_mean,
        }
        outcome_map[setting_id] = res.outcomes
        for i, outcome in enumerate(res.outcomes):
            rows.append([setting_id, i, float(outcome)])
    csv_path = out_dir / f"{name}_samples.csv"
    write_csv(csv_path, ["setting_id", "sample_index", "outcome"], rows, "experiment=sample_run")
    json_path = out_dir / f"{name}_summary.json"
    json_path.write_text(json.dumps({"seed": config.seed, "settings": summary}, indent=2) + "\n")
    outputs = [csv_path.name, json_path.name]
    if make_plots:
        png = out_dir / f"{name}.png"
        plots.plot_histogram(png, outcome_map, title="sampled first-order settings")
        outputs.append(png.name)
    return outputs
