"""Named batch experiments: parameter sweeps written as CSV plus a metadata
sidecar (resolved config, seed, code version). Outputs are byte-deterministic
for a fixed config and seed; no wall-clock state enters any file.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from . import __version__
from .aoi import QueueParams, paoi_np_closed_form, paoi_p_closed_form, simulate_queue
from .config import EXPERIMENT_NAMES, ExperimentSpec, SweepAxis
from .jsp import jsp_lower_bound, jsp_monte_carlo, jsp_upper_bound, select_regime
from .model import HarvesterModel, NetworkConfig, db_to_watt
from .optimizer import XiObjective, optimize_xi
from .quadrature import QuadratureSpec

__all__ = ["SweepResult", "run_experiment", "write_csv", "write_svg", "UnknownExperimentError"]

THREADS_ENV = "AOI_EH_THREADS"


class UnknownExperimentError(ValueError):
    def __init__(self, name: str):
        super().__init__(f"unknown experiment {name!r}; valid names: {', '.join(EXPERIMENT_NAMES)}")
        self.name = name


@dataclass(frozen=True)
class SweepResult:
    experiment: str
    axis_name: str
    axis: list[float]
    series: dict[str, list[float]]
    metadata: dict


def _fmt(x) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(x) if isinstance(x, float) else str(x)


def write_csv(result: SweepResult, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([result.axis_name, *result.series.keys()])
        for i, x in enumerate(result.axis):
            writer.writerow([_fmt(x)] + [_fmt(vals[i]) for vals in result.series.values()])
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(result.metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _thread_cap() -> int | None:
    cap = os.environ.get(THREADS_ENV)
    if cap is None:
        return None
    try:
        cap_n = int(cap)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    if cap_n < 1:
        raise ValueError(f"{THREADS_ENV} must be >= 1")
    return cap_n


def _worker_count(n_points: int) -> int:
    cap = _thread_cap()
    if cap is None:
        return 1
    return min(cap, max(1, n_points))


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def write_svg(result: SweepResult, path: Path, width: int = 640, height: int = 420) -> None:
    """Optional post-step: a plain line chart of every finite series."""
    pad = 56
    xs = result.axis
    finite = [v for vals in result.series.values() for v in vals if math.isfinite(v)]
    if not xs or not finite:
        raise ValueError("nothing to plot")
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(finite), max(finite)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def px(x):
        return pad + (x - x_lo) / (x_hi - x_lo) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y_lo) / (y_hi - y_lo) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" font-size="13">{result.axis_name}</text>',
        f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" font-size="13">{result.experiment}</text>',
        f'<text x="{pad}" y="{height - pad + 16}" font-size="11">{x_lo:g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="end" font-size="11">{x_hi:g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end" font-size="11">{y_lo:g}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end" font-size="11">{y_hi:g}</text>',
    ]
    for i, (name, vals) in enumerate(result.series.items()):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        pts = " ".join(f"{px(x):.1f},{py(v):.1f}" for x, v in zip(xs, vals) if math.isfinite(v))
        if pts:
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{width - pad + 4}" y="{pad + 14 * i + 10}" font-size="11" '
                     f'fill="{color}">{name}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")


def _map_points(fn, points):
    """Evaluate sweep points, optionally on a thread pool; order preserved."""
    workers = _worker_count(len(points))
    if workers == 1:
        return [fn(p) for p in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, points))


def _nl_config(cfg: NetworkConfig) -> NetworkConfig:
    if cfg.harvester.kind == "nonlinear":
        return cfg
    return replace(cfg, harvester=HarvesterModel(kind="nonlinear",
                                                 pr_min=cfg.harvester.pr_min,
                                                 pr_max=cfg.harvester.pr_max))


def _jsp_point(cfg: NetworkConfig, trials: int, seed: int, spec: QuadratureSpec) -> dict[str, float]:
    lin = replace(cfg, harvester=HarvesterModel(kind="linear"))
    nl = _nl_config(cfg)
    out = {
        "mc": jsp_monte_carlo(lin, trials=trials, seed=seed).value,
        "lower": jsp_lower_bound(lin, regime="linear", spec=spec).value,
        "upper": jsp_upper_bound(lin, regime="linear", spec=spec).value,
    }
    nl_regime = select_regime(nl)
    out["mc_nl"] = jsp_monte_carlo(nl, trials=trials, seed=seed).value
    out["lower_nl"] = jsp_lower_bound(nl, regime=nl_regime, spec=spec).value
    out["upper_nl"] = jsp_upper_bound(nl, regime=nl_regime, spec=spec).value
    return out


_JSP_COLUMNS = ("mc", "lower", "upper", "mc_nl", "lower_nl", "upper_nl")


def _collect(rows: list[dict[str, float]], columns) -> dict[str, list[float]]:
    return {c: [row[c] for row in rows] for c in columns}


def _paoi_value(closed_form, mu: float, p_a: float) -> float:
    if mu <= 0.0:
        return math.inf
    return closed_form(mu, p_a)


def _run_jsp_sweep(cfg: NetworkConfig, spec: ExperimentSpec, axis: SweepAxis, vary) -> SweepResult:
    qspec = QuadratureSpec()
    values = axis.values()

    def point(x: float) -> dict[str, float]:
        return _jsp_point(vary(cfg, x), spec.trials, spec.seed, qspec)

    rows = _map_points(point, values)
    return SweepResult(
        experiment=spec.name,
        axis_name=_axis_label(spec.name, axis),
        axis=values,
        series=_collect(rows, _JSP_COLUMNS),
        metadata=_metadata(cfg, spec, axis),
    )


def _axis_label(name: str, axis: SweepAxis) -> str:
    base = {"jsp-vs-power": "p_t", "xistar-vs-power": "p_t",
            "jsp-vs-radius": "radius", "xistar-vs-radius": "radius",
            "jsp-vs-xi": "xi", "paoi-vs-xi": "xi", "queue-path": "slot"}[name]
    return f"{base}_db" if axis is not None and axis.unit.lower() == "db" else base


def _vary_power(cfg: NetworkConfig, x: float, unit: str) -> NetworkConfig:
    return replace(cfg, p_t=db_to_watt(x) if unit.lower() == "db" else x)


def _metadata(cfg: NetworkConfig, spec: ExperimentSpec, axis: SweepAxis | None) -> dict:
    meta = {
        "experiment": spec.name,
        "version": __version__,
        "seed": spec.seed,
        "trials": spec.trials,
        "network": dataclasses.asdict(cfg),
        "queue": dataclasses.asdict(spec.queue),
    }
    if axis is not None:
        meta["sweep"] = dataclasses.asdict(axis)
    return meta


def run_experiment(cfg: NetworkConfig, spec: ExperimentSpec, plot: bool = False) -> list[Path]:
    """Run one named experiment; returns the paths written."""
    if spec.name not in EXPERIMENT_NAMES:
        raise UnknownExperimentError(spec.name)
    _thread_cap()  # fail fast on a malformed worker cap
    out_dir = Path(spec.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    axis = spec.resolved_sweep()

    if spec.name == "jsp-vs-power":
        result = _run_jsp_sweep(cfg, spec, axis, lambda c, x: _vary_power(c, x, axis.unit))
    elif spec.name == "jsp-vs-radius":
        result = _run_jsp_sweep(cfg, spec, axis, lambda c, x: replace(c, radius=x))
    elif spec.name == "jsp-vs-xi":
        result = _run_jsp_sweep(cfg, spec, axis, lambda c, x: replace(c, xi=x))
    elif spec.name == "paoi-vs-xi":
        result = _run_paoi_sweep(cfg, spec, axis)
    elif spec.name in ("xistar-vs-power", "xistar-vs-radius"):
        result = _run_xistar_sweep(cfg, spec, axis)
    else:
        result = _run_queue_path(cfg, spec)

    path = out_dir / f"{spec.name}.csv"
    write_csv(result, path)
    written = [path, path.with_suffix(path.suffix + ".meta.json")]
    if plot:
        svg_path = out_dir / f"{spec.name}.svg"
        write_svg(result, svg_path)
        written.append(svg_path)
    return written


def _run_paoi_sweep(cfg: NetworkConfig, spec: ExperimentSpec, axis: SweepAxis) -> SweepResult:
    qspec = QuadratureSpec()
    values = axis.values()
    p_a = spec.queue.p_a if spec.queue.p_a is not None else cfg.p_a
    lin = replace(cfg, harvester=HarvesterModel(kind="linear"))
    nl = _nl_config(cfg)

    def point(x: float) -> dict[str, float]:
        mu_lin = jsp_lower_bound(replace(lin, xi=x), regime="linear", spec=qspec).value
        nl_x = replace(nl, xi=x)
        mu_nl = jsp_lower_bound(nl_x, regime=select_regime(nl_x), spec=qspec).value
        return {
            "np_upper": _paoi_value(paoi_np_closed_form, mu_lin, p_a),
            "p_upper": _paoi_value(paoi_p_closed_form, mu_lin, p_a),
            "np_upper_nl": _paoi_value(paoi_np_closed_form, mu_nl, p_a),
            "p_upper_nl": _paoi_value(paoi_p_closed_form, mu_nl, p_a),
        }

    rows = _map_points(point, values)
    return SweepResult(spec.name, "xi", values,
                       _collect(rows, ("np_upper", "p_upper", "np_upper_nl", "p_upper_nl")),
                       _metadata(cfg, spec, axis))


def _run_xistar_sweep(cfg: NetworkConfig, spec: ExperimentSpec, axis: SweepAxis) -> SweepResult:
    values = axis.values()
    qspec = QuadratureSpec(rel_tol=1e-5, abs_tol=1e-8)
    lin = replace(cfg, harvester=HarvesterModel(kind="linear"))

    def point(x: float) -> dict[str, float]:
        if spec.name == "xistar-vs-power":
            base = _vary_power(lin, x, axis.unit)
        else:
            base = replace(lin, radius=x)
        out = {}
        for column, kind in (("xi_star_jsp_lower", "max_jsp_lower"),
                             ("xi_star_paoi_np", "min_paoi_np_upper"),
                             ("xi_star_paoi_p", "min_paoi_p_upper")):
            opt = optimize_xi(XiObjective(kind=kind, cfg=base, spec=qspec), grid_step=0.05)
            out[column] = opt.xi_star
        return out

    rows = _map_points(point, values)
    return SweepResult(spec.name, _axis_label(spec.name, axis), values,
                       _collect(rows, ("xi_star_jsp_lower", "xi_star_paoi_np", "xi_star_paoi_p")),
                       _metadata(cfg, spec, axis))


def _run_queue_path(cfg: NetworkConfig, spec: ExperimentSpec) -> SweepResult:
    q = spec.queue
    mu = q.mu
    if mu is None:
        mu = jsp_lower_bound(cfg).value
        if mu <= 0.0:
            raise ValueError("derived per-slot success probability is zero; give [queue] mu explicitly")
    p_a = q.p_a if q.p_a is not None else cfg.p_a
    params = QueueParams(p_a=p_a, mu=mu, discipline=q.discipline, n_slots=q.n_slots, seed=spec.seed)
    trace, _ = simulate_queue(params)
    slots = list(range(1, q.n_slots + 1))
    return SweepResult("queue-path", "slot", [float(s) for s in slots],
                       {"aoi": [float(v) for v in trace.aoi_path]},
                       _metadata(cfg, spec, None) | {"mu": mu, "p_a": p_a})
