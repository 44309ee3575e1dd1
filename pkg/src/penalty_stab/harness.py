"""Experiment harness: config validation, runners, and CSV/SVG emission.

An experiment is described by a single JSON config file and produces CSV
files whose leading ``#`` comment block carries the fully resolved config,
a version string, and the admissibility/rate report, so every output is
reproducible from its own metadata.  There is no randomness anywhere in the
pipeline: re-running a config yields byte-identical numeric columns.
"""

from __future__ import annotations

import json
import math
import subprocess
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .analysis import (
    ConvergenceReport,
    ConvergenceRow,
    EpsilonStudyReport,
    epsilon_cauchy_study,
    error_vs_reference,
    observed_orders,
)
from .errors import ConfigError
from .fem import assemble, make_uniform_mesh
from .params import ModelParams, rate_report
from .solver import TimeGrid, simulate

KINDS = ("decay", "space_convergence", "epsilon_study")

INITIAL_PROFILES: dict[str, Callable] = {
    "sin_pi_x": lambda x: np.sin(np.pi * np.asarray(x, dtype=float)),
    "x_one_minus_x": lambda x: np.asarray(x, dtype=float) * (1.0 - np.asarray(x, dtype=float)),
    "zero": lambda x: np.zeros_like(np.asarray(x, dtype=float)),
}

GAIN_RULES: dict[str, Callable[[float], float]] = {
    "sqrt_eps": math.sqrt,
    "sqrt_2eps": lambda eps: math.sqrt(2.0 * eps),
}


@dataclass(frozen=True)
class HarnessResult:
    """Files written by a runner, run failures, and non-fatal notes.

    ``failures`` are solver-level problems that make the run incomplete;
    ``notes`` record best-effort extras (SVG rendering) that went wrong
    without affecting the CSV outputs.
    """

    files: tuple[Path, ...]
    failures: tuple[str, ...]
    notes: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.failures


# ---------------------------------------------------------------------------
# config loading / validation


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def apply_overrides(cfg: dict, overrides: Sequence[str]) -> dict:
    """Apply ``dotted.path=value`` overrides; values parse as JSON when possible."""
    cfg = json.loads(json.dumps(cfg))  # deep copy
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = value
    return cfg


def _get(cfg: dict, path: str, default=...):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if default is ...:
                raise ConfigError(f"missing required config field {path!r}")
            return default
        node = node[part]
    return node


def _number(cfg: dict, path: str, *, default=..., positive=False,
            nonnegative=False) -> float:
    value = _get(cfg, path, default)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"{path}: must be positive, got {value!r}")
    if nonnegative and not value >= 0:
        raise ConfigError(f"{path}: must be non-negative, got {value!r}")
    return float(value)


def _integer(cfg: dict, path: str, *, default=..., minimum=None) -> int:
    value = _get(cfg, path, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _choice(cfg: dict, path: str, choices, *, default=...):
    value = _get(cfg, path, default)
    if value not in choices:
        raise ConfigError(f"{path}: expected one of {sorted(choices)}, got {value!r}")
    return value


def _gain_rule(value, path: str) -> tuple[Callable[[float], float], str]:
    if isinstance(value, str):
        if value not in GAIN_RULES:
            raise ConfigError(f"{path}: unknown gain rule {value!r}; "
                              f"expected one of {sorted(GAIN_RULES)} or a number")
        return GAIN_RULES[value], value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if value < 0:
            raise ConfigError(f"{path}: constant gain must be >= 0, got {value!r}")
        return (lambda _eps, _r=float(value): _r), f"constant:{float(value):.17g}"
    raise ConfigError(f"{path}: expected a rule name or a number, got {value!r}")


def _time_grid(cfg: dict) -> TimeGrid:
    T = _number(cfg, "time.T", positive=True)
    if _get(cfg, "time.n_steps", None) is not None:
        n_steps = _integer(cfg, "time.n_steps", minimum=1)
        return TimeGrid(k=T / n_steps, n_steps=n_steps)
    return TimeGrid.from_final_time(_number(cfg, "time.k", positive=True), T)


def validate_config(cfg: dict, kind: str) -> dict:
    """Validate a raw config against ``kind`` and return it with defaults filled.

    The returned dict is the "resolved" config echoed into output metadata;
    re-running it reproduces the experiment exactly.
    """
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    declared = _choice(cfg, "experiment.kind", KINDS)
    if declared != kind:
        raise ConfigError(f"experiment.kind: config declares {declared!r}, "
                          f"but the {kind!r} runner was invoked")

    resolved: dict = {"experiment": {"kind": kind}}
    exp = resolved["experiment"]
    model = {
        "nu": _number(cfg, "model.nu", positive=True),
        "alpha": _number(cfg, "model.alpha", positive=True),
        "delta": _number(cfg, "model.delta", nonnegative=True),
    }
    resolved["model"] = model
    grid = _time_grid(cfg)
    resolved["time"] = {"T": grid.T, "n_steps": grid.n_steps, "k": grid.k}
    resolved["initial"] = _choice(cfg, "initial", INITIAL_PROFILES)
    resolved["projection"] = _choice(cfg, "projection", ("l2", "interpolation"), default="l2")
    resolved["newton"] = {
        "tol": _number(cfg, "newton.tol", default=1e-12, positive=True),
        "max_iter": _integer(cfg, "newton.max_iter", default=25, minimum=1),
    }
    exp["svg"] = bool(_get(cfg, "experiment.svg", True))

    if kind == "decay":
        model["epsilon"] = _number(cfg, "model.epsilon", positive=True)
        r_raw = _get(cfg, "model.r")
        if isinstance(r_raw, str):
            rule, name = _gain_rule(r_raw, "model.r")
            model["r"] = rule(model["epsilon"])
            model["r_rule"] = name
        else:
            model["r"] = _number(cfg, "model.r", nonnegative=True)
        resolved["mesh"] = {"n_elements": _integer(cfg, "mesh.n_elements", minimum=2)}
        exp["include_uncontrolled"] = bool(_get(cfg, "experiment.include_uncontrolled", False))
        exp["implicit_control"] = bool(_get(cfg, "experiment.implicit_control", True))

    elif kind == "space_convergence":
        ns = _get(cfg, "experiment.n_elements_list")
        if (not isinstance(ns, list) or len(ns) < 2
                or any(not isinstance(n, int) or isinstance(n, bool) or n < 2 for n in ns)):
            raise ConfigError("experiment.n_elements_list: expected a list of >= 2 integers >= 2")
        for a, b in zip(ns, ns[1:]):
            if b != 2 * a:
                raise ConfigError("experiment.n_elements_list: element counts must double "
                                  f"between rows, got {a} -> {b}")
        ref = _integer(cfg, "experiment.reference_n_elements", default=2048, minimum=4)
        if ref <= max(ns) or any(ref % n for n in ns):
            raise ConfigError("experiment.reference_n_elements: must exceed every row "
                              "and be divisible by each element count (nested meshes)")
        exp["n_elements_list"] = ns
        exp["reference_n_elements"] = ref
        exp["epsilon_rule"] = {
            "c": _number(cfg, "experiment.epsilon_rule.c", default=0.01, positive=True),
            "l": _number(cfg, "experiment.epsilon_rule.l", positive=True),
        }
        _, name = _gain_rule(_get(cfg, "experiment.gain_rule", "sqrt_eps"), "experiment.gain_rule")
        exp["gain_rule"] = _get(cfg, "experiment.gain_rule", "sqrt_eps")
        exp["gain_rule_resolved"] = name

    else:  # epsilon_study
        eps_list = _get(cfg, "experiment.epsilons")
        if (not isinstance(eps_list, list) or not eps_list
                or any(not isinstance(e, (int, float)) or isinstance(e, bool) or e <= 0
                       for e in eps_list)):
            raise ConfigError("experiment.epsilons: expected a non-empty list of positive numbers")
        eps_list = [float(e) for e in eps_list]
        if any(b > a for a, b in zip(eps_list, eps_list[1:])):
            raise ConfigError("experiment.epsilons: must be descending")
        exp["epsilons"] = eps_list
        _, name = _gain_rule(_get(cfg, "experiment.gain_rule", "sqrt_eps"), "experiment.gain_rule")
        exp["gain_rule"] = _get(cfg, "experiment.gain_rule", "sqrt_eps")
        exp["gain_rule_resolved"] = name
        resolved["mesh"] = {"n_elements": _integer(cfg, "mesh.n_elements", minimum=2)}

    return resolved


# ---------------------------------------------------------------------------
# CSV / SVG emission


@lru_cache(maxsize=1)
def version_string() -> str:
    base = f"penalty-stab {__version__}"
    try:
        proc = subprocess.run(["git", "describe", "--always", "--dirty"],
                              capture_output=True, text=True, timeout=5,
                              cwd=Path(__file__).resolve().parent)
        if proc.returncode == 0 and proc.stdout.strip():
            return f"{base} ({proc.stdout.strip()})"
    except (OSError, subprocess.SubprocessError):
        pass
    return base


def format_float(value) -> str:
    """17 significant digits: exact round-trip for binary64."""
    if value is None:
        return ""
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return f"{value:.17g}"


def emit_csv(path, header: Sequence[str], rows: Sequence[Sequence],
             metadata: dict) -> Path:
    """Write a CSV with a '#'-prefixed metadata block before the header.

    Floats are serialized with 17 significant digits; ``None`` becomes an
    empty cell.  Metadata values are rendered as single-line JSON.
    """
    path = Path(path)
    lines = [f"# version: {version_string()}"]
    for key, value in metadata.items():
        lines.append(f"# {key}: {json.dumps(value, separators=(', ', ': '))}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(format_float(cell) if isinstance(cell, float) or cell is None
                              else str(cell) for cell in row))
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Parse a file written by :func:`emit_csv` (metadata, header, raw cells)."""
    metadata: dict[str, str] = {}
    header: list[str] = []
    rows: list[list[str]] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            key, _, value = body.partition(":")
            metadata[key.strip()] = value.strip()
        elif not header:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return metadata, header, rows


def emit_svg(path, x: np.ndarray, series: dict[str, np.ndarray], *,
             title: str = "", x_label: str = "", y_label: str = "",
             log_x: bool = False, log_y: bool = False) -> Path:
    """Minimal SVG 1.1 polyline chart; a decoration, never load-bearing."""
    width, height, margin = 640, 420, 58
    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

    def transform(values, log_scale):
        values = np.asarray(values, dtype=float)
        if log_scale:
            values = np.where(values > 0.0, values, np.nan)
            return np.log10(values)
        return values

    tx = transform(x, log_x)
    tys = {name: transform(vals, log_y) for name, vals in series.items()}
    finite_y = np.concatenate([v[np.isfinite(v)] for v in tys.values()] or [np.array([0.0])])
    if finite_y.size == 0:
        finite_y = np.array([0.0])
    x_lo, x_hi = float(np.nanmin(tx)), float(np.nanmax(tx))
    y_lo, y_hi = float(np.min(finite_y)), float(np.max(finite_y))
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0

    def px(value):
        return margin + (value - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def py(value):
        return height - margin - (value - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    def label(value, log_scale):
        return f"{10.0 ** value if log_scale else value:.4g}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" '
        f'stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-size="12">{x_label}</text>',
        f'<text x="16" y="{height / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {height / 2:.1f})">{y_label}</text>',
        f'<text x="{margin}" y="{height - margin + 16}" font-size="10">'
        f'{label(x_lo, log_x)}</text>',
        f'<text x="{width - margin}" y="{height - margin + 16}" text-anchor="end" '
        f'font-size="10">{label(x_hi, log_x)}</text>',
        f'<text x="{margin - 4}" y="{height - margin}" text-anchor="end" font-size="10">'
        f'{label(y_lo, log_y)}</text>',
        f'<text x="{margin - 4}" y="{margin + 4}" text-anchor="end" font-size="10">'
        f'{label(y_hi, log_y)}</text>',
    ]
    for idx, (name, ty) in enumerate(tys.items()):
        mask = np.isfinite(tx) & np.isfinite(ty)
        points = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tx[mask], ty[mask]))
        color = palette[idx % len(palette)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                     f'points="{points}"/>')
        parts.append(f'<text x="{width - margin - 4}" y="{margin + 14 + 14 * idx}" '
                     f'text-anchor="end" font-size="11" fill="{color}">{name}</text>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# runners


def _common_pieces(resolved: dict):
    grid = TimeGrid(k=resolved["time"]["k"], n_steps=resolved["time"]["n_steps"])
    profile = INITIAL_PROFILES[resolved["initial"]]
    newton = resolved["newton"]
    return grid, profile, newton["tol"], newton["max_iter"]


def _try_svg(files: list[Path], notes: list[str], path, x, series, **kwargs) -> None:
    try:
        files.append(emit_svg(path, x, series, **kwargs))
    except Exception as exc:  # decoration only; never fail the run for it
        notes.append(f"svg {path}: {exc}")


def run_decay_experiment(resolved: dict, out_dir) -> HarnessResult:
    """Simulate the controlled scheme (and optionally the pinned baseline).

    Emits one CSV per variant with columns ``t, l2_norm, linf_norm, control``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid, profile, tol, max_iter = _common_pieces(resolved)
    model = resolved["model"]
    params = ModelParams(nu=model["nu"], alpha=model["alpha"], delta=model["delta"],
                         r=model["r"], epsilon=model["epsilon"])
    mesh = make_uniform_mesh(resolved["mesh"]["n_elements"])
    variants = ["penalized_feedback"]
    if resolved["experiment"]["include_uncontrolled"]:
        variants.append("uncontrolled_dirichlet")

    files: list[Path] = []
    failures: list[str] = []
    notes: list[str] = []
    rates = rate_report(params).as_dict()
    for variant in variants:
        traj = simulate(params, mesh, profile, grid, variant,
                        projection=resolved["projection"], newton_tol=tol,
                        newton_max_iter=max_iter,
                        implicit_control=resolved["experiment"]["implicit_control"])
        metadata = {"config": resolved, "rates": rates, "variant": variant}
        if traj.failed_at is not None:
            msg = (f"{variant}: newton did not converge at step {traj.failed_at} "
                   f"(residual {traj.step_reports[-1].final_residual_norm:.3e})")
            failures.append(msg)
            metadata["failure"] = msg
        rows = list(zip(traj.times.tolist(), traj.l2.tolist(),
                        traj.linf.tolist(), traj.controls.tolist()))
        files.append(emit_csv(out_dir / f"decay_{variant}.csv",
                              ["t", "l2_norm", "linf_norm", "control"], rows, metadata))
        if resolved["experiment"]["svg"] and traj.n_recorded > 1:
            log_ok = bool(np.all(traj.l2 > 0.0))
            _try_svg(files, notes, out_dir / f"decay_{variant}.svg",
                     traj.times, {"l2_norm": traj.l2}, title=f"decay ({variant})",
                     x_label="t", y_label="l2 norm", log_y=log_ok)
    return HarnessResult(files=tuple(files), failures=tuple(failures), notes=tuple(notes))


def run_space_convergence(resolved: dict, out_dir) -> HarnessResult:
    """Grid-refinement study against fine references on nested meshes.

    Each row solves at ``(h, epsilon = c * h**l)``.  State errors at the
    final time are measured against a reference run on the reference mesh
    with the row's own epsilon and gain (same continuous penalized problem,
    so the comparison isolates the space discretization error).  Control
    errors are sup-over-time distances to the control of one shared
    reference run whose epsilon and gain follow the same rule evaluated at
    the reference mesh size; that comparison tracks the gain rule's own
    scaling and reproduces the expected ``l/2`` control orders.  Observed
    orders are appended between rows.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid, profile, tol, max_iter = _common_pieces(resolved)
    model = resolved["model"]
    exp = resolved["experiment"]
    rule_c, rule_l = exp["epsilon_rule"]["c"], exp["epsilon_rule"]["l"]
    gain, _ = _gain_rule(exp["gain_rule"], "experiment.gain_rule")
    n_ref = exp["reference_n_elements"]
    ref_mesh = make_uniform_mesh(n_ref)

    files: list[Path] = []
    failures: list[str] = []
    notes: list[str] = []
    raw_rows = []
    rates_per_row = []

    eps_ref = rule_c * (1.0 / n_ref) ** rule_l
    control_ref_params = ModelParams(nu=model["nu"], alpha=model["alpha"],
                                     delta=model["delta"], r=float(gain(eps_ref)),
                                     epsilon=eps_ref)
    control_reference = simulate(control_ref_params, ref_mesh, profile, grid,
                                 projection=resolved["projection"], newton_tol=tol,
                                 newton_max_iter=max_iter)
    if control_reference.failed_at is not None:
        failures.append(f"control reference (epsilon={eps_ref:g}): newton failure "
                        f"at step {control_reference.failed_at}")

    for n in exp["n_elements_list"]:
        if failures:
            break
        h = 1.0 / n
        eps = rule_c * h ** rule_l
        params = ModelParams(nu=model["nu"], alpha=model["alpha"], delta=model["delta"],
                             r=float(gain(eps)), epsilon=eps)
        rates_per_row.append({"h": h, "epsilon": eps, "r": params.r,
                              "admissible": rate_report(params).admissible})
        mesh = make_uniform_mesh(n)
        coarse = simulate(params, mesh, profile, grid, projection=resolved["projection"],
                          newton_tol=tol, newton_max_iter=max_iter)
        reference = simulate(params, ref_mesh, profile, grid,
                             projection=resolved["projection"], newton_tol=tol,
                             newton_max_iter=max_iter)
        if coarse.failed_at is not None or reference.failed_at is not None:
            failures.append(f"h=1/{n}: newton failure "
                            f"(coarse step {coarse.failed_at}, reference step {reference.failed_at})")
            break
        err_l2, err_linf = error_vs_reference(coarse.states[-1], reference.states[-1],
                                              assemble(mesh), ref_mesh)
        control_err = float(np.max(np.abs(coarse.controls - control_reference.controls)))
        raw_rows.append((h, eps, err_l2, err_linf, control_err))

    hs = [row[0] for row in raw_rows]
    report_rows: list[ConvergenceRow] = []
    if raw_rows:
        if len(raw_rows) >= 2:
            orders_l2 = observed_orders([r[2] for r in raw_rows], hs)
            orders_linf = observed_orders([r[3] for r in raw_rows], hs)
            orders_ctrl = observed_orders([r[4] for r in raw_rows], hs)
        else:
            orders_l2 = orders_linf = orders_ctrl = np.array([])
        for j, (h, eps, e2, einf, ec) in enumerate(raw_rows):
            report_rows.append(ConvergenceRow(
                h=h, epsilon=eps, k=grid.k, error_l2=e2, error_linf=einf,
                order_l2=None if j == 0 else float(orders_l2[j - 1]),
                order_linf=None if j == 0 else float(orders_linf[j - 1]),
                control_error_linf=ec,
                control_order_linf=None if j == 0 else float(orders_ctrl[j - 1]),
            ))
    report = ConvergenceReport(
        rows=tuple(report_rows),
        reference_description=f"state: same scheme on n={n_ref} with the row's epsilon and "
                              f"gain; control: shared n={n_ref} run at epsilon={eps_ref:.6g}",
    )
    metadata = {"config": resolved, "reference": report.reference_description,
                "rates_per_row": rates_per_row}
    if failures:
        metadata["failures"] = failures
    header = ["h", "epsilon", "k", "error_l2", "order_l2", "error_linf", "order_linf",
              "control_error_linf", "control_order_linf"]
    rows = [[r.h, r.epsilon, r.k, r.error_l2, r.order_l2, r.error_linf, r.order_linf,
             r.control_error_linf, r.control_order_linf] for r in report.rows]
    files.append(emit_csv(out_dir / "convergence.csv", header, rows, metadata))
    if resolved["experiment"]["svg"] and len(report.rows) >= 2:
        _try_svg(files, notes, out_dir / "convergence.svg",
                 np.array(hs),
                 {"error_l2": np.array([r.error_l2 for r in report.rows]),
                  "error_linf": np.array([r.error_linf for r in report.rows]),
                  "control_error_linf": np.array([r.control_error_linf for r in report.rows])},
                 title="errors vs h", x_label="h", y_label="error",
                 log_x=True, log_y=True)
    return HarnessResult(files=tuple(files), failures=tuple(failures), notes=tuple(notes))


def run_epsilon_study(resolved: dict, out_dir) -> HarnessResult:
    """Penalty-continuation study on a fixed space-time grid."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid, profile, tol, max_iter = _common_pieces(resolved)
    model = resolved["model"]
    exp = resolved["experiment"]
    gain, _ = _gain_rule(exp["gain_rule"], "experiment.gain_rule")
    mesh = make_uniform_mesh(resolved["mesh"]["n_elements"])
    base = ModelParams(nu=model["nu"], alpha=model["alpha"], delta=model["delta"],
                       r=0.0, epsilon=exp["epsilons"][0])

    report: EpsilonStudyReport = epsilon_cauchy_study(
        base, mesh, grid, exp["epsilons"], gain, y0=profile,
        projection=resolved["projection"], newton_tol=tol,
        newton_max_iter=max_iter)

    failures = [f"epsilon={row.epsilon:g}: newton failure" for row in report.rows if row.failed]
    notes: list[str] = []
    rates_per_row = []
    for row in report.rows:
        params = ModelParams(nu=model["nu"], alpha=model["alpha"], delta=model["delta"],
                             r=row.r, epsilon=row.epsilon)
        rates_per_row.append({"epsilon": row.epsilon, "r": row.r,
                              "admissible": rate_report(params).admissible})
    metadata = {"config": resolved, "rates_per_row": rates_per_row}
    if failures:
        metadata["failures"] = failures
    header = ["epsilon", "r", "state_l2", "state_linf", "control_linf",
              "diff_l2", "diff_linf", "control_diff_linf",
              "state_l2_sup", "state_linf_sup", "failed"]
    rows = [[row.epsilon, row.r, row.state_l2, row.state_linf, row.control_linf,
             row.diff_l2, row.diff_linf, row.control_diff_linf,
             row.state_l2_sup, row.state_linf_sup, int(row.failed)]
            for row in report.rows]
    files: list[Path] = [emit_csv(out_dir / "epsilon_study.csv", header, rows, metadata)]
    if resolved["experiment"]["svg"] and len(report.rows) >= 2:
        eps = np.array([row.epsilon for row in report.rows])
        diffs = np.array([np.nan if row.diff_l2 is None else row.diff_l2
                          for row in report.rows])
        controls = np.array([row.control_linf for row in report.rows])
        _try_svg(files, notes, out_dir / "epsilon_study.svg", eps,
                 {"diff_l2": diffs, "control_linf": controls},
                 title="continuation in epsilon", x_label="epsilon", y_label="value",
                 log_x=True, log_y=True)
    return HarnessResult(files=tuple(files), failures=tuple(failures), notes=tuple(notes))


RUNNERS = {
    "decay": run_decay_experiment,
    "space_convergence": run_space_convergence,
    "epsilon_study": run_epsilon_study,
}
