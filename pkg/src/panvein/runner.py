"""Scenario configuration, orchestration and file emission.

Configs are flat ``key = value`` text files with a strict key set; anything
unknown is rejected so a typo cannot silently fall back to a default.
Every emitted file lands in a manifest with a SHA-256 checksum, and two runs
with the same config and seed produce byte-identical CSVs.
"""
from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import evolution as evo
from .errors import ValidationError, StrictParseError
from .model import ModelParams, SigmaProfile, find_equilibrium
from .numerics import Grid
from .stability import assess_stability
from .steady_diffusion import eps_sweep, solve_eps_collocation
from .steady_transport import compatibility_residuals, solve_shooting

__all__ = ["ScenarioConfig", "ScenarioResult", "load_config", "parse_config",
           "echo_config", "run", "emit_profiles"]

MODES = ("equilibrium", "steady", "steady-eps", "stability", "evolve",
         "eps-sweep", "velocity-sweep")

CONFIG_KEYS = ("c", "eps", "L", "G_in", "a", "b", "d_i", "alpha1", "alpha2",
               "sigma.kind", "sigma.base", "sigma.end0", "sigma.endL",
               "sigma.vertex", "mode", "grid_n", "tol", "t_max")

TABLE_DEFAULTS = {
    "c": 4.2, "eps": 0.0, "L": 15.0, "G_in": 0.06, "a": 1e-5, "b": 9.0,
    "d_i": 0.04, "alpha1": 1.0, "alpha2": 2.0,
}

SIGMA_SLUGS = {
    "homogeneous": "homogeneous",
    "linear-increasing": "linear_inc",
    "linear-decreasing": "linear_dec",
    "quadratic": "quadratic",
    "reversed-quadratic": "reversed_quadratic",
    "custom-samples": "custom",
}

VELOCITY_SWEEP = (0.5, 3.0, 4.2, 9.0)
EPS_SWEEP_DEFAULT = (1e-1, 1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class ScenarioConfig:
    params: ModelParams
    sigma: SigmaProfile
    mode: str
    grid_n: int = 1501
    tol: float = 1e-8
    t_max: float = 500.0
    seed: int = 0
    workers: int = 1

    def grid(self) -> Grid:
        return Grid.uniform(self.params.L, self.grid_n)


@dataclass
class ScenarioResult:
    mode: str
    payload: dict
    provenance: str
    timing: dict[str, float] = field(default_factory=dict)
    manifest: list[dict] = field(default_factory=list)


def _default_sigma(kind: str, base: float, end0, endL, vertex,
                   length: float) -> SigmaProfile:
    if kind == "homogeneous":
        return SigmaProfile.homogeneous(base, length)
    if kind in ("linear-increasing", "linear-decreasing"):
        if end0 is None or endL is None:
            end0, endL = (10.0, 20.0) if kind == "linear-increasing" else (20.0, 10.0)
        profile = SigmaProfile(kind=kind, length=length, base=0.5 * (end0 + endL),
                               end0=end0, endL=endL)
        if kind == "linear-increasing" and endL < end0:
            raise ValidationError("linear-increasing needs endL >= end0", "sigma.endL")
        if kind == "linear-decreasing" and endL > end0:
            raise ValidationError("linear-decreasing needs endL <= end0", "sigma.endL")
        return profile
    if kind in ("quadratic", "reversed-quadratic"):
        if end0 is None or endL is None:
            end0, endL = (20.0, 20.0) if kind == "quadratic" else (10.0, 10.0)
        if vertex is None:
            vertex = 10.0 if kind == "quadratic" else 20.0
        mid = 0.5 * (end0 + endL)
        if kind == "quadratic" and vertex > mid:
            raise ValidationError("quadratic (concave up) needs vertex <= endpoints mean",
                                  "sigma.vertex")
        if kind == "reversed-quadratic" and vertex < mid:
            raise ValidationError("reversed-quadratic needs vertex >= endpoints mean",
                                  "sigma.vertex")
        return SigmaProfile(kind=kind, length=length, base=vertex,
                            end0=end0, endL=endL, vertex=vertex)
    raise ValidationError(f"sigma kind {kind!r} not configurable here", "sigma.kind")


def parse_config(text: str, seed: int = 0, workers: int = 1,
                 overrides: dict | None = None) -> ScenarioConfig:
    """Build a ScenarioConfig from flat key = value text (strict keys)."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise StrictParseError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in CONFIG_KEYS:
            raise StrictParseError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise StrictParseError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    if overrides:
        raw.update({k: str(v) for k, v in overrides.items() if v is not None})

    def number(key: str, default):
        if key not in raw:
            return default
        try:
            return float(raw[key])
        except ValueError as exc:
            raise ValidationError(f"key {key!r}: not a number ({raw[key]!r})", key) from exc

    scalars = {name: number(name, default) for name, default in TABLE_DEFAULTS.items()}
    try:
        params = ModelParams(**scalars)
    except Exception as exc:
        raise ValidationError(str(exc), "params") from exc

    kind = raw.get("sigma.kind", "homogeneous")
    if kind not in SIGMA_SLUGS:
        raise ValidationError(f"unknown sigma.kind {kind!r}", "sigma.kind")
    sigma = _default_sigma(
        kind, number("sigma.base", 15.0), number("sigma.end0", None),
        number("sigma.endL", None), number("sigma.vertex", None), params.L)

    if "mode" not in raw:
        raise ValidationError("mode is required", "mode")
    mode = raw["mode"]
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r} (choose from {MODES})", "mode")

    grid_n = int(number("grid_n", 1501))
    if grid_n < 101:
        raise ValidationError(f"grid_n must be >= 101, got {grid_n}", "grid_n")

    return ScenarioConfig(
        params=params, sigma=sigma, mode=mode, grid_n=grid_n,
        tol=number("tol", 1e-8), t_max=number("t_max", 500.0),
        seed=seed, workers=max(1, int(workers)))


def load_config(path: str | Path, seed: int = 0, workers: int = 1,
                overrides: dict | None = None) -> ScenarioConfig:
    return parse_config(Path(path).read_text(), seed=seed, workers=workers,
                        overrides=overrides)


def echo_config(config: ScenarioConfig) -> str:
    """Resolved config in the same flat format (load/echo round-trips)."""
    p = config.params
    lines = [f"mode = {config.mode}"]
    for key in ("c", "eps", "L", "G_in", "a", "b", "d_i", "alpha1", "alpha2"):
        lines.append(f"{key} = {getattr(p, key):.17g}")
    s = config.sigma
    lines.append(f"sigma.kind = {s.kind}")
    lines.append(f"sigma.base = {s.base:.17g}")
    if s.end0 is not None:
        lines.append(f"sigma.end0 = {s.end0:.17g}")
    if s.endL is not None:
        lines.append(f"sigma.endL = {s.endL:.17g}")
    if s.vertex is not None:
        lines.append(f"sigma.vertex = {s.vertex:.17g}")
    lines.append(f"grid_n = {config.grid_n}")
    lines.append(f"tol = {config.tol:.17g}")
    lines.append(f"t_max = {config.t_max:.17g}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# mode dispatch
# ---------------------------------------------------------------------------

def _require_constant_sigma(config: ScenarioConfig) -> float:
    if not config.sigma.is_constant:
        raise ValidationError(
            f"mode {config.mode!r} needs a spatially constant sigma", "sigma.kind")
    return config.sigma.constant_value()


def _steady_payload(config: ScenarioConfig) -> dict:
    profile = solve_shooting(config.params, config.sigma, tol=config.tol,
                             grid=config.grid())
    res = compatibility_residuals(profile, config.params, config.sigma,
                                  return_variants=True)
    return {"profile": profile, "compatibility": res}


def _stability_payload(config: ScenarioConfig) -> dict:
    profile = solve_shooting(config.params, config.sigma, tol=config.tol,
                             grid=config.grid())
    report = assess_stability(profile, config.params, config.sigma)
    return {"profile": profile, "report": report}


def _evolve_payload(config: ScenarioConfig) -> dict:
    reference = solve_shooting(config.params, config.sigma, tol=config.tol,
                               grid=config.grid())
    initial = (reference.G * 1.01, reference.I * 1.01)
    trace = evo.run_to_steady(initial, config.params, config.sigma, reference,
                              t_max=config.t_max, tol=config.tol)
    return {"reference": reference, "trace": trace}


def _velocity_sweep_payload(config: ScenarioConfig) -> dict:
    def solve_one(c: float):
        params = replace(config.params, c=c)
        profile = solve_shooting(params, config.sigma, tol=config.tol,
                                 grid=Grid.uniform(params.L, config.grid_n))
        return {
            "c": c,
            "mean_G": float(np.mean(profile.G)),
            "I0": float(profile.I[0]),
            "IL": float(profile.I[-1]),
            "profile": profile,
        }

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(solve_one, VELOCITY_SWEEP))
    else:
        rows = [solve_one(c) for c in VELOCITY_SWEEP]
    return {"rows": rows}


def run(config: ScenarioConfig, out_dir: str | Path | None = None) -> ScenarioResult:
    """Dispatch the scenario, optionally emitting files into out_dir."""
    timing: dict[str, float] = {}
    t0 = time.perf_counter()
    if config.mode == "equilibrium":
        payload = {"equilibrium": find_equilibrium(config.params,
                                                   _require_constant_sigma(config))}
    elif config.mode == "steady":
        payload = _steady_payload(config)
    elif config.mode == "steady-eps":
        sigma_const = _require_constant_sigma(config)
        if config.params.eps <= 0.0:
            raise ValidationError("steady-eps needs eps > 0", "eps")
        payload = {"profile": solve_eps_collocation(
            config.params, sigma_const, config.params.eps,
            tol=max(config.tol, 1e-10), grid=config.grid())}
    elif config.mode == "stability":
        payload = _stability_payload(config)
    elif config.mode == "evolve":
        payload = _evolve_payload(config)
    elif config.mode == "eps-sweep":
        sigma_const = _require_constant_sigma(config)
        payload = {"table": eps_sweep(config.params, sigma_const,
                                      EPS_SWEEP_DEFAULT, grid=config.grid())}
    elif config.mode == "velocity-sweep":
        payload = _velocity_sweep_payload(config)
    else:  # pragma: no cover - guarded by parse_config
        raise ValidationError(f"unknown mode {config.mode!r}", "mode")
    timing["solve"] = time.perf_counter() - t0

    result = ScenarioResult(mode=config.mode, payload=payload,
                            provenance=echo_config(config), timing=timing)
    if out_dir is not None:
        t1 = time.perf_counter()
        result.manifest = emit_profiles(result, out_dir, config)
        timing["emit"] = time.perf_counter() - t1
    return result


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _format_csv(xs: np.ndarray, G: np.ndarray, I: np.ndarray) -> str:
    lines = ["x_cm,G_mM,I_pM"]
    for x, g, i in zip(xs, G, I):
        lines.append(f"{x:.10g},{g:.10g},{i:.10g}")
    return "\n".join(lines) + "\n"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


PLOT_TEMPLATE = """\
#!/usr/bin/env python3
# Generated plot script: renders the profile CSVs next to this file.
import csv
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = pathlib.Path(__file__).parent
CSVS = {csv_names!r}

CAPTIONS = {{
    "sigma_homogeneous": "homogeneous input",
    "sigma_linear_inc": "increasing input",
    "sigma_linear_dec": "decreasing linear input",
    "sigma_quadratic": "a quadratic input",
    "sigma_reversed_quadratic": "a reversed quadratic input",
}}

for name in CSVS:
    xs, gs, iis = [], [], []
    with open(HERE / name) as fh:
        for row in csv.DictReader(fh):
            xs.append(float(row["x_cm"]))
            gs.append(float(row["G_mM"]))
            iis.append(float(row["I_pM"]))
    stem = name.replace(".csv", "")
    fig, ax_g = plt.subplots(figsize=(6, 3.5))
    ax_i = ax_g.twinx()
    ax_g.plot(xs, gs, "b-", label="glucose (mM)")
    ax_i.plot(xs, iis, "r-", label="insulin (pM)")
    ax_g.set_xlabel("x (cm)")
    ax_g.set_ylabel("G (mM)", color="b")
    ax_i.set_ylabel("I (pM)", color="r")
    ax_g.set_title(CAPTIONS.get(stem, stem))
    fig.tight_layout()
    fig.savefig(HERE / (stem + ".png"), dpi=150)
    plt.close(fig)
print("rendered", len(CSVS), "profile plot(s)")
"""


def emit_profiles(result: ScenarioResult, out_dir: str | Path,
                  config: ScenarioConfig | None = None) -> list[dict]:
    """Write CSVs, summary report and plot script; return the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, bytes] = {}
    summary: list[str] = [f"panvein scenario report - mode {result.mode}", ""]

    def add_profile_csv(name: str, grid_nodes, G, I):
        files[name] = _format_csv(grid_nodes, G, I).encode()

    payload = result.payload
    if result.mode in ("steady", "stability", "steady-eps"):
        profile = payload["profile"]
        slug = SIGMA_SLUGS[config.sigma.kind] if config is not None else "profile"
        add_profile_csv(f"sigma_{slug}.csv", profile.grid.nodes, profile.G, profile.I)
        if result.mode == "steady":
            comp = payload["compatibility"]
            summary.append(
                f"[RESIDUALS] boundary_G={profile.residual_G:.6e} "
                f"boundary_I={profile.residual_I:.6e} "
                f"compat_G0={comp['res_G0']:.6e} compat_I0={comp['res_I0']:.6e}")
            summary.append(
                "compat_I0_printed_alpha1_variant="
                f"{comp['res_I0_printed_alpha1_variant']:.6e}")
        elif result.mode == "steady-eps":
            r = profile.residuals
            summary.append(
                f"[RESIDUALS] G_value={r[0]:.6e} I_value={r[1]:.6e} "
                f"G_gradient={r[2]:.6e} I_gradient={r[3]:.6e}")
        else:
            report = payload["report"]
            b = report.b_matrix
            summary.append(f"[VERDICT] {report.verdict}")
            summary.append(
                "b_matrix = "
                f"[[{b[0, 0]:.6g}, {b[0, 1]:.6g}], [{b[1, 0]:.6g}, {b[1, 1]:.6g}]]")
            summary.append(
                f"quadratic coefficients (c0, c1, c2) = "
                f"({report.quad_coeffs[0]:.6g}, {report.quad_coeffs[1]:.6g}, "
                f"{report.quad_coeffs[2]:.6g})")
            summary.append(
                f"roots |Lambda| = {abs(report.roots[0]):.6g}, "
                f"{abs(report.roots[1]):.6g}")
            summary.append(f"lead eigenvalue Re = {report.lead_eigen.real:.6g} 1/min")
            summary.append(f"commutator gap = {report.commutator_gap:.3e}")
    elif result.mode == "equilibrium":
        eq = payload["equilibrium"]
        summary.append(f"G* = {eq.G_star:.10g} mM, I* = {eq.I_star:.10g} pM")
        summary.append(
            f"eigenvalues = {eq.lambda1:.6g}, {eq.lambda2:.6g} (1/min)")
        summary.append(f"decay envelope: M = {eq.M:.6g}, rho = {eq.rho:.6g}")
        summary.append(
            f"bounds: {eq.bounds[0]:.6g} < G* < {eq.bounds[1]:.6g}, "
            f"I* < {eq.bounds[2]:.6g}")
    elif result.mode == "evolve":
        trace = payload["trace"]
        reference = payload["reference"]
        add_profile_csv("final_state.csv", reference.grid.nodes,
                        trace.final_state.G, trace.final_state.I)
        rows = ["t_min,sup_distance"]
        rows += [f"{t:.10g},{d:.10g}" for t, d in zip(trace.times, trace.distances)]
        files["trace.csv"] = ("\n".join(rows) + "\n").encode()
        summary.append(f"converged = {trace.converged}")
        summary.append(f"final distance = {trace.distances[-1]:.6e} at "
                       f"t = {trace.times[-1]:.6g} min")
        br = trace.boundary_residuals
        summary.append(
            f"[RESIDUALS] G_value={br[0]:.6e} I_value={br[1]:.6e} "
            f"G_gradient={br[2]:.6e} I_gradient={br[3]:.6e}")
    elif result.mode == "eps-sweep":
        table = payload["table"]
        rows = ["eps_cm2_min,sup_gap"]
        rows += [f"{e:.10g},{g:.10g}" for e, g in zip(table.eps, table.gap)]
        files["eps_sweep.csv"] = ("\n".join(rows) + "\n").encode()
        summary.append(f"fitted log-log order = {table.slope:.4f}")
    elif result.mode == "velocity-sweep":
        rows = ["c_cm_min,mean_G_mM,I0_pM,IL_pM"]
        for entry in payload["rows"]:
            rows.append(f"{entry['c']:.10g},{entry['mean_G']:.10g},"
                        f"{entry['I0']:.10g},{entry['IL']:.10g}")
        files["velocity_sweep.csv"] = ("\n".join(rows) + "\n").encode()
        for entry in payload["rows"]:
            prof = entry["profile"]
            add_profile_csv(f"profile_c{entry['c']:g}.csv",
                            prof.grid.nodes, prof.G, prof.I)
        summary.append(f"velocities: {[entry['c'] for entry in payload['rows']]}")

    csv_names = sorted(name for name in files if name.endswith(".csv")
                       and "trace" not in name and "sweep" not in name)
    if csv_names:
        files["plot_profiles.py"] = PLOT_TEMPLATE.format(csv_names=csv_names).encode()

    summary.append("")
    summary.append("resolved configuration:")
    summary.append(result.provenance.rstrip())
    files["summary.txt"] = ("\n".join(summary) + "\n").encode()

    manifest = []
    for name in sorted(files):
        (out / name).write_bytes(files[name])
        manifest.append({"file": name, "sha256": _sha256(files[name])})
    (out / "manifest.json").write_text(
        json.dumps({"mode": result.mode, "files": manifest}, indent=2) + "\n")
    return manifest
