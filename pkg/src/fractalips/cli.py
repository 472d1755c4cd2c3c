"""Experiment driver: INI configs in, CSV/JSON artifacts out.

Subcommands dispatch the library pipelines and write schema-stable CSVs
(RFC 4180, 17 significant digits, locale-independent) plus a manifest JSON
carrying the config hash, library version, seeds, and wall time.  All
randomness flows from seeds in the config; reruns are byte-identical except
for the manifest's wall-time field.

Exit codes: 0 ok, 2 invalid config, 3 budget exceeded, 4 numerical abort,
5 I/O failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    lipschitz_norm_estimate,
    modulus_profile,
    projection_error,
    rate_fit,
    vlasov_self_convergence,
)
from .dynamics import (
    assemble_deterministic,
    builtin_kernels,
    integrate_ips,
    kuramoto_inertia_model,
    kuramoto_model,
    project_initial,
    project_kernel,
    sample_bernoulli,
)
from .errors import BudgetExceededError, ConfigError, NumericalAbortError
from .experiments import (
    kuramoto_refinement_errors,
    random_trig_field,
    uniform_phase_sampler,
)
from .geometry import (
    IFS,
    Similitude,
    fixed_point_centroid,
    has_common_linear_part,
    preset,
)
from .quadrature import (
    SelfSimilarMeasure,
    integrate_mc,
    integrate_qmc,
    stationary_mean,
)
from .symbolic import DEFAULT_ENUMERATION_CAP, ProbabilityVector
from .transfer import kernel_to_graphon, martingale_level, transfer_to_interval

SUBCOMMANDS = (
    "integrate",
    "project",
    "transfer",
    "simulate",
    "rate",
    "vlasov",
    "modulus",
)

# known config keys per section; validate() reports anything else
_SCHEMA = {
    "experiment": {"output_dir"},
    "ifs": {"preset", "dimension", "maps"},  # plus map1..mapN, checked below
    "measure": {"p"},
    "function": {"name"},
    "kernel": {"name", "value"},
    "model": {"name", "coupling_strength", "damping", "omega", "omega_scale"},
    "levels": {"levels", "ell_levels", "sublevel"},
    "time": {"T", "dt", "output_stride"},
    "quadrature": {"method", "level", "samples", "tail"},
    "graph": {"kind", "symmetric"},
    "seeds": {"seeds"},
    "modulus": {"p", "max_ell"},
}

_UNIT_RANGE_KERNELS = {"expdist", "gaussian"}


def _test_functions(d: int) -> dict:
    fns = {
        "one": lambda x: np.ones(np.shape(x)[0] if np.ndim(x) else 1, float)
        if d == 1
        else np.ones(len(x)),
        "coord1": (lambda x: x) if d == 1 else (lambda x: x[..., 0]),
    }
    if d >= 2:
        fns["coord2"] = lambda x: x[..., 1]
        fns["coordsum"] = lambda x: x[..., 0] + x[..., 1]
        fns["expdiff"] = lambda x: np.exp(-np.abs(x[..., 0] - x[..., 1]))
        fns["gauss"] = lambda x: np.exp(-np.sum((x - 0.5) ** 2, axis=-1))
    else:
        fns["expdiff"] = lambda x: np.exp(-np.abs(x - 0.5))
        fns["gauss"] = lambda x: np.exp(-((x - 0.5) ** 2))
    return fns


@dataclass
class ExperimentConfig:
    """Parsed and validated experiment settings."""

    ifs: IFS
    ifs_label: str
    p: ProbabilityVector
    function_name: str = "expdiff"
    kernel_name: str = "expdist"
    kernel_value: float = 1.0
    model_name: str = "kuramoto"
    coupling_strength: float = 1.0
    damping: float = 1.0
    omega_mode: str = "field"
    omega_scale: float = 1.0
    levels: tuple = (2, 3, 4, 5)
    ell_levels: tuple = (2, 3, 4)
    sublevel: int = 2
    T: float = 1.0
    dt: float = 1e-3
    output_stride: int = 10
    quad_method: str = "qmc"
    quad_level: int = 10
    quad_samples: int = 100000
    quad_tail: int = 40
    graph_kind: str = "deterministic"
    graph_symmetric: bool = True
    modulus_p: float = 2.0
    modulus_max_ell: int = 9
    seeds: tuple = (1,)
    output_dir: str = "out"
    raw_items: dict = field(default_factory=dict)

    def measure(self) -> SelfSimilarMeasure:
        return SelfSimilarMeasure(self.ifs, self.p)

    def kernel(self):
        kernels = builtin_kernels(self.ifs.dimension)
        if self.kernel_name == "constant":
            return kernels["constant"](self.kernel_value)
        return kernels[self.kernel_name]

    def test_function(self):
        return _test_functions(self.ifs.dimension)[self.function_name]

    def config_hash(self) -> str:
        payload = json.dumps(
            sorted(
                (k, v)
                for k, v in self.raw_items.items()
                if k != "experiment.output_dir"
            ),
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _parse_map_line(text: str, dimension: int) -> Similitude:
    parts = dict(tok.split("=", 1) for tok in text.split())
    if "translation" not in parts or "ratio" not in parts:
        raise ConfigError(f"map definition needs ratio= and translation=: {text!r}")
    ratio = float(parts["ratio"])
    trans = np.array([float(v) for v in parts["translation"].split(",")])
    if trans.shape != (dimension,):
        raise ConfigError(f"translation has wrong dimension in {text!r}")
    try:
        if "matrix" in parts:
            mat = np.array([float(v) for v in parts["matrix"].split(",")])
            if mat.size != dimension * dimension:
                raise ConfigError(f"matrix needs {dimension * dimension} entries")
            return Similitude(ratio, mat.reshape(dimension, dimension), trans)
        if "angle" in parts:
            if dimension != 2:
                raise ConfigError("rotation angles are only supported in dimension 2")
            return Similitude.rotation_2d(ratio, float(parts["angle"]), trans)
        return Similitude.homothety(ratio, trans)
    except ValueError as exc:
        raise ConfigError(f"bad map definition {text!r}: {exc}") from exc


def _collect_items(cp: configparser.ConfigParser) -> dict:
    items = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            items[f"{section}.{key}"] = value.strip()
    return items


def parse_config(path: str | Path, preset_override: str | None = None,
                 output_override: str | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive (T vs t)
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    items = _collect_items(cp)

    def get(section, key, fallback=None):
        return cp.get(section, key, fallback=fallback)

    ifs_label = preset_override or get("ifs", "preset")
    if ifs_label:
        try:
            ifs = preset(ifs_label)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    else:
        if not cp.has_section("ifs"):
            raise ConfigError("config needs an [ifs] section (preset or inline maps)")
        try:
            dimension = cp.getint("ifs", "dimension")
            count = cp.getint("ifs", "maps")
        except (configparser.Error, ValueError) as exc:
            raise ConfigError(f"inline IFS needs dimension and maps: {exc}") from exc
        maps = []
        for i in range(1, count + 1):
            raw = get("ifs", f"map{i}")
            if raw is None:
                raise ConfigError(f"missing map{i} in [ifs]")
            maps.append(_parse_map_line(raw, dimension))
        try:
            ifs = IFS(tuple(maps))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        ifs_label = "inline"

    praw = get("measure", "p", fallback="natural")
    if praw == "natural":
        p = ProbabilityVector.uniform(ifs.k)
    else:
        try:
            p = ProbabilityVector(tuple(float(v) for v in praw.split(",")))
        except ValueError as exc:
            raise ConfigError(f"bad probability vector {praw!r}: {exc}") from exc
        if p.k != ifs.k:
            raise ConfigError("probability vector length must match the map count")

    def ints(section, key, fallback):
        raw = get(section, key)
        if raw is None:
            return fallback
        return tuple(int(v) for v in raw.split(","))

    try:
        cfg = ExperimentConfig(
            ifs=ifs,
            ifs_label=ifs_label,
            p=p,
            function_name=get("function", "name", fallback="expdiff"),
            kernel_name=get("kernel", "name", fallback="expdist"),
            kernel_value=float(get("kernel", "value", fallback="1.0")),
            model_name=get("model", "name", fallback="kuramoto"),
            coupling_strength=float(get("model", "coupling_strength", fallback="1.0")),
            damping=float(get("model", "damping", fallback="1.0")),
            omega_mode=get("model", "omega", fallback="field"),
            omega_scale=float(get("model", "omega_scale", fallback="1.0")),
            levels=ints("levels", "levels", (2, 3, 4, 5)),
            ell_levels=ints("levels", "ell_levels", (2, 3, 4)),
            sublevel=int(get("levels", "sublevel", fallback="2")),
            T=float(get("time", "T", fallback="1.0")),
            dt=float(get("time", "dt", fallback="1e-3")),
            output_stride=int(get("time", "output_stride", fallback="10")),
            quad_method=get("quadrature", "method", fallback="qmc"),
            quad_level=int(get("quadrature", "level", fallback="10")),
            quad_samples=int(get("quadrature", "samples", fallback="100000")),
            quad_tail=int(get("quadrature", "tail", fallback="40")),
            graph_kind=get("graph", "kind", fallback="deterministic"),
            graph_symmetric=cp.getboolean("graph", "symmetric", fallback=True),
            modulus_p=float(get("modulus", "p", fallback="2")),
            modulus_max_ell=int(get("modulus", "max_ell", fallback="9")),
            seeds=ints("seeds", "seeds", (1,)),
            output_dir=output_override
            or get("experiment", "output_dir", fallback="out"),
            raw_items=items,
        )
    except ValueError as exc:
        raise ConfigError(f"bad numeric value in config: {exc}") from exc
    return cfg


def validate(cfg: ExperimentConfig, subcommand: str | None = None) -> list[str]:
    """Collect human-readable diagnostics; an empty list means clean."""
    diags = []
    for key in cfg.raw_items:
        section, name = key.split(".", 1)
        known = _SCHEMA.get(section)
        if known is None:
            diags.append(f"unknown section [{section}]")
        elif name not in known and not (
            section == "ifs" and name.startswith("map")
        ):
            diags.append(f"unknown key {key}")
    k = cfg.ifs.k
    top = max(cfg.levels) + max(cfg.sublevel, 1)
    if k**top > DEFAULT_ENUMERATION_CAP:
        diags.append(
            f"level cap violation: k^(max level + sublevel) = {k}^{top} exceeds "
            f"{DEFAULT_ENUMERATION_CAP}"
        )
    if cfg.function_name not in _test_functions(cfg.ifs.dimension):
        diags.append(f"unknown test function {cfg.function_name!r}")
    if cfg.kernel_name not in ("expdist", "gaussian", "constant"):
        diags.append(f"unknown kernel {cfg.kernel_name!r}")
    if cfg.graph_kind not in ("deterministic", "bernoulli"):
        diags.append(f"unknown graph kind {cfg.graph_kind!r}")
    if cfg.graph_kind == "bernoulli":
        in_unit = cfg.kernel_name in _UNIT_RANGE_KERNELS or (
            cfg.kernel_name == "constant" and 0.0 <= cfg.kernel_value <= 1.0
        )
        if not in_unit:
            diags.append(
                f"kernel {cfg.kernel_name!r} is not certified to take values in "
                "[0, 1]; Bernoulli sampling will reject it"
            )
        if not cfg.seeds:
            diags.append("bernoulli graphs need a nonempty seed list")
    if subcommand == "modulus" and not has_common_linear_part(cfg.ifs):
        diags.append(
            "modulus mode requires an IFS whose maps share a common linear part"
        )
    if subcommand in ("rate", "vlasov", "simulate") and not cfg.seeds:
        diags.append(f"{subcommand} mode needs a nonempty seed list")
    if subcommand in ("rate", "project", "modulus") and len(cfg.levels) < 3:
        diags.append(f"{subcommand} mode needs at least 3 levels to fit a rate")
    if subcommand == "vlasov" and len(cfg.ell_levels) < 2:
        diags.append("vlasov mode needs at least 2 refinement levels")
    if cfg.quad_method not in ("qmc", "mc"):
        diags.append(f"unknown quadrature method {cfg.quad_method!r}")
    if cfg.model_name not in ("kuramoto", "kuramoto_inertia", "consensus"):
        diags.append(f"unknown model {cfg.model_name!r}")
    if cfg.dt <= 0 or cfg.T < 0:
        diags.append("time parameters must satisfy dt > 0 and T >= 0")
    return diags


# ---------------------------------------------------------------------------
# artifact writing


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_manifest(out: Path, subcommand: str, cfg: ExperimentConfig,
                   outputs: list[str], started: float) -> None:
    manifest = {
        "subcommand": subcommand,
        "config_hash": cfg.config_hash(),
        "library_version": __version__,
        "seeds": list(cfg.seeds),
        "ifs": cfg.ifs_label,
        "outputs": sorted(outputs),
        "wall_time_s": time.time() - started,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _thread_map(fn, tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# subcommand pipelines


def run_integrate(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    meas = cfg.measure()
    anchor = fixed_point_centroid(cfg.ifs)
    d = cfg.ifs.dimension
    one = _test_functions(d)["one"]
    ident = (lambda x: x) if d == 1 else (lambda x: x)
    rows = []
    total = integrate_qmc(meas, one, cfg.quad_level, anchor=anchor)
    rows.append(("total_mass", "qmc", 0, total, 1.0, abs(total - 1.0)))
    ref = stationary_mean(meas)
    bary_qmc = np.atleast_1d(integrate_qmc(meas, ident, cfg.quad_level, anchor=anchor))
    for c in range(d):
        rows.append(
            ("barycenter", "qmc", c, bary_qmc[c], ref[c], abs(bary_qmc[c] - ref[c]))
        )
    for seed in cfg.seeds:
        est = np.atleast_1d(
            integrate_mc(meas, ident, cfg.quad_samples, cfg.quad_tail, seed)
        )
        for c in range(d):
            rows.append(
                (f"barycenter_seed{seed}", "mc", c, est[c], ref[c], abs(est[c] - ref[c]))
            )
    write_csv(out / "integrate.csv",
              ("quantity", "method", "component", "value", "reference", "abs_error"),
              rows)
    return ["integrate.csv"]


def run_project(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    meas = cfg.measure()
    phi = cfg.test_function()
    levels = sorted(cfg.levels)
    errors = _thread_map(
        lambda m: projection_error(meas, phi, m, 2.0, max(cfg.sublevel, 2)),
        levels,
        threads,
    )
    bounds = [""] * len(levels)
    alpha_txt = ""
    if has_common_linear_part(cfg.ifs) and meas.natural:
        mls, omega = modulus_profile(
            meas, phi, levels, 2.0, cfg.modulus_max_ell, cfg.sublevel
        )
        lam = cfg.ifs.maps[0].ratio
        rep = lipschitz_norm_estimate(mls, omega, lam)
        fit = rate_fit(errors, lam, levels=levels, k=cfg.ifs.k,
                       lip_norm=rep.lip_norm)
        bounds = list(fit.bound)
        alpha_txt = fit.fitted_alpha
    rows = [
        (m, 2.0, e, b, alpha_txt) for m, e, b in zip(levels, errors, bounds)
    ]
    write_csv(out / "projection.csv",
              ("level", "p", "error", "bound", "fitted_alpha"), rows)
    return ["projection.csv"]


def run_transfer(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    meas = cfg.measure()
    m = min(max(cfg.levels), 6)
    fld = martingale_level(meas, cfg.test_function(), m, cfg.sublevel)
    step = transfer_to_interval(fld, cfg.p)
    rows = [
        (i, step.breakpoints[i], step.breakpoints[i + 1], step.widths[i],
         step.values[i, 0])
        for i in range(step.n_cells)
    ]
    write_csv(out / "transfer_step.csv",
              ("cell_index", "left", "right", "width", "value"), rows)

    km = project_kernel(meas, cfg.kernel(), min(m, 4), cfg.sublevel)
    img = kernel_to_graphon(km, cfg.p)
    n = km.entries.shape[0]
    pixel_rows = [
        (i, j, img.values[i, j]) for i in range(n) for j in range(n)
    ]
    write_csv(out / "graphon_pixels.csv", ("row", "col", "value"), pixel_rows)
    return ["transfer_step.csv", "graphon_pixels.csv"]


def _build_model(cfg: ExperimentConfig, meas: SelfSimilarMeasure, m: int, omega):
    if cfg.model_name == "kuramoto":
        return kuramoto_model(cfg.coupling_strength, omega)
    if cfg.model_name == "kuramoto_inertia":
        return kuramoto_inertia_model(cfg.coupling_strength, cfg.damping, omega)
    from .dynamics import consensus_model

    return consensus_model()


def run_simulate(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    meas = cfg.measure()
    kern = cfg.kernel()
    d = cfg.ifs.dimension
    field_seed = cfg.seeds[0]
    omega_fn = random_trig_field((field_seed, 1), d, amplitude=cfg.omega_scale)
    phase_fn = random_trig_field((field_seed, 2), d, offset=0.5)
    outputs = []

    def tasks():
        for m in sorted(cfg.levels):
            if cfg.graph_kind == "bernoulli":
                for seed in cfg.seeds:
                    yield (m, seed)
            else:
                yield (m, None)

    def solve(task):
        m, seed = task
        km = project_kernel(meas, kern, m, cfg.sublevel)
        graph = (
            assemble_deterministic(km, meas)
            if seed is None
            else sample_bernoulli(km, meas, seed, cfg.graph_symmetric)
        )
        omega = (
            project_initial(meas, omega_fn, m, cfg.sublevel)
            if cfg.omega_mode == "field"
            else 0.0
        )
        if cfg.model_name == "kuramoto_inertia":
            phases = project_initial(meas, phase_fn, m, cfg.sublevel)
            init_vals = np.hstack([phases.values, np.zeros_like(phases.values)])
            from .transfer import PiecewiseConstantField

            init = PiecewiseConstantField(meas.k, m, init_vals)
        else:
            init = project_initial(meas, phase_fn, m, cfg.sublevel)
        model = _build_model(cfg, meas, m, omega)
        return task, integrate_ips(model, graph, init, cfg.T, cfg.dt,
                                   cfg.output_stride)

    for (m, seed), traj in _thread_map(solve, list(tasks()), threads):
        stem = f"trajectory_m{m}" + ("" if seed is None else f"_seed{seed}")
        rows = []
        for ti, t in enumerate(traj.times):
            for ci in range(traj.values.shape[1]):
                for comp in range(traj.state_dim):
                    rows.append((t, ci, comp, traj.values[ti, ci, comp]))
        write_csv(out / f"{stem}.csv", ("t", "cell_index", "component", "value"),
                  rows)
        meta = dict(traj.metadata)
        meta["config_hash"] = cfg.config_hash()
        with open(out / f"{stem}.meta.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs += [f"{stem}.csv", f"{stem}.meta.json"]
    return outputs


def run_rate(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    meas = cfg.measure()
    levels, errors, _ = kuramoto_refinement_errors(
        meas,
        cfg.kernel(),
        cfg.levels,
        coupling_strength=cfg.coupling_strength,
        T=cfg.T,
        dt=cfg.dt,
        seed=cfg.seeds[0],
        sublevel=cfg.sublevel,
        output_stride=cfg.output_stride,
    )
    lam = max(m.ratio for m in cfg.ifs.maps)
    fit = rate_fit(errors, lam, levels=levels)
    # fitted envelope C lambda^(alpha m) with C matched to the worst level
    env = float(np.max(errors * lam ** (-fit.fitted_alpha * levels)))
    bounds = env * lam ** (fit.fitted_alpha * levels)
    rows = [
        (int(m), e, b, fit.fitted_alpha)
        for m, e, b in zip(levels, errors, bounds)
    ]
    write_csv(out / "rate.csv", ("level", "error", "bound", "fitted_alpha"), rows)
    report = {
        "levels": [int(m) for m in levels],
        "errors": [float(e) for e in errors],
        "bounds": [float(b) for b in bounds],
        "fitted_alpha": fit.fitted_alpha,
        "lambda": lam,
        "config_hash": cfg.config_hash(),
        "seeds": list(cfg.seeds),
    }
    with open(out / "rate.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ["rate.csv", "rate.json"]


def run_vlasov(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    meas = cfg.measure()
    m = min(cfg.levels)
    omega_mode = cfg.omega_mode

    def builder(level):
        om = 0.0
        if omega_mode == "field":
            om = project_initial(
                meas,
                random_trig_field((cfg.seeds[0], 1), cfg.ifs.dimension,
                                  amplitude=cfg.omega_scale),
                level,
                cfg.sublevel,
            )
        return kuramoto_model(cfg.coupling_strength, om)

    table = vlasov_self_convergence(
        meas,
        builder,
        cfg.kernel(),
        uniform_phase_sampler,
        m,
        cfg.ell_levels,
        cfg.T,
        cfg.dt,
        cfg.seeds,
        cfg.sublevel,
        cfg.output_stride,
    )
    rows = []
    for si, seed in enumerate(table.seeds):
        for pi, (lo, hi) in enumerate(table.ell_pairs):
            for ti, t in enumerate(table.times):
                rows.append((seed, lo, hi, t, table.distances[si, pi, ti]))
    write_csv(out / "vlasov.csv",
              ("seed", "ell_coarse", "ell_fine", "t", "distance"), rows)
    summary = []
    worst = table.distances.max(axis=2)  # (seeds, pairs)
    for pi, (lo, hi) in enumerate(table.ell_pairs):
        summary.append((lo, hi, float(np.median(worst[:, pi]))))
    write_csv(out / "vlasov_summary.csv",
              ("ell_coarse", "ell_fine", "median_max_distance"), summary)
    return ["vlasov.csv", "vlasov_summary.csv"]


def run_modulus(cfg: ExperimentConfig, out: Path, threads: int) -> list[str]:
    meas = cfg.measure()
    if not has_common_linear_part(cfg.ifs):
        raise ConfigError(
            "modulus mode requires an IFS whose maps share a common linear part"
        )
    phi = cfg.test_function()
    levels = sorted(cfg.levels)
    # compute one extra level so the lambda^(l+1) scaling column is exact
    mls, omega = modulus_profile(
        meas, phi, levels + [levels[-1] + 1], cfg.modulus_p,
        max(cfg.modulus_max_ell, levels[-1] + 1), cfg.sublevel
    )
    omega_main = omega[: len(levels)]
    omega_shifted = omega[1 : len(levels) + 1]
    lam = cfg.ifs.maps[0].ratio
    rep = lipschitz_norm_estimate(np.array(levels), omega_main, lam,
                                  cfg.modulus_p, omega_shifted)
    rows = [
        (m, om, oms, rep.fitted_alpha)
        for m, om, oms in zip(levels, omega_main, omega_shifted)
    ]
    write_csv(out / "modulus.csv",
              ("level", "omega_p", "omega_p_shifted", "fitted_alpha"), rows)
    report = {
        "p": cfg.modulus_p,
        "lambda": lam,
        "fitted_alpha": rep.fitted_alpha,
        "lip_norm": rep.lip_norm,
        "levels": [int(m) for m in levels],
        "omega_p": [float(v) for v in omega_main],
        "omega_p_shifted": [float(v) for v in omega_shifted],
        "tau_scalings": "omega_p uses tau = lambda^l tau_ij; omega_p_shifted "
                        "uses tau = lambda^(l+1) tau_ij",
        "config_hash": cfg.config_hash(),
        "seeds": list(cfg.seeds),
        "function": cfg.function_name,
    }
    with open(out / "modulus.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ["modulus.csv", "modulus.json"]


_RUNNERS = {
    "integrate": run_integrate,
    "project": run_project,
    "transfer": run_transfer,
    "simulate": run_simulate,
    "rate": run_rate,
    "vlasov": run_vlasov,
    "modulus": run_modulus,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fractalips",
        description="Experiments for particle systems on self-similar networks",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS + ("validate",):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="INI config path")
        sp.add_argument("--output", default=None, help="output directory")
        sp.add_argument("--preset", default=None, help="IFS preset override")
        sp.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.preset, args.output)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.subcommand == "validate":
        diags = validate(cfg)
        for d in diags:
            print(d)
        if not diags:
            print("config ok")
        return 0

    diags = validate(cfg, args.subcommand)
    if diags:
        for d in diags:
            print(f"error: {d}", file=sys.stderr)
        return 2

    started = time.time()
    try:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        outputs = _RUNNERS[args.subcommand](cfg, out, args.threads)
        write_manifest(out, args.subcommand, cfg, outputs, started)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalAbortError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    return 0


if __name__ == "__main__":
    sys.exit(main())
