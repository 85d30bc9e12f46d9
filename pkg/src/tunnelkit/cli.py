"""Command-line front end.

Every subcommand reads an INI-style config (``[barrier] [grid] [solver]
[delay] [transport] [output]``), writes CSV files with fixed formatting, a
run manifest, and optionally a PNG figure plus a standalone plot script.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import plotting
from .constants import CONSTANTS
from .delay import AXES, DELAY_METHODS, delay_curve
from .numeric import SolverOptions
from .potentials import DEFAULT_EPS_TAIL, DoubleBarrierSpec, Potential, make_potential, shape_from_name
from .spectrum import (DEFAULT_POINTS, DEFAULT_PROMINENCE, ENGINES, EnergyGrid, compare, find_resonances,
                       refine_resonances, sweep, wkb_resonance_seeds)
from .transport import DeviceConfig, iv_curve

COMMANDS = ("transmit", "sweep", "resonances", "compare", "time", "iv")
SECTIONS = ("barrier", "grid", "solver", "delay", "transport", "output")

TRANSMISSION_HEADER = ["energy_ev", "transmission", "phase_rad", "engine", "flag"]
DELAY_HEADER = ["x_value", "tau_fs", "classification", "flag"]
IV_HEADER = ["bias_v", "current_a_per_m2", "flag"]
RESONANCE_HEADER = ["e_peak_ev", "t_peak", "fwhm_ev", "censored"]


class ConfigError(ValueError):
    pass


def fmt(x: float) -> str:
    """12 significant digits in scientific notation; non-finite values spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.11e}"


def parse_values(text: str) -> np.ndarray:
    """``start:stop:n`` (inclusive linspace) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, n = text.split(":")
            return np.linspace(float(start), float(stop), int(n))
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        raise ConfigError(f"cannot parse value list {text!r}: {exc}") from None


@dataclass
class RunConfig:
    spec: DoubleBarrierSpec
    eps_tail: float = DEFAULT_EPS_TAIL
    grid: EnergyGrid | None = None
    energy: float | None = None
    engines: list[str] = field(default_factory=lambda: ["numeric"])
    prominence: float = DEFAULT_PROMINENCE
    refine: bool = False
    solver: SolverOptions = field(default_factory=SolverOptions)
    wkb_mode: str = "auto"
    n_simpson: int = 512
    delay_axis: str = "energy"
    delay_values: np.ndarray | None = None
    delay_energy: float | None = None
    delay_method: str = "wkb"
    delay_de: float | None = None
    device: DeviceConfig | None = None
    biases: np.ndarray | None = None
    out_dir: Path = Path(".")
    prefix: str = "run"
    plot: bool = False
    compare_below: float | None = None
    source_sha256: str = ""

    def potential(self) -> Potential:
        return make_potential(self.spec, self.eps_tail)

    def energy_grid(self) -> EnergyGrid:
        if self.grid is not None:
            return self.grid
        return EnergyGrid.default(self.potential().v_max)


def _get(cp, section, key, kind=float, default=None):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        if kind is bool:
            return cp.getboolean(section, key)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {kind.__name__}") from None


def _spec(cp) -> DoubleBarrierSpec:
    if not cp.has_section("barrier"):
        raise ConfigError("missing [barrier] section")
    shape = _get(cp, "barrier", "shape", str, "gaussian")
    shape1 = _get(cp, "barrier", "shape1", str, shape)
    shape2 = _get(cp, "barrier", "shape2", str, shape)
    width = _get(cp, "barrier", "width")
    w1 = _get(cp, "barrier", "width1", float, width)
    w2 = _get(cp, "barrier", "width2", float, width)
    v = _get(cp, "barrier", "v")
    v1 = _get(cp, "barrier", "v1", float, v)
    v2 = _get(cp, "barrier", "v2", float, v)
    a = _get(cp, "barrier", "a")
    missing = [n for n, x in (("v1", v1), ("v2", v2), ("width1", w1), ("width2", w2), ("a", a)) if x is None]
    if missing:
        raise ConfigError(f"[barrier] missing {', '.join(missing)}")
    return DoubleBarrierSpec(v1, v2, shape_from_name(shape1, w1), shape_from_name(shape2, w2), a,
                             _get(cp, "barrier", "mass_factor", float, 1.0), _get(cp, "barrier", "x0", float, 0.0))


def load_config(path: str | Path, out: str | None = None, engine: str | None = None,
                threads: int | None = None) -> RunConfig:
    """Parse and validate a config file; command-line overrides win over file values."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(raw.decode())
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    unknown = [s for s in cp.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown config sections {unknown}; expected {list(SECTIONS)}")

    cfg = RunConfig(spec=_spec(cp), source_sha256=hashlib.sha256(raw).hexdigest())
    cfg.eps_tail = _get(cp, "barrier", "eps_tail", float, DEFAULT_EPS_TAIL)

    e_min, e_max = _get(cp, "grid", "e_min"), _get(cp, "grid", "e_max")
    n = _get(cp, "grid", "n", int, DEFAULT_POINTS)
    if e_max is not None:
        cfg.grid = EnergyGrid(e_min if e_min is not None else e_max / n, e_max, n)
    elif e_min is not None:
        raise ConfigError("[grid] e_min given without e_max")
    elif n != DEFAULT_POINTS:
        cfg.grid = EnergyGrid.default(cfg.potential().v_max, n)
    cfg.energy = _get(cp, "grid", "energy")
    engines = engine or _get(cp, "grid", "engines", str, "numeric")
    cfg.engines = [e.strip() for e in engines.split(",") if e.strip()]
    for e in cfg.engines:
        if e not in ENGINES:
            raise ConfigError(f"unknown engine {e!r}; expected one of {ENGINES}")
    cfg.prominence = _get(cp, "grid", "prominence", float, DEFAULT_PROMINENCE)
    cfg.refine = _get(cp, "grid", "refine", bool, False)
    cfg.compare_below = _get(cp, "grid", "compare_below")

    cfg.solver = SolverOptions(
        step=_get(cp, "solver", "step", float, 1e-4),
        eps_tail=_get(cp, "solver", "eps_tail"),
        max_flux_error=_get(cp, "solver", "max_flux_error", float, 1e-6),
        threads=threads if threads is not None else _get(cp, "solver", "threads", int, 1),
    )
    cfg.wkb_mode = _get(cp, "solver", "wkb_mode", str, "auto")
    cfg.n_simpson = _get(cp, "solver", "n_simpson", int, 512)

    cfg.delay_axis = _get(cp, "delay", "axis", str, "energy")
    if cfg.delay_axis not in AXES:
        raise ConfigError(f"[delay] axis must be one of {AXES}")
    if cp.has_option("delay", "values"):
        cfg.delay_values = parse_values(cp.get("delay", "values"))
    cfg.delay_energy = _get(cp, "delay", "energy")
    cfg.delay_method = engine or _get(cp, "delay", "method", str, "wkb")
    cfg.delay_de = _get(cp, "delay", "de")

    if cp.has_section("transport"):
        cfg.device = DeviceConfig(
            fermi_level=_get(cp, "transport", "fermi_level", float, 0.1),
            temperature=_get(cp, "transport", "temperature", float, 300.0),
            mass_factor=cfg.spec.mass_factor,
            engine=engine or _get(cp, "transport", "engine", str, "numeric"),
            well_drop_fraction=_get(cp, "transport", "well_drop_fraction", float, 0.0),
            n_points=_get(cp, "transport", "n_points", int, 4001),
        )
        cfg.biases = parse_values(cp.get("transport", "biases", fallback="0:0.5:51"))

    cfg.out_dir = Path(out or _get(cp, "output", "dir", str, "."))
    cfg.prefix = _get(cp, "output", "prefix", str, path.stem)
    cfg.plot = _get(cp, "output", "plot", bool, False)
    return cfg


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "matplotlib"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def write_manifest(cfg: RunConfig, command: str, outputs: Sequence[Path], extra: dict | None = None) -> Path:
    manifest = {
        "command": command,
        "config_sha256": cfg.source_sha256,
        "constants": {"hbar2_over_2me_ev_nm2": CONSTANTS.hbar2_over_2me, "hbar_ev_fs": CONSTANTS.hbar},
        "versions": _versions(),
        "solver": {"step_nm": cfg.solver.step, "threads": cfg.solver.threads,
                   "max_flux_error": cfg.solver.max_flux_error, "wkb_mode": cfg.wkb_mode,
                   "n_simpson": cfg.n_simpson},
        "outputs": sorted(p.name for p in outputs),
    }
    if extra:
        manifest.update(extra)
    path = cfg.out_dir / f"{cfg.prefix}_{command}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _plot(cfg: RunConfig, csvs: Sequence[Path], kind: str, stem: str, xlabel: str | None = None) -> list[Path]:
    if not cfg.plot:
        return []
    png = cfg.out_dir / f"{stem}.png"
    script = cfg.out_dir / f"{stem}_plot.py"
    plotting.render(csvs, kind, png, xlabel)
    plotting.write_script(csvs, kind, script, png, xlabel)
    return [png, script]


def _point_rows(points):
    return [[fmt(p.energy), fmt(p.transmission), fmt(p.phase), p.engine, p.flag] for p in points]


def _check_engine(cfg: RunConfig, engine: str):
    if engine == "analytic" and not cfg.spec.is_rectangular:
        raise ConfigError("analytic engine needs rectangular barriers")


def cmd_transmit(cfg: RunConfig, args) -> list[Path]:
    energy = args.energy if args.energy is not None else cfg.energy
    if energy is None:
        raise ConfigError("no energy: pass --energy or set [grid] energy")
    if not energy > 0:
        raise ConfigError(f"energy must be positive, got {energy}")
    engines = [e for e in ENGINES if e != "analytic" or cfg.spec.is_rectangular]
    pot = cfg.potential()
    points = [sweep(pot, [energy], e, cfg.solver, cfg.wkb_mode, cfg.n_simpson).points[0] for e in engines]
    return [write_csv(cfg.out_dir / f"{cfg.prefix}_transmit.csv", TRANSMISSION_HEADER, _point_rows(points))]


def _curves(cfg: RunConfig, engines: Sequence[str]):
    pot, grid = cfg.potential(), cfg.energy_grid()
    out = {}
    for e in engines:
        _check_engine(cfg, e)
        out[e] = sweep(pot, grid, e, cfg.solver, cfg.wkb_mode, cfg.n_simpson)
    return out


def cmd_sweep(cfg: RunConfig, args) -> list[Path]:
    paths = []
    for engine, curve in _curves(cfg, cfg.engines).items():
        paths.append(write_csv(cfg.out_dir / f"{cfg.prefix}_sweep_{engine}.csv", TRANSMISSION_HEADER,
                               _point_rows(curve.points)))
    return paths + _plot(cfg, paths, "transmission", f"{cfg.prefix}_sweep")


def cmd_resonances(cfg: RunConfig, args) -> list[Path]:
    paths = []
    for engine, curve in _curves(cfg, cfg.engines).items():
        peaks = find_resonances(curve, cfg.prominence)
        if cfg.refine:
            seeds = wkb_resonance_seeds(cfg.potential(), mode=cfg.wkb_mode, n_simpson=cfg.n_simpson)
            peaks = refine_resonances(cfg.potential(), curve, peaks, seeds, solver=cfg.solver,
                                      wkb_mode=cfg.wkb_mode, n_simpson=cfg.n_simpson, prominence=cfg.prominence)
        rows = [[fmt(p.e_peak), fmt(p.t_peak), fmt(p.fwhm), p.censored] for p in peaks]
        paths.append(write_csv(cfg.out_dir / f"{cfg.prefix}_resonances_{engine}.csv", RESONANCE_HEADER, rows))
    return paths + _plot(cfg, paths, "resonances", f"{cfg.prefix}_resonances")


def cmd_compare(cfg: RunConfig, args) -> list[Path]:
    engines = args.engines or (cfg.engines if len(cfg.engines) == 2 else None)
    if not engines or len(engines) != 2:
        raise ConfigError("compare needs exactly two engines")
    curves = _curves(cfg, engines)
    a, b = (curves[e] for e in engines)
    report = compare(a, b, cfg.compare_below, cfg.prominence)
    stem = f"{cfg.prefix}_compare_{engines[0]}_{engines[1]}"
    paths = [write_csv(cfg.out_dir / f"{stem}_{e}.csv", TRANSMISSION_HEADER, _point_rows(c.points))
             for e, c in curves.items()]
    txt = cfg.out_dir / f"{stem}.txt"
    txt.write_text("\n".join(report.lines()) + "\n")
    return [txt] + paths + _plot(cfg, paths, "transmission", stem)


def cmd_time(cfg: RunConfig, args) -> list[Path]:
    if cfg.delay_method not in DELAY_METHODS:
        raise ConfigError(f"delay method must be one of {DELAY_METHODS}")
    if cfg.delay_method == "analytic":
        _check_engine(cfg, "analytic")
    values = cfg.delay_values
    if values is None:
        if cfg.delay_axis != "energy":
            raise ConfigError("[delay] values required for width and separation sweeps")
        values = cfg.energy_grid().energies()
    if cfg.delay_axis != "energy" and cfg.delay_energy is None:
        raise ConfigError("[delay] energy required for width and separation sweeps")
    kwargs = {"de": cfg.delay_de}
    if cfg.delay_method == "wkb":
        kwargs.update(mode=cfg.wkb_mode, n_simpson=cfg.n_simpson)
    elif cfg.delay_method == "numeric":
        kwargs.update(solver=cfg.solver)
    result = delay_curve(cfg.spec, cfg.delay_axis, values, cfg.delay_energy, cfg.delay_method, **kwargs)
    rows = [[fmt(x), fmt(g.tau), g.classification, g.flag] for x, g in result]
    stem = f"{cfg.prefix}_time_{cfg.delay_axis}"
    path = write_csv(cfg.out_dir / f"{stem}.csv", DELAY_HEADER, rows)
    label = {"energy": "E (eV)", "sigma": "barrier width (nm)", "a": "a (nm)"}[cfg.delay_axis]
    return [path] + _plot(cfg, [path], "delay", stem, label)


def cmd_iv(cfg: RunConfig, args) -> list[Path]:
    if cfg.device is None:
        raise ConfigError("iv needs a [transport] section")
    _check_engine(cfg, cfg.device.engine)
    if np.any(cfg.biases < 0):
        raise ConfigError("biases must be non-negative")
    points = iv_curve(cfg.device, cfg.potential(), cfg.biases, cfg.solver)
    rows = [[fmt(p.bias), fmt(p.current), p.flag] for p in points]
    path = write_csv(cfg.out_dir / f"{cfg.prefix}_iv.csv", IV_HEADER, rows)
    return [path] + _plot(cfg, [path], "iv", f"{cfg.prefix}_iv")


HANDLERS = {"transmit": cmd_transmit, "sweep": cmd_sweep, "resonances": cmd_resonances,
            "compare": cmd_compare, "time": cmd_time, "iv": cmd_iv}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI config file")
    common.add_argument("--out", help="output directory (overrides [output] dir)")
    common.add_argument("--engine", help="engine or delay method (overrides the config)")
    common.add_argument("--threads", type=int, help="worker threads for the numeric engine")
    common.add_argument("--plot", action="store_true", help="also write a PNG and a plot script")

    ap = argparse.ArgumentParser(prog="tunnelkit", description="Transmission, resonances, "
                                 "phase times and tunnelling currents for 1D double barriers")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("transmit", parents=[common], help="all applicable engines at one energy")
    p.add_argument("--energy", type=float, help="incident energy in eV (overrides [grid] energy)")
    sub.add_parser("sweep", parents=[common], help="transmission curve per engine")
    sub.add_parser("resonances", parents=[common], help="resonance peak table")
    p = sub.add_parser("compare", parents=[common], help="two-engine comparison report")
    p.add_argument("engines", nargs="*", choices=ENGINES, metavar="ENGINE")
    sub.add_parser("time", parents=[common], help="group delay along energy, width or separation")
    sub.add_parser("iv", parents=[common], help="Tsu-Esaki current-voltage curve")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.out, args.engine, args.threads)
        if args.plot:
            cfg.plot = True
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        outputs = HANDLERS[args.command](cfg, args)
        write_manifest(cfg, args.command, outputs)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    for p in outputs:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
