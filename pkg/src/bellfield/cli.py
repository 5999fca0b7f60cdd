"""Command-line front end: tomography, scan, bell, simulate-experiment.

Configuration comes from an optional flat ``key = value`` file plus flags
that mirror the keys (``--key value``); flags override file values.  Angles
are radians; a ``deg`` suffix converts.  Exit codes: 0 success, 1 usage or
configuration error, 2 physically degenerate configuration, 3 I/O error.
Records go to ``--output`` (or stdout); the scan and simulate-experiment
reports also render an SVG figure next to a file output.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import report
from .bell import (
    BellSettings,
    analytic_provider,
    chsh,
    empirical_provider,
    gisin_settings,
    maximize_bell,
    mc_protocol_provider,
    scan_correlation,
    symbolic_protocol_provider,
)
from .ensemble import EnsembleParams, generate, subseed, with_seed
from .field import DegenerateConfigurationError, SchmidtPair
from .interferometer import IDEAL_DETECTOR, DetectorModel, measure_quad
from .polarimetry import dop as stokes_dop
from .polarimetry import schmidt_frame, schmidt_from_dop, stokes_from_ensemble

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PHYSICS = 2
EXIT_IO = 3

_DEFAULT_SCAN_B = "0,0.7853981634,1.5707963268,2.3561944902"


class ConfigError(Exception):
    """Invalid configuration or usage; maps to exit code 1."""


def parse_angle(text: str) -> float:
    """Parse an angle in radians; a trailing ``deg`` converts from degrees."""
    t = text.strip()
    try:
        if t.endswith("deg"):
            return math.radians(float(t[:-3].strip()))
        return float(t)
    except ValueError:
        raise ConfigError(f"cannot parse angle {text!r}") from None


def parse_angle_list(text: str) -> list[float]:
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise ConfigError("empty angle list")
    return [parse_angle(s) for s in items]


def _parse_float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {text!r}") from None


def _parse_int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {text!r}") from None


@dataclass
class RunConfig:
    """Validated run parameters shared by all subcommands."""

    kappa1: float | None = None
    dop: float | None = None
    intensity: float = 1.0
    n_realizations: int = 10_000
    samples_per_realization: int = 16
    seed: int = 0
    detector_noise: float = 0.0
    phase_error: float = 0.0
    angle_grid_step: float = math.pi / 36.0
    output_path: str | None = None
    output_format: str = "csv"
    path: str = "analytic"

    def validate(self) -> None:
        if self.kappa1 is not None and self.dop is not None:
            raise ConfigError("kappa1 and dop are mutually exclusive; give one")
        if self.kappa1 is not None and not 0.0 <= self.kappa1 <= 1.0:
            raise ConfigError(f"kappa1 must be in [0, 1], got {self.kappa1}")
        if self.dop is not None and not 0.0 <= self.dop <= 1.0:
            raise ConfigError(f"dop must be in [0, 1], got {self.dop}")
        if not self.intensity > 0.0:
            raise ConfigError(f"intensity must be positive, got {self.intensity}")
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be >= 1")
        if self.samples_per_realization < 1:
            raise ConfigError("samples_per_realization must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if not 0.0 <= self.detector_noise < 0.1:
            raise ConfigError("detector_noise must be in [0, 0.1)")
        if not self.angle_grid_step > 0.0:
            raise ConfigError("angle_grid_step must be positive")
        if self.output_format not in ("csv", "json"):
            raise ConfigError("output_format must be 'csv' or 'json'")
        if self.path not in ("analytic", "symbolic", "mc"):
            raise ConfigError("path must be 'analytic', 'symbolic' or 'mc'")

    @property
    def schmidt(self) -> SchmidtPair:
        if self.kappa1 is not None:
            if self.kappa1 < math.sqrt(0.5):
                raise ConfigError(
                    f"kappa1 must be >= 1/sqrt(2) (ordering convention), got {self.kappa1}"
                )
            return SchmidtPair(self.kappa1, math.sqrt(max(0.0, 1.0 - self.kappa1**2)))
        return schmidt_from_dop(self.dop if self.dop is not None else 0.0)

    @property
    def ensemble_params(self) -> EnsembleParams:
        return EnsembleParams(
            n_realizations=self.n_realizations,
            samples_per_realization=self.samples_per_realization,
            seed=self.seed,
        )

    @property
    def detector(self) -> DetectorModel:
        if self.detector_noise > 0.0:
            return DetectorModel(self.detector_noise)
        return IDEAL_DETECTOR


_KEY_PARSERS = {
    "kappa1": _parse_float,
    "dop": _parse_float,
    "intensity": _parse_float,
    "n_realizations": _parse_int,
    "samples_per_realization": _parse_int,
    "seed": _parse_int,
    "detector_noise": _parse_float,
    "phase_error": lambda key, text: parse_angle(text),
    "angle_grid_step": lambda key, text: parse_angle(text),
    "output_path": lambda key, text: text,
    "output_format": lambda key, text: text.strip(),
    "path": lambda key, text: text.strip(),
}


def parse_config_file(path: str) -> dict[str, object]:
    """Read a flat ``key = value`` file; unknown keys are errors."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    values: dict[str, object] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, text = line.partition("=")
        key = key.strip()
        if key not in _KEY_PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _KEY_PARSERS[key](key, text.strip())
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    values: dict[str, object] = {}
    if args.config:
        values.update(parse_config_file(args.config))
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = (
                _KEY_PARSERS[f.name](f.name, flag) if isinstance(flag, str) else flag
            )
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: A003 - argparse hook
        raise ConfigError(message)


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value file")
    common.add_argument("--output", dest="output_path", metavar="PATH")
    common.add_argument("--format", dest="output_format", choices=["csv", "json"])
    common.add_argument("--seed", type=int)
    common.add_argument("--kappa1")
    common.add_argument("--dop")
    common.add_argument("--intensity")
    common.add_argument("--n_realizations")
    common.add_argument("--samples_per_realization")
    common.add_argument("--detector_noise")
    common.add_argument("--phase_error")
    common.add_argument("--angle_grid_step")
    common.add_argument("--path", choices=["analytic", "symbolic", "mc"])

    parser = _Parser(
        prog="bellfield",
        description="CHSH Bell tests on classically entangled stochastic optical fields",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("tomography", parents=[common],
                   help="estimate Stokes parameters, DOP and Schmidt weights")
    scan = sub.add_parser("scan", parents=[common],
                          help="correlation curves C(a, b) over a full analyzer rotation")
    scan.add_argument("--b", default=_DEFAULT_SCAN_B, metavar="LIST",
                      help="comma-separated fixed function-space angles")
    bell = sub.add_parser("bell", parents=[common],
                          help="evaluate or maximize the Bell parameter")
    mode = bell.add_mutually_exclusive_group()
    mode.add_argument("--maximize", action="store_true",
                      help="optimize the four angles before evaluating")
    mode.add_argument("--gisin", action="store_true",
                      help="use the closed-form optimal angles")
    bell.add_argument("--a")
    bell.add_argument("--a_prime")
    bell.add_argument("--b")
    bell.add_argument("--b_prime")
    sim = sub.add_parser("simulate-experiment", parents=[common],
                         help="full Monte Carlo run: tomography calibration, then "
                              "intensity-reconstructed joint projections")
    sim.add_argument("--b", default=_DEFAULT_SCAN_B, metavar="LIST",
                     help="comma-separated fixed function-space angles")
    return parser


def _emit(cfg: RunConfig, columns, rows, svg_renderer=None, svg_title="") -> None:
    text = report.render_table(columns, rows, cfg.output_format)
    if cfg.output_path:
        report.write_atomic(cfg.output_path, text)
        print(f"wrote {len(rows)} record(s) to {cfg.output_path}")
        if svg_renderer is not None:
            svg_path = _svg_path(cfg.output_path)
            svg_renderer(cfg.output_path, cfg.output_format, svg_path, svg_title)
            print(f"wrote figure to {svg_path}")
    else:
        sys.stdout.write(text)


def _svg_path(output_path: str) -> str:
    stem = output_path.rsplit(".", 1)[0] if "." in output_path else output_path
    return stem + ".svg"


def _correlation_provider(cfg: RunConfig, schmidt: SchmidtPair):
    if cfg.path == "analytic":
        return analytic_provider(schmidt)
    if cfg.path == "symbolic":
        return symbolic_protocol_provider(
            schmidt,
            intensity=cfg.intensity,
            detector=cfg.detector,
            phase_error=cfg.phase_error,
            seed=cfg.seed,
        )
    return mc_protocol_provider(
        schmidt,
        cfg.ensemble_params,
        intensity=cfg.intensity,
        detector=cfg.detector,
        phase_error=cfg.phase_error,
    )


def cmd_tomography(cfg: RunConfig, args: argparse.Namespace) -> int:
    ensemble = generate(cfg.schmidt, cfg.intensity, cfg.ensemble_params)
    stokes = stokes_from_ensemble(ensemble)
    estimated_dop = stokes_dop(stokes)
    pair, frame_angle = schmidt_frame(ensemble)
    columns = [
        report.Column("s0"), report.Column("s1"),
        report.Column("s2"), report.Column("s3"),
        report.Column("dop"),
        report.Column("kappa1"), report.Column("kappa2"),
        report.Column("frame_angle_rad", angle=True),
        report.Column("n_realizations"), report.Column("samples_per_realization"),
        report.Column("seed"),
    ]
    rows = [{
        "s0": stokes.s0, "s1": stokes.s1, "s2": stokes.s2, "s3": stokes.s3,
        "dop": estimated_dop,
        "kappa1": pair.kappa1, "kappa2": pair.kappa2,
        "frame_angle_rad": frame_angle,
        "n_realizations": cfg.n_realizations,
        "samples_per_realization": cfg.samples_per_realization,
        "seed": cfg.seed,
    }]
    _emit(cfg, columns, rows)
    print(f"dop = {estimated_dop:.6f}, kappa = ({pair.kappa1:.4f}, {pair.kappa2:.4f})",
          file=sys.stderr)
    return EXIT_OK


_SCAN_COLUMNS = [
    report.Column("a_rad", angle=True),
    report.Column("b_rad", angle=True),
    report.Column("C"),
    report.Column("stderr"),
]


def _pol_grid(cfg: RunConfig) -> np.ndarray:
    return np.arange(0.0, 2.0 * math.pi, cfg.angle_grid_step)


def cmd_scan(cfg: RunConfig, args: argparse.Namespace) -> int:
    b_values = parse_angle_list(args.b)
    provider = _correlation_provider(cfg, cfg.schmidt)
    grid = _pol_grid(cfg)
    rows = []
    for b in b_values:
        for a, value, err in scan_correlation(b, grid, provider):
            rows.append({"a_rad": a, "b_rad": b, "C": value, "stderr": err})
    _emit(cfg, _SCAN_COLUMNS, rows, svg_renderer=report.render_scan_svg,
          svg_title="correlation scan")
    return EXIT_OK


_BELL_COLUMNS = [
    report.Column("a_rad", angle=True),
    report.Column("a_prime_rad", angle=True),
    report.Column("b_rad", angle=True),
    report.Column("b_prime_rad", angle=True),
    report.Column("C_ab"), report.Column("C_apb"),
    report.Column("C_abp"), report.Column("C_apbp"),
    report.Column("bell"), report.Column("stderr"),
]


def cmd_bell(cfg: RunConfig, args: argparse.Namespace) -> int:
    schmidt = cfg.schmidt
    if args.maximize:
        settings = maximize_bell(schmidt).settings
    elif args.gisin:
        settings = gisin_settings(schmidt)
    else:
        angle_args = (args.a, args.a_prime, args.b, args.b_prime)
        if any(v is None for v in angle_args):
            raise ConfigError(
                "bell needs --maximize, --gisin, or all of --a --a_prime --b --b_prime"
            )
        settings = BellSettings(*(parse_angle(v) for v in angle_args))
    result = chsh(settings, _correlation_provider(cfg, schmidt))
    rows = [{
        "a_rad": settings.a, "a_prime_rad": settings.a_prime,
        "b_rad": settings.b, "b_prime_rad": settings.b_prime,
        "C_ab": result.correlations[0], "C_apb": result.correlations[1],
        "C_abp": result.correlations[2], "C_apbp": result.correlations[3],
        "bell": result.b_value, "stderr": result.stderr,
    }]
    _emit(cfg, _BELL_COLUMNS, rows)
    print(f"bell = {result.b_value:.6f} (stderr {result.stderr:.6f})",
          file=sys.stderr if not cfg.output_path else sys.stdout)
    return EXIT_OK


_EXPERIMENT_COLUMNS = [
    report.Column("a_rad", angle=True),
    report.Column("b_rad", angle=True),
    report.Column("j"), report.Column("k"),
    report.Column("I_total"), report.Column("I_arm"),
    report.Column("I_aux"), report.Column("I_out"),
    report.Column("P"),
]


def cmd_simulate_experiment(cfg: RunConfig, args: argparse.Namespace) -> int:
    b_values = parse_angle_list(args.b)
    schmidt = cfg.schmidt
    params = cfg.ensemble_params

    # Calibration chain: tomography on a dedicated run fixes the stripping
    # angles through the estimated Schmidt weights, as in the real experiment.
    calibration = generate(schmidt, cfg.intensity, params)
    estimated_dop = stokes_dop(stokes_from_ensemble(calibration))
    estimated = schmidt_from_dop(estimated_dop)
    print(f"calibration: dop = {estimated_dop:.6f}, "
          f"kappa = ({estimated.kappa1:.4f}, {estimated.kappa2:.4f})",
          file=sys.stderr)

    grid = _pol_grid(cfg)
    rows = []
    curves: dict[float, list[tuple[float, float]]] = {}
    for b in b_values:
        for a in grid:
            a = float(a)
            sub = subseed(params.seed, "setting", a, b)
            ensemble = generate(schmidt, cfg.intensity, with_seed(params, sub))
            rng = np.random.default_rng(subseed(params.seed, "det", a, b))
            qm = measure_quad(
                ensemble, a, b,
                schmidt=estimated,
                detector=cfg.detector,
                phase_error=cfg.phase_error,
                noise_rng=rng,
            )
            for rec in qm.records:
                rows.append({
                    "a_rad": a, "b_rad": b, "j": rec.j, "k": rec.k,
                    "I_total": rec.i_total, "I_arm": rec.i_arm,
                    "I_aux": rec.i_aux, "I_out": rec.i_out, "P": rec.p,
                })
            c = qm.quad.p11 - qm.quad.p12 - qm.quad.p21 + qm.quad.p22
            curves.setdefault(b, []).append((a, c))
    _emit(cfg, _EXPERIMENT_COLUMNS, rows,
          svg_renderer=report.render_projection_svg,
          svg_title="reconstructed correlations")

    # Per-curve summary: cosine amplitude in the difference angle and the
    # Bell value it implies when the difference-angle model holds.
    for b, pts in curves.items():
        a_arr = np.array([p[0] for p in pts])
        c_arr = np.array([p[1] for p in pts])
        amp = math.hypot(
            2.0 * float(np.mean(c_arr * np.cos(2.0 * (a_arr - b)))),
            2.0 * float(np.mean(c_arr * np.sin(2.0 * (a_arr - b)))),
        )
        print(f"curve b = {b:.4f}: cosine amplitude {amp:.4f}, "
              f"bell estimate {2.0 * math.sqrt(2.0) * amp:.4f}", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {
    "tomography": cmd_tomography,
    "scan": cmd_scan,
    "bell": cmd_bell,
    "simulate-experiment": cmd_simulate_experiment,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = build_config(args)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateConfigurationError as exc:
        print(f"degenerate configuration: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
