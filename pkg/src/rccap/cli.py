"""Experiment runner CLI.

Subcommands:

* ``figure1``  -- the reference sweep: one full-rank random linear system
  presented with AR(1)/MA(1)/ARMA(1,1) inputs over a parameter grid;
  empirical capacities plus the three theoretical bounds per grid point,
  written as CSV (optionally with SVG charts).
* ``capacity`` -- capacities and bounds for a single system/input pair.
* ``bounds``   -- the three bounds for an input spec and state dimension.
* ``reduce``   -- reduction of a linear system to its controllable subspace.
* ``rank``     -- controllability diagnostics and the rank-route capacity.
* ``selftest`` -- the cross-module invariant battery (quick or full scale).

Configuration comes from flags, optionally overlaid on a TOML file
(flags win).  Grid points run in parallel on threads capped by the
``RCCAP_THREADS`` environment variable; per-point RNG streams derive from
(seed, grid index), and rows are sorted before writing, so output is
byte-identical for identical (config, seed).

Exit codes: 0 success, 1 property/selftest failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .capacity import theoretical_bounds, total_capacity_empirical, validate_report
from .inputs import ArmaProcessSpec, autocovariance
from .lincap import controllability, memory_capacity_via_rank, reduce_system
from .properties import run_property_suite
from .systems import LinearStateSystem, system_from_json, system_to_json

logger = logging.getLogger(__name__)

EXPECTED_HEADER = "model,phi,theta,mc,fc,bound_rho,bound_spectral,bound_gershgorin,flags"
MODELS = ("ar1", "ma1", "arma11")

_DEFAULTS = {
    "n": 15,
    "rho": 0.9,
    "tau_max": 250,
    "length": 10_000,
    "seed": 0,
    "model": "all",
    "grid": tuple(round(0.1 * k, 1) for k in range(10)),
    "out": "figure1-out",
    "plot": False,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep configuration; the defaults reproduce the reference experiment
    (N=15, target spectral radius 0.9, 250 lags, paths of length 10^4)."""

    n: int = 15
    spectral_radius: float = 0.9
    tau_max: int = 250
    length: int = 10_000
    seed: int = 0
    param_grid: tuple[float, ...] = _DEFAULTS["grid"]
    model: str = "all"
    output_dir: Path = Path("figure1-out")
    plot: bool = False

    def models(self) -> tuple[str, ...]:
        if self.model == "all":
            return MODELS
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS + ('all',)}, got {self.model!r}")
        return (self.model,)


def _model_params(model: str, value: float) -> tuple[float, float]:
    if model == "ar1":
        return value, 0.0
    if model == "ma1":
        return 0.0, value
    return value, value  # arma11 varies both together


def thread_count() -> int:
    raw = os.environ.get("RCCAP_THREADS", "")
    if raw.strip():
        try:
            return max(1, int(raw))
        except ValueError:
            raise SystemExit(f"RCCAP_THREADS must be an integer, got {raw!r}")
    return max(1, min(8, os.cpu_count() or 1))


def make_figure1_system(n: int, spectral_radius: float, seed=0) -> LinearStateSystem:
    """Random linear system with full controllability rank.

    Draws a Gaussian connectivity matrix, rescales it to the target spectral
    radius, and caps the largest singular value at 0.99 when the rescaled
    matrix is not yet a contraction (logging the spectral radius actually
    achieved).  Input weights are uniform on the sphere.  Redraws (up to 100
    attempts) until the controllability rank is full and the white-noise
    state covariance is numerically positive definite: occasional draws are
    exactly full-rank yet have a covariance direction below float64
    resolution, whose capacity no sample-moment estimator can recover.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < spectral_radius < 1.0:
        raise ValueError("spectral_radius must lie in (0, 1)")
    from .lincap import state_covariance_white

    rng = np.random.default_rng(seed)
    for attempt in range(100):
        conn = rng.standard_normal((n, n))
        radius = np.abs(np.linalg.eigvals(conn)).max()
        if radius == 0.0:
            continue
        conn *= spectral_radius / radius
        top = np.linalg.svd(conn, compute_uv=False)[0]
        if top >= 1.0:
            conn *= 0.99 / top
        weights = rng.standard_normal(n)
        weights /= np.linalg.norm(weights)
        system = LinearStateSystem(connectivity=conn, input_weights=weights)
        if controllability(system).rank != n:
            continue
        cov_eigs = np.linalg.eigvalsh(state_covariance_white(system, 1.0))
        if cov_eigs[0] <= 1e-18 * cov_eigs[-1]:
            continue
        achieved = float(np.abs(np.linalg.eigvals(system.connectivity)).max())
        logger.info(
            "figure-1 system ready after %d attempt(s): achieved spectral "
            "radius %.4f, largest singular value %.4f",
            attempt + 1,
            achieved,
            system.contraction,
        )
        return system
    raise RuntimeError(f"no full-rank system found in 100 attempts (n={n})")


def _format(value: float) -> str:
    return f"{value:.12g}"


def run_figure1(config: ExperimentConfig) -> Path:
    """Run the sweep and write ``figure1.csv`` (plus SVG charts with ``plot``).

    One system is drawn per config seed and presented with every grid
    input.  Conditioning or convergence flags land in the ``flags`` column
    and are never fatal.
    """
    system = make_figure1_system(config.n, config.spectral_radius, seed=config.seed)
    tasks = [
        (model, value, index)
        for index, (model, value) in enumerate(
            (m, v) for m in config.models() for v in config.param_grid
        )
    ]

    def worker(task: tuple[str, float, int]) -> dict:
        model, value, index = task
        phi, theta = _model_params(model, value)
        spec = ArmaProcessSpec(phi=phi, theta=theta)
        report = total_capacity_empirical(
            system,
            spec,
            tau_max=config.tau_max,
            length=config.length,
            seed=(config.seed, index),
        )
        bounds = theoretical_bounds(autocovariance(spec), config.n)
        return {
            "model": model,
            "phi": phi,
            "theta": theta,
            "mc": report.mc_total,
            "fc": report.fc_total,
            "bound_rho": bounds.rho_bound,
            "bound_spectral": bounds.spectral_bound,
            "bound_gershgorin": bounds.gershgorin,
            "flags": ";".join(report.flags + bounds.flags),
        }

    # Conditioning/convergence diagnostics land in the flags column instead
    # of the console; the filter change wraps the pool from the main thread
    # because warning state is process-global.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with ThreadPoolExecutor(max_workers=thread_count()) as pool:
            rows = list(pool.map(worker, tasks))
    rows.sort(key=lambda r: (r["model"], r["phi"], r["theta"]))

    config.output_dir.mkdir(parents=True, exist_ok=True)
    out_path = config.output_dir / "figure1.csv"
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(EXPECTED_HEADER.split(","))
    for row in rows:
        writer.writerow(
            [
                row["model"],
                _format(row["phi"]),
                _format(row["theta"]),
                _format(row["mc"]),
                _format(row["fc"]),
                _format(row["bound_rho"]),
                _format(row["bound_spectral"]),
                _format(row["bound_gershgorin"]),
                row["flags"],
            ]
        )
    out_path.write_text(buffer.getvalue())
    if config.plot:
        _write_plots(rows, config.output_dir)
    return out_path


def _write_plots(rows: list[dict], outdir: Path) -> None:
    # Derived artifacts only; the CSV is the contract.
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    for model in sorted({r["model"] for r in rows}):
        series = [r for r in rows if r["model"] == model]
        x = [r["theta"] if model == "ma1" else r["phi"] for r in series]
        fig, ax = plt.subplots(figsize=(6, 4))
        floor = 1e-4
        for key, label in (
            ("mc", "memory capacity"),
            ("fc", "forecasting capacity"),
            ("bound_rho", "spectral-radius bound"),
            ("bound_spectral", "density bound"),
            ("bound_gershgorin", "Gershgorin bound"),
        ):
            ax.semilogy(x, [max(r[key], floor) for r in series], marker="o", label=label)
        ax.set_xlabel("theta" if model == "ma1" else "phi")
        ax.set_ylabel("capacity")
        ax.set_title(f"{model} inputs")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(outdir / f"figure1_{model}.svg")
        plt.close(fig)


# --------------------------------------------------------------------------
# argument handling


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    table = doc.get("figure1", doc)
    known = set(_DEFAULTS)
    unknown = set(table) - known
    if unknown:
        raise SystemExit(f"unknown config keys in {path}: {sorted(unknown)}")
    return dict(table)


def _parse_grid(raw) -> tuple[float, ...]:
    if isinstance(raw, (list, tuple)):
        return tuple(float(v) for v in raw)
    values = tuple(float(v) for v in str(raw).split(",") if v.strip())
    if not values:
        raise SystemExit("empty --grid")
    return values


def _merge_figure1_config(args: argparse.Namespace) -> ExperimentConfig:
    merged = dict(_DEFAULTS)
    merged.update(_load_config_file(args.config))
    for key in ("n", "rho", "tau_max", "length", "seed", "model", "grid", "out"):
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    if args.plot:
        merged["plot"] = True
    return ExperimentConfig(
        n=int(merged["n"]),
        spectral_radius=float(merged["rho"]),
        tau_max=int(merged["tau_max"]),
        length=int(merged["length"]),
        seed=int(merged["seed"]),
        param_grid=_parse_grid(merged["grid"]),
        model=str(merged["model"]),
        output_dir=Path(merged["out"]),
        plot=bool(merged["plot"]),
    )


def _system_from_args(args: argparse.Namespace):
    if getattr(args, "system", None):
        with open(args.system, encoding="utf-8") as fh:
            return system_from_json(json.load(fh))
    n = args.n if args.n is not None else _DEFAULTS["n"]
    rho = args.rho if args.rho is not None else _DEFAULTS["rho"]
    seed = args.seed if args.seed is not None else _DEFAULTS["seed"]
    return make_figure1_system(int(n), float(rho), seed=int(seed))


def _spec_from_args(args: argparse.Namespace) -> ArmaProcessSpec:
    model = args.model or "arma11"
    if model == "all":
        raise SystemExit("pick a single input model for this subcommand")
    phi = float(args.phi) if args.phi is not None else 0.0
    theta = float(args.theta) if args.theta is not None else 0.0
    if model == "ar1":
        theta = 0.0
    elif model == "ma1":
        phi = 0.0
    sigma = float(args.sigma) if getattr(args, "sigma", None) is not None else 1.0
    return ArmaProcessSpec(phi=phi, theta=theta, sigma=sigma)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _add_common(parser: argparse.ArgumentParser, *names: str) -> None:
    options = {
        "n": dict(type=int, help="state dimension"),
        "rho": dict(type=float, help="target spectral radius of the connectivity matrix"),
        "tau-max": dict(type=int, dest="tau_max", help="lag/horizon truncation"),
        "length": dict(type=int, help="input path length"),
        "seed": dict(type=int, help="master seed"),
        "model": dict(
            choices=MODELS + ("all",), help="input model (figure1 default: all)"
        ),
        "grid": dict(help="comma-separated parameter values"),
        "out": dict(help="output path (directory or file depending on subcommand)"),
        "plot": dict(action="store_true", help="emit SVG charts next to the CSV"),
        "config": dict(help="TOML config file; explicit flags win"),
        "phi": dict(type=float, help="AR coefficient"),
        "theta": dict(type=float, help="MA coefficient"),
        "sigma": dict(type=float, help="innovation standard deviation"),
        "ridge": dict(type=float, help="ridge added to the state gram matrix"),
        "system": dict(help="JSON file with a serialized system"),
    }
    for name in names:
        parser.add_argument(f"--{name}", default=None, **options[name])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rccap",
        description="Memory/forecasting capacities of recurrent state-space systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("figure1", help="run the reference parameter sweep")
    _add_common(p, "n", "rho", "tau-max", "length", "seed", "model", "grid", "out", "config")
    p.add_argument("--plot", action="store_true", help="emit SVG charts next to the CSV")

    p = sub.add_parser("capacity", help="capacities and bounds for one system/input")
    _add_common(
        p, "n", "rho", "tau-max", "length", "seed", "model", "phi", "theta",
        "sigma", "ridge", "system", "out",
    )

    p = sub.add_parser("bounds", help="theoretical bounds for an input spec")
    _add_common(p, "n", "model", "phi", "theta", "sigma", "out")

    p = sub.add_parser("reduce", help="reduce a system to its controllable subspace")
    _add_common(p, "n", "rho", "seed", "system", "out")

    p = sub.add_parser("rank", help="controllability diagnostics and rank capacity")
    _add_common(p, "n", "rho", "seed", "system", "out")

    p = sub.add_parser("selftest", help="run the invariant battery")
    _add_common(p, "seed", "out")
    p.add_argument("--scale", choices=("quick", "full"), default="quick")

    return parser


def _cmd_figure1(args: argparse.Namespace) -> int:
    config = _merge_figure1_config(args)
    path = run_figure1(config)
    print(path)
    return 0


def _cmd_capacity(args: argparse.Namespace) -> int:
    system = _system_from_args(args)
    spec = _spec_from_args(args)
    tau_max = int(args.tau_max) if args.tau_max is not None else _DEFAULTS["tau_max"]
    length = int(args.length) if args.length is not None else _DEFAULTS["length"]
    ridge = float(args.ridge) if args.ridge is not None else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = total_capacity_empirical(
            system,
            spec,
            tau_max=tau_max,
            length=length,
            seed=int(args.seed) if args.seed is not None else 0,
            ridge=ridge,
        )
        bounds = theoretical_bounds(autocovariance(spec), system.dim)
    _emit(
        {
            "system": system_to_json(system),
            "input": {"phi": spec.phi, "theta": spec.theta, "sigma": spec.sigma},
            "report": report.to_dict(),
            "bounds": bounds.to_dict(),
            "violations": validate_report(report, bounds),
        },
        args.out,
    )
    return 0


def _cmd_bounds(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    n = int(args.n) if args.n is not None else _DEFAULTS["n"]
    bounds = theoretical_bounds(autocovariance(spec), n)
    _emit(
        {
            "input": {"phi": spec.phi, "theta": spec.theta, "sigma": spec.sigma},
            "n": n,
            "bounds": bounds.to_dict(),
        },
        args.out,
    )
    return 0


def _cmd_reduce(args: argparse.Namespace) -> int:
    system = _system_from_args(args)
    if not isinstance(system, LinearStateSystem):
        raise SystemExit("reduction applies to linear systems only")
    _emit(reduce_system(system).to_dict(), args.out)
    return 0


def _cmd_rank(args: argparse.Namespace) -> int:
    system = _system_from_args(args)
    if not isinstance(system, LinearStateSystem):
        raise SystemExit("rank diagnostics apply to linear systems only")
    report = controllability(system)
    verdict = memory_capacity_via_rank(system)
    doc = report.to_dict()
    doc.update(
        {
            "mc": verdict.mc,
            "fc": verdict.fc,
            "hypotheses_met": verdict.hypotheses_met,
        }
    )
    _emit(doc, args.out)
    return 0


def _cmd_selftest(args: argparse.Namespace) -> int:
    seed = int(args.seed) if args.seed is not None else 0
    result = run_property_suite(seed=seed, scale=args.scale)
    for check in result.results:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status}  {check.name}  [{check.seconds:.2f}s]  {check.detail}")
    if args.out:
        Path(args.out).write_text(json.dumps(result.to_dict(), indent=2) + "\n")
    return 0 if result.all_passed else 1


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    handlers = {
        "figure1": _cmd_figure1,
        "capacity": _cmd_capacity,
        "bounds": _cmd_bounds,
        "reduce": _cmd_reduce,
        "rank": _cmd_rank,
        "selftest": _cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
