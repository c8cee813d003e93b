"""Command-line surface tying the simulation and inference together.

Subcommands: ``transition`` (closed-form flip probability), ``contrast``
(quantum vs stochastic counting run), ``scan`` (P-vs-xi table with the
quadrature oracle), ``campaign`` (polarity-alternating campaign from a
config file), ``fit`` / ``bound`` (likelihood estimation on flip tables),
and ``rerun`` (re-execute a recorded run).

Every command resolves its arguments, defaults included, into a manifest
(command name, full configuration, seed, output paths, artifact version).
Nothing time- or host-dependent enters any output, so rerunning from the
manifest reproduces every byte. The ``NEDMSIM_THREADS`` environment
variable sets the worker count for ensemble commands; results are
identical at any thread count.

Exit codes: 0 success, 2 usage/config error, 3 I/O error,
4 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .comagnetometer import CampaignConfig, run_campaign
from .config import ConfigError, InferenceSettings, load_config
from .ensemble import expected_stochastic_fraction, simulate_quantum, simulate_stochastic
from .formats import (
    CONTRAST_HEADER,
    CYCLES_HEADER,
    FLIPS_HEADER,
    SCAN_HEADER,
    SCHEMA_CONTRAST_CSV,
    SCHEMA_CYCLES_CSV,
    SCHEMA_MANIFEST_JSON,
    SCHEMA_SCAN_CSV,
    SCHEMA_SUMMARY_JSON,
    atomic_write_text,
    cycles_to_rows,
    parse_csv,
    render_csv,
    render_json,
    rows_to_flip_dataset,
)
from .inference import (
    FlipDataset,
    NonConvergenceError,
    SearchBox,
    campaign_estimator,
    fit,
    upper_bound,
)
from .quantities import PhysicalConstants, UnitSystem
from .weak_measurement import (
    DipoleState,
    QuadratureSpec,
    flip_probability,
    flip_probability_quadrature,
    required_node_count,
)

THREADS_ENV = "NEDMSIM_THREADS"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NONCONVERGENCE = 4


def _workers() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw, 10)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value


# format version of each output an executor produces
_OUTPUT_FORMATS = {
    "transition": {"report": SCHEMA_SUMMARY_JSON},
    "contrast": {"table": SCHEMA_CONTRAST_CSV},
    "scan": {"table": SCHEMA_SCAN_CSV},
    "campaign": {"cycles": SCHEMA_CYCLES_CSV, "summary": SCHEMA_SUMMARY_JSON},
    "fit": {"report": SCHEMA_SUMMARY_JSON},
    "bound": {"report": SCHEMA_SUMMARY_JSON},
}


def _manifest(command: str, cfg: dict) -> dict:
    return {
        "schema": SCHEMA_MANIFEST_JSON,
        "artifact_version": __version__,
        "command": command,
        "formats": _OUTPUT_FORMATS[command],
        "config": cfg,
    }


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(path, text)


def _write_manifest(command: str, cfg: dict) -> None:
    path = cfg["outputs"].get("manifest")
    if path:
        atomic_write_text(path, render_json(_manifest(command, cfg)))


def _read_flip_dataset(path: str) -> FlipDataset:
    with open(path, "r", encoding="utf-8") as handle:
        rows = parse_csv(handle.read(), FLIPS_HEADER)
    if not rows:
        raise ValueError(f"flip dataset {path} contains no data rows")
    return rows_to_flip_dataset(rows)


def _dataset_to_cfg(dataset: FlipDataset) -> dict:
    return {
        "xi": [float(x) for x in dataset.xi],
        "trials": [int(n) for n in dataset.trials],
        "flips": [int(k) for k in dataset.flips],
    }


def _dataset_from_cfg(d: dict) -> FlipDataset:
    return FlipDataset(
        xi=np.asarray(d["xi"], dtype=float),
        trials=np.asarray(d["trials"], dtype=np.int64),
        flips=np.asarray(d["flips"], dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# transition


def _run_transition(args) -> int:
    units = UnitSystem()
    if args.xi is not None:
        xi = args.xi
        pulse_integral = None
    else:
        pulse_integral = args.pulse_integral
        xi = units.geometric_factor * units.phase_per_edm_field_time * pulse_integral
    cfg = {
        "dn": args.dn,
        "delta": args.delta,
        "xi": xi,
        "pulse_integral": pulse_integral,
        "check_oracle": bool(args.check_oracle),
        "nodes": args.nodes,
        "outputs": {"report": args.out, "manifest": args.manifest_out},
    }
    _write_manifest("transition", cfg)
    return _execute_transition(cfg)


def _execute_transition(cfg: dict) -> int:
    state = DipoleState(d_n=cfg["dn"], delta=cfg["delta"])
    xi = cfg["xi"]
    record = {
        "schema": SCHEMA_SUMMARY_JSON,
        "command": "transition",
        "dn": state.d_n,
        "delta": state.delta,
        "xi": xi,
        "p": flip_probability(state, xi),
    }
    if cfg.get("pulse_integral") is not None:
        record["pulse_integral"] = cfg["pulse_integral"]
    if cfg["check_oracle"]:
        nodes = max(cfg["nodes"], required_node_count(xi, state.delta))
        p_quad = flip_probability_quadrature(state, xi, QuadratureSpec(node_count=nodes))
        record["p_quadrature"] = p_quad
        record["abs_diff"] = abs(record["p"] - p_quad)
        record["nodes"] = nodes
    _emit(render_json(record), cfg["outputs"].get("report"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# contrast


def _run_contrast(args) -> int:
    cfg = {
        "dn": args.dn,
        "delta": args.delta,
        "xi": args.xi,
        "trials": args.trials,
        "seed": args.seed,
        "outputs": {"table": args.out, "manifest": args.manifest_out},
    }
    _write_manifest("contrast", cfg)
    return _execute_contrast(cfg)


def _execute_contrast(cfg: dict) -> int:
    state = DipoleState(d_n=cfg["dn"], delta=cfg["delta"])
    xi, trials, seed = cfg["xi"], cfg["trials"], cfg["seed"]
    workers = _workers()
    quantum = simulate_quantum(state, xi, trials, seed, workers=workers)
    stochastic = simulate_stochastic(state, xi, trials, seed, workers=workers)
    rows = [
        ["quantum", trials, quantum.flips, quantum.fraction, flip_probability(state, xi)],
        [
            "stochastic",
            trials,
            stochastic.flips,
            stochastic.fraction,
            expected_stochastic_fraction(state, xi),
        ],
    ]
    _emit(render_csv(CONTRAST_HEADER, rows), cfg["outputs"].get("table"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# scan


def _run_scan(args) -> int:
    if args.points < 1:
        raise ValueError("--points must be >= 1")
    if args.xi_max < args.xi_min:
        raise ValueError("--xi-max must be >= --xi-min")
    if args.log and args.xi_min <= 0:
        raise ValueError("--log spacing requires --xi-min > 0")
    cfg = {
        "dn": args.dn,
        "delta": args.delta,
        "xi_min": args.xi_min,
        "xi_max": args.xi_max,
        "points": args.points,
        "spacing": "log" if args.log else "linear",
        "nodes": args.nodes,
        "outputs": {"table": args.out, "manifest": args.manifest_out},
    }
    _write_manifest("scan", cfg)
    return _execute_scan(cfg)


def _execute_scan(cfg: dict) -> int:
    state = DipoleState(d_n=cfg["dn"], delta=cfg["delta"])
    if cfg["points"] == 1:
        xis = np.array([cfg["xi_min"]])
    elif cfg["spacing"] == "log":
        xis = np.geomspace(cfg["xi_min"], cfg["xi_max"], cfg["points"])
    else:
        xis = np.linspace(cfg["xi_min"], cfg["xi_max"], cfg["points"])
    worst_scale = max(abs(cfg["xi_min"]), abs(cfg["xi_max"]))
    nodes = max(cfg["nodes"], required_node_count(worst_scale, state.delta))
    spec = QuadratureSpec(node_count=nodes)
    rows = []
    for xi in xis:
        p_closed = flip_probability(state, float(xi))
        p_quad = flip_probability_quadrature(state, float(xi), spec)
        rows.append([float(xi), p_closed, p_quad, abs(p_closed - p_quad)])
    _emit(render_csv(SCAN_HEADER, rows), cfg["outputs"]["table"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# campaign


def _run_campaign_cmd(args) -> int:
    resolved = load_config(args.config)
    summary_out = args.summary_out or _sibling(args.out, ".summary.json")
    cfg = {
        "campaign": asdict(resolved.campaign),
        "units": asdict(resolved.units),
        "constants": asdict(resolved.constants),
        "outputs": {
            "cycles": args.out,
            "summary": summary_out,
            "manifest": args.manifest_out,
        },
    }
    _write_manifest("campaign", cfg)
    return _execute_campaign(cfg)


def _sibling(path: str, suffix: str) -> str:
    stem, _ = os.path.splitext(path)
    return stem + suffix


def _execute_campaign(cfg: dict) -> int:
    campaign = CampaignConfig(**cfg["campaign"])
    units = UnitSystem(**cfg["units"])
    constants = PhysicalConstants(**cfg["constants"])
    records = run_campaign(campaign, constants=constants, units=units)
    estimate = campaign_estimator(records, campaign, constants=constants, units=units)
    atomic_write_text(
        cfg["outputs"]["cycles"], render_csv(CYCLES_HEADER, cycles_to_rows(records))
    )
    summary = {
        "schema": SCHEMA_SUMMARY_JSON,
        "command": "campaign",
        "dn_hat": estimate.dn_hat,
        "standard_error": estimate.standard_error,
        "n_pairs": estimate.n_pairs,
        "degenerate": estimate.degenerate,
        "seed": campaign.seed,
        "cycles": campaign.cycles,
        "manifest": _manifest("campaign", cfg),
    }
    atomic_write_text(cfg["outputs"]["summary"], render_json(summary))
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit / bound


def _inference_settings(args) -> InferenceSettings:
    if getattr(args, "config", None):
        return load_config(args.config).inference
    return InferenceSettings()


def _pick(flag_value, config_value, derived):
    if flag_value is not None:
        return flag_value
    if config_value is not None:
        return config_value
    return derived


def _run_fit(args) -> int:
    dataset = _read_flip_dataset(args.data)
    settings = _inference_settings(args)
    xi_max = float(np.max(np.abs(dataset.xi)))
    if xi_max <= 0:
        raise ValueError("dataset must contain a nonzero xi")
    cfg = {
        "dataset": _dataset_to_cfg(dataset),
        "search": {
            "dn_min": _pick(args.dn_min, settings.dn_min_e_cm, 0.0),
            "dn_max": _pick(args.dn_max, settings.dn_max_e_cm, 0.5 * math.pi / xi_max),
            "delta_min": _pick(args.delta_min, settings.delta_min_e_cm, 0.0),
            "delta_max": _pick(args.delta_max, settings.delta_max_e_cm, 5.0 / xi_max),
            "grid_points": _pick(args.grid, settings.grid_points, 48),
            "resolution": _pick(args.resolution, settings.resolution, 1e-7),
        },
        "cl": _pick(args.cl, settings.cl, 0.95),
        "outputs": {"report": args.out, "manifest": args.manifest_out},
    }
    _write_manifest("fit", cfg)
    return _execute_fit(cfg)


def _execute_fit(cfg: dict) -> int:
    dataset = _dataset_from_cfg(cfg["dataset"])
    search = SearchBox(**cfg["search"])
    result = fit(dataset, search, interval_cl=cfg["cl"])
    report = {
        "schema": SCHEMA_SUMMARY_JSON,
        "command": "fit",
        "dn_hat": result.dn_hat,
        "delta_hat": result.delta_hat,
        "max_log_likelihood": result.max_log_likelihood,
        "dn_interval": list(result.dn_interval),
        "delta_interval": list(result.delta_interval),
        "interval_cl": result.interval_cl,
        "converged": result.converged,
        "message": result.message,
    }
    _emit(render_json(report), cfg["outputs"].get("report"))
    return EXIT_OK if result.converged else EXIT_NONCONVERGENCE


def _run_bound(args) -> int:
    dataset = _read_flip_dataset(args.data)
    settings = _inference_settings(args)
    xi_max = float(np.max(np.abs(dataset.xi)))
    if xi_max <= 0:
        raise ValueError("dataset must contain a nonzero xi")
    cfg = {
        "dataset": _dataset_to_cfg(dataset),
        "cl": _pick(args.cl, settings.cl, 0.95),
        "delta_min": _pick(args.delta_min, settings.delta_min_e_cm, 0.0),
        "delta_max": _pick(args.delta_max, settings.delta_max_e_cm, 1.0 / xi_max),
        "dn_max": _pick(args.dn_max, settings.dn_max_e_cm, 0.5 * math.pi / xi_max),
        "resolution": _pick(args.resolution, settings.resolution, 1e-7),
        "outputs": {"report": args.out, "manifest": args.manifest_out},
    }
    _write_manifest("bound", cfg)
    return _execute_bound(cfg)


def _execute_bound(cfg: dict) -> int:
    dataset = _dataset_from_cfg(cfg["dataset"])
    bound = upper_bound(
        dataset,
        cl=cfg["cl"],
        delta_bounds=(cfg["delta_min"], cfg["delta_max"]),
        dn_max=cfg["dn_max"],
        resolution=cfg["resolution"],
    )
    report = {
        "schema": SCHEMA_SUMMARY_JSON,
        "command": "bound",
        "upper_bound": bound,
        "cl": cfg["cl"],
        "delta_bounds": [cfg["delta_min"], cfg["delta_max"]],
        "dn_max": cfg["dn_max"],
    }
    _emit(render_json(report), cfg["outputs"].get("report"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# rerun

_EXECUTORS = {
    "transition": _execute_transition,
    "contrast": _execute_contrast,
    "scan": _execute_scan,
    "campaign": _execute_campaign,
    "fit": _execute_fit,
    "bound": _execute_bound,
}


def _run_rerun(args) -> int:
    with open(args.manifest, "r", encoding="utf-8") as handle:
        manifest = json.load(handle)
    if manifest.get("schema") != SCHEMA_MANIFEST_JSON:
        raise ValueError(f"not a manifest: schema {manifest.get('schema')!r}")
    command = manifest.get("command")
    if command not in _EXECUTORS:
        raise ValueError(f"manifest names unknown command {command!r}")
    cfg = manifest["config"]
    _write_manifest(command, cfg)
    return _EXECUTORS[command](cfg)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nedmsim",
        description="Spin-flip statistics and bound-setting for dipole searches.",
    )
    parser.add_argument("--version", action="version", version=f"nedmsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transition", help="closed-form flip probability")
    p.add_argument("--dn", type=float, required=True, help="dipole expectation, e.cm")
    p.add_argument("--delta", type=float, required=True, help="dipole uncertainty, e.cm")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--xi", type=float, help="kick parameter, rad per e.cm")
    group.add_argument(
        "--pulse-integral",
        type=float,
        help="field-time integral, (V/cm)*s; converted to xi with default units",
    )
    p.add_argument("--check-oracle", action="store_true", help="also run the quadrature oracle")
    p.add_argument("--nodes", type=int, default=200, help="quadrature nodes (auto-raised if low)")
    p.add_argument("--out", help="write the JSON record here instead of stdout")
    p.add_argument("--manifest-out", help="write the run manifest here")
    p.set_defaults(func=_run_transition)

    p = sub.add_parser("contrast", help="quantum vs stochastic counting run")
    p.add_argument("--dn", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--xi", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the CSV table here instead of stdout")
    p.add_argument("--manifest-out")
    p.set_defaults(func=_run_contrast)

    p = sub.add_parser("scan", help="P vs xi table with quadrature oracle")
    p.add_argument("--dn", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--xi-min", type=float, required=True)
    p.add_argument("--xi-max", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--log", action="store_true", help="log-spaced xi grid")
    p.add_argument("--nodes", type=int, default=200)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--manifest-out")
    p.set_defaults(func=_run_scan)

    p = sub.add_parser("campaign", help="simulate a comagnetometer campaign")
    p.add_argument("--config", required=True, help="INI config file")
    p.add_argument("--out", required=True, help="cycle table CSV path")
    p.add_argument("--summary-out", help="summary JSON path (default: <out>.summary.json)")
    p.add_argument("--manifest-out")
    p.set_defaults(func=_run_campaign_cmd)

    p = sub.add_parser("fit", help="joint (dn, delta) likelihood fit")
    p.add_argument("--data", required=True, help="flip-count CSV (xi,trials,flips)")
    p.add_argument("--config", help="INI config providing [inference] defaults")
    p.add_argument("--dn-max", type=float)
    p.add_argument("--dn-min", type=float)
    p.add_argument("--delta-max", type=float)
    p.add_argument("--delta-min", type=float)
    p.add_argument("--grid", type=int, help="coarse grid points per axis")
    p.add_argument("--resolution", type=float, help="relative refinement stop")
    p.add_argument("--cl", type=float, help="interval confidence level")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--manifest-out")
    p.set_defaults(func=_run_fit)

    p = sub.add_parser("bound", help="profile-likelihood upper bound on dn")
    p.add_argument("--data", required=True, help="flip-count CSV (xi,trials,flips)")
    p.add_argument("--config", help="INI config providing [inference] defaults")
    p.add_argument("--cl", type=float, help="one-sided confidence level")
    p.add_argument("--delta-max", type=float, help="delta profiling upper bound")
    p.add_argument("--delta-min", type=float)
    p.add_argument("--dn-max", type=float, help="scan ceiling for the bound search")
    p.add_argument("--resolution", type=float)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--manifest-out")
    p.set_defaults(func=_run_bound)

    p = sub.add_parser("rerun", help="re-execute a command from its manifest")
    p.add_argument("manifest", help="manifest JSON written by a previous run")
    p.set_defaults(func=_run_rerun)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
