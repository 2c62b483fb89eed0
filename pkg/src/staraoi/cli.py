"""Command-line entry point: config files, sweeps and CSV output.

Config files are line-oriented `key = value` pairs; `[section]` headers
are allowed for organization and ignored, `#` or `;` start comments.
Unspecified keys fall back to the reference defaults. Threshold keys
are given in dB (gamma_th_db, energy_min_db) and converted to linear
scale exactly once, at config resolution; the resolved linear values
are echoed in the run manifest.
"""

import argparse
import csv
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, sim, star_ris
from .channel import Geometry
from .sim import MODES, SWEEP_PARAMETERS, SimConfig, run_sweep, summarize

RESULTS_HEADER = ("mode,parameter,value,run_id,avg_sum_aoi,min_harvested_energy,"
                  "delivery_rate_t,delivery_rate_r,infeasible_fraction,"
                  "mean_ao_iterations")
SUMMARY_HEADER = ("mode,parameter,value,mean_avg_sum_aoi,stderr_avg_sum_aoi,runs")

MODE_TOKENS = {"es": star_ris.ES, "ms": star_ris.MS, "conv": star_ris.CONVENTIONAL,
               "random": sim.RANDOM_PHASE}

_PAIR_KEYS = ("bs", "ris", "eu_t", "eu_r", "iu_t", "iu_r")
_FLOAT_KEYS = ("exponent_info", "exponent_energy", "lambda_t", "lambda_r",
               "gamma_th_db", "gamma_th", "power_budget", "energy_min_db",
               "sigma2_info", "sigma2_energy")
_INT_KEYS = ("m", "n_t", "horizon", "seed", "monte_carlo_runs")
_STR_KEYS = ("mode",)
VALID_KEYS = _PAIR_KEYS + _FLOAT_KEYS + _INT_KEYS + _STR_KEYS

_GEOMETRY_FIELDS = {"bs": "bs_pos", "ris": "ris_pos", "eu_t": "eu_t_pos",
                    "eu_r": "eu_r_pos", "iu_t": "iu_t_pos", "iu_r": "iu_r_pos"}


def _parse_pair(text):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError("expected 'x,y'")
    return np.array([float(parts[0]), float(parts[1])])


def _resolve_mode(token):
    token = token.strip().lower()
    if token in MODE_TOKENS:
        return MODE_TOKENS[token]
    if token in MODES:
        return token
    raise ValueError("unknown mode %r; expected one of %s"
                     % (token, ", ".join(sorted(MODE_TOKENS))))


def parse_config_text(text):
    """Parse config text into a raw key -> string mapping."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].split(";", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ValueError("line %d: malformed section header" % lineno)
            continue
        if "=" not in stripped:
            raise ValueError("line %d: expected 'key = value'" % lineno)
        key, value = stripped.split("=", 1)
        key = key.strip().lower()
        if key not in VALID_KEYS:
            raise ValueError("unknown key %r; valid keys: %s"
                             % (key, ", ".join(sorted(VALID_KEYS))))
        raw[key] = value.strip()
    return raw


def load_config(path=None):
    """Resolve a config file (or the defaults when path is None)."""
    raw = {}
    if path is not None:
        raw = parse_config_text(Path(path).read_text())
    if "gamma_th" in raw and "gamma_th_db" in raw:
        raise ValueError("give either gamma_th or gamma_th_db, not both")

    geometry_kwargs = {}
    for key in _PAIR_KEYS:
        if key in raw:
            geometry_kwargs[_GEOMETRY_FIELDS[key]] = _parse_pair(raw[key])
    for key in ("exponent_info", "exponent_energy"):
        if key in raw:
            geometry_kwargs[key] = float(raw[key])
    geometry = Geometry(**geometry_kwargs)

    kwargs = {"geometry": geometry}
    for key in _INT_KEYS:
        if key in raw:
            kwargs[key] = int(raw[key])
    for key in ("lambda_t", "lambda_r", "power_budget", "sigma2_info",
                "sigma2_energy"):
        if key in raw:
            kwargs[key] = float(raw[key])
    if "gamma_th" in raw:
        kwargs["gamma_th"] = float(raw["gamma_th"])
    elif "gamma_th_db" in raw:
        kwargs["gamma_th"] = 10.0 ** (float(raw["gamma_th_db"]) / 10.0)
    if "energy_min_db" in raw:
        kwargs["energy_min"] = 10.0 ** (float(raw["energy_min_db"]) / 10.0)
    if "mode" in raw:
        kwargs["mode"] = _resolve_mode(raw["mode"])
    return SimConfig(**kwargs)


def parse_sweep(text):
    """Parse 'param=v1,v2,...' into (parameter, values list)."""
    if "=" not in text:
        raise ValueError("sweep must look like param=v1,v2,...")
    parameter, values_text = text.split("=", 1)
    parameter = parameter.strip().lower()
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError("unknown sweep parameter %r; expected one of %s"
                         % (parameter, ", ".join(SWEEP_PARAMETERS)))
    values = [float(v.strip()) for v in values_text.split(",") if v.strip()]
    if not values:
        raise ValueError("sweep needs at least one value")
    if parameter in ("n_t", "m"):
        values = [int(v) for v in values]
    return parameter, values


@dataclass
class RunManifest:
    config_path: str
    config: SimConfig
    parameter: str
    values: list
    modes: list
    out_dir: Path
    version: str
    timestamp: str
    seed: int


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_results_csv(path, rows):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RESULTS_HEADER.split(","))
        for row in rows:
            met = row.metrics
            writer.writerow([row.mode, row.parameter, _fmt(row.value),
                             str(row.run_id), _fmt(met.avg_sum_aoi),
                             _fmt(met.min_harvested_energy),
                             _fmt(met.delivery_rate.t), _fmt(met.delivery_rate.r),
                             _fmt(met.infeasible_slot_fraction),
                             _fmt(met.mean_ao_iterations)])


def write_summary_csv(path, summary):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER.split(","))
        for mode, parameter, value, mean, stderr, runs in summary:
            writer.writerow([mode, parameter, _fmt(value), _fmt(mean),
                             _fmt(stderr), str(runs)])


def write_manifest(path, manifest):
    lines = ["config_path = %s" % manifest.config_path,
             "version = %s" % manifest.version,
             "timestamp = %s" % manifest.timestamp,
             "seed = %d" % manifest.seed,
             "sweep_parameter = %s" % manifest.parameter,
             "sweep_values = %s" % ",".join(_fmt(v) for v in manifest.values),
             "modes = %s" % ",".join(manifest.modes),
             "out_dir = %s" % manifest.out_dir]
    cfg = manifest.config
    lines += ["m = %d" % cfg.m, "n_t = %d" % cfg.n_t, "horizon = %d" % cfg.horizon,
              "lambda_t = %s" % _fmt(cfg.lambda_t), "lambda_r = %s" % _fmt(cfg.lambda_r),
              "gamma_th_linear = %s" % _fmt(cfg.gamma_th),
              "energy_min_linear = %s" % _fmt(cfg.energy_min),
              "power_budget = %s" % _fmt(cfg.power_budget),
              "sigma2_info = %s" % _fmt(cfg.sigma2_info),
              "sigma2_energy = %s" % _fmt(cfg.sigma2_energy),
              "mode = %s" % cfg.mode,
              "monte_carlo_runs = %d" % cfg.monte_carlo_runs]
    Path(path).write_text("\n".join(lines) + "\n")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="staraoi",
        description="Monte Carlo sweeps for the STAR-RIS SWIPT AoI simulator")
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--sweep", help="parameter sweep, e.g. gamma_th=1,2,4 "
                        "(gamma_th and power_budget linear, energy_min_db in dB)")
    parser.add_argument("--modes", default=None,
                        help="comma list from es,ms,conv,random")
    parser.add_argument("--runs", type=int, default=None,
                        help="Monte Carlo runs per point")
    parser.add_argument("--seed", type=int, default=None, help="base seed")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel episode workers")
    parser.add_argument("--quiet", action="store_true", help="suppress progress")
    return parser


def run_command(manifest, workers=1, quiet=True):
    """Execute the sweep a manifest describes and write the CSV outputs."""
    out_dir = Path(manifest.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    progress = None
    if not quiet:
        def progress(mode, value, mean):
            print("%s %s=%s mean avg_sum_aoi %.6g"
                  % (mode, manifest.parameter, value, mean))
    rows = run_sweep(manifest.config, manifest.parameter, manifest.values,
                     manifest.modes, workers=workers, progress=progress)
    write_results_csv(out_dir / "results.csv", rows)
    write_summary_csv(out_dir / "summary.csv", summarize(rows))
    write_manifest(out_dir / "manifest.txt", manifest)
    return rows


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.runs is not None:
            if args.runs < 1:
                raise ValueError("runs must be at least 1")
            config = replace(config, monte_carlo_runs=args.runs)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.sweep:
            parameter, values = parse_sweep(args.sweep)
        else:
            parameter, values = "gamma_th", [config.gamma_th]
        if args.modes:
            modes = [_resolve_mode(tok) for tok in args.modes.split(",") if tok.strip()]
            if not modes:
                raise ValueError("no modes given")
        else:
            modes = [config.mode]
        manifest = RunManifest(args.config or "<defaults>", config, parameter,
                               values, modes, Path(args.out), __version__,
                               time.strftime("%Y-%m-%dT%H:%M:%S"), config.seed)
        run_command(manifest, workers=args.workers, quiet=args.quiet)
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    if not args.quiet:
        print("wrote %s" % (Path(args.out) / "results.csv"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
