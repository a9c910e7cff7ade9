"""Command-line entry point: config ingestion, sweeps and CSV output.

Config files hold one ``key = value`` pair per line; ``#`` starts a comment.
Keys are the :class:`~arraysim.config.SystemConfig` field names, the sweep
keys (``ap_types``, ``swept_parameter``, ``values``,
``n_network_realizations``, ``n_channel_realizations``, ``master_seed``) or
one of the symbol aliases in ``ALIASES``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import ConfigError, FarFieldWarning, SystemConfig
from .experiment import SweepSpec, run_sweep, summarize

RECORD_HEADER = [
    "swept_param", "swept_value", "ap_type", "realization",
    "pose_x", "pose_y", "pose_theta", "predicted_se", "mean_se",
]
SUMMARY_HEADER = ["swept_param", "swept_value", "ap_type", "mean", "stderr", "n"]

ALIASES = {
    "m": "m_antennas",
    "k": "k_devices",
    "l_a": "area_side",
    "l_b": "movement_side",
    "p": "tx_power",
    "n0": "noise_psd",
    "b": "bandwidth",
    "n_f_db": "noise_figure_db",
    "tau_p": "pilot_len",
    "tau_c": "slot_len",
    "f_c": "carrier_hz",
    "carrier": "carrier_hz",
    "delta": "spacing",
    "eta": "pathloss_exp",
    "d0": "ref_distance",
    "n": "cluster_count",
    "sigma_psi_deg": "asd_deg",
}

_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(SystemConfig)}
_SWEEP_KEYS = {"ap_types", "swept_parameter", "values", "n_network_realizations",
               "n_channel_realizations", "master_seed"}
_SWEEP_DEFINING = {"ap_types", "swept_parameter", "values"}

# Value grids are approximate reconstructions of the reference sweeps.
PRESETS = {
    "fig6": {
        "swept_parameter": "kappa_db",
        "values": (0.0, 5.0, 10.0, 15.0, 20.0),
        "ap_types": ("FAA", "RAA", "MAA@25", "MAA@100", "MRAA@100"),
        "sigma_e_sq_db": -10.0,
    },
    "fig7": {
        "swept_parameter": "movement_side",
        "values": (0.1, 1.0, 2.5, 5.0, 10.0, 25.0, 50.0, 100.0),
        "ap_types": ("FAA", "RAA", "MAA", "MRAA"),
        "kappa_db": 10.0,
        "sigma_e_sq_db": -10.0,
    },
    "fig8": {
        "swept_parameter": "sigma_e_sq_db",
        "values": (-60.0, -40.0, -20.0, -10.0, 0.0, 10.0, 20.0),
        "ap_types": ("FAA", "RAA", "MAA", "MRAA"),
        "kappa_db": 10.0,
    },
    "fig9": {
        "swept_parameter": "area_side",
        "values": (50.0, 75.0, 100.0, 125.0, 150.0),
        "ap_types": ("FAA", "RAA", "MAA@1", "MAA@2.5", "MAA@5", "MAA@25", "MRAA@25"),
        "kappa_db": 10.0,
        "sigma_e_sq_db": -10.0,
    },
}


@dataclass
class RunManifest:
    config_path: Optional[str] = None
    preset: Optional[str] = None
    overrides: dict = field(default_factory=dict)
    output_path: str = "records.csv"
    seed: Optional[int] = None
    workers: int = 1


def _parse_value(key: str, raw: str):
    text = raw.strip()
    try:
        if key in ("ap_types",):
            items = tuple(t.strip() for t in text.split(",") if t.strip())
            if not items:
                raise ValueError("empty list")
            return items
        if key == "values":
            items = tuple(float(t) for t in text.split(",") if t.strip())
            if not items:
                raise ValueError("empty list")
            return items
        if key == "swept_parameter":
            return text
        if key in ("n_network_realizations", "n_channel_realizations", "master_seed"):
            return int(text)
        f = _CONFIG_FIELDS[key]
        if key == "movement_side" and text.lower() in ("none", ""):
            return None
        if f.type in ("int", int):
            return int(text)
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {key} = {raw!r}: {exc}", key) from None


def _canonical_key(key: str) -> str:
    k = key.strip()
    if k in _CONFIG_FIELDS or k in _SWEEP_KEYS:
        return k
    alias = ALIASES.get(k.lower())
    if alias is None:
        raise ConfigError(f"unknown key {k!r}", k)
    return alias


def parse_pairs(lines) -> dict:
    """Typed ``{key: value}`` from ``key = value`` lines."""
    out = {}
    for number, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        key = _canonical_key(key)
        out[key] = _parse_value(key, raw)
    return out


def build(pairs: dict):
    """SystemConfig and SweepSpec from typed pairs, defaults elsewhere.

    Without sweep keys the sweep is a single point: all four AP types at
    the configured Rician factor.
    """
    config_kw = {k: v for k, v in pairs.items() if k in _CONFIG_FIELDS}
    config = SystemConfig(**config_kw)
    sweep_kw = {k: v for k, v in pairs.items() if k in _SWEEP_KEYS}
    sweep_kw.setdefault("ap_types", ("FAA", "RAA", "MAA", "MRAA"))
    sweep_kw.setdefault("swept_parameter", "kappa_db")
    sweep_kw.setdefault("values", (getattr(config, sweep_kw["swept_parameter"], config.kappa_db),))
    sweep_kw.setdefault("n_channel_realizations", config.n_channel_realizations)
    spec = SweepSpec(**sweep_kw)
    # catch sweep points that would violate the config invariants before running
    for value in spec.values:
        config.replace(**{spec.swept_parameter: value})
    return config, spec


def parse_config(text: str):
    return build(parse_pairs(text.splitlines()))


def format_float(value: float) -> str:
    return format(float(value), ".9g")


def records_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_HEADER)
    for r in records:
        writer.writerow([
            r.swept_param, format_float(r.swept_value), r.ap_type, r.realization_index,
            format_float(r.pose.x), format_float(r.pose.y), format_float(r.pose.theta),
            format_float(r.predicted_objective), format_float(r.mean_se),
        ])
    return buf.getvalue()


def summary_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for s in rows:
        writer.writerow([s.swept_param, format_float(s.swept_value), s.ap_type,
                         format_float(s.mean), format_float(s.stderr), s.n])
    return buf.getvalue()


def summary_path(output_path) -> Path:
    out = Path(output_path)
    return out.with_name(out.stem + "_summary" + (out.suffix or ".csv"))


def resolve(manifest: RunManifest):
    pairs = {}
    if manifest.config_path:
        pairs.update(parse_pairs(Path(manifest.config_path).read_text().splitlines()))
    if manifest.preset:
        if manifest.preset not in PRESETS:
            raise ConfigError(f"unknown preset {manifest.preset!r}", "preset")
        clash = _SWEEP_DEFINING & pairs.keys()
        if clash:
            raise ConfigError(
                f"a preset cannot be combined with sweep keys in the config ({', '.join(sorted(clash))})",
                sorted(clash)[0],
            )
        pairs.update(PRESETS[manifest.preset])
    for key, raw in manifest.overrides.items():
        key = _canonical_key(key)
        pairs[key] = _parse_value(key, raw)
    seed = manifest.seed
    if seed is None and os.environ.get("ARRAYSIM_SEED"):
        try:
            seed = int(os.environ["ARRAYSIM_SEED"])
        except ValueError:
            raise ConfigError("ARRAYSIM_SEED must be an integer", "master_seed") from None
    if seed is not None:
        pairs["master_seed"] = seed
    return build(pairs)


def run(manifest: RunManifest, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            config, spec = resolve(manifest)
        for w in caught:
            print(f"warning: {w.message}", file=stderr)
    except ConfigError as exc:
        where = f" [{exc.key}]" if exc.key else ""
        print(f"config error{where}: {exc}", file=stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=stderr)
        return 2

    try:
        with warnings.catch_warnings():
            # already reported once above
            warnings.simplefilter("ignore", FarFieldWarning)
            records = run_sweep(spec, config, workers=manifest.workers)
        rows = summarize(records)
        out = Path(manifest.output_path)
        out.write_text(records_csv(records))
        summary_path(out).write_text(summary_csv(rows))
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit 1
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return 1

    for s in rows:
        print(f"{s.swept_param}={format_float(s.swept_value)} {s.ap_type:<9s} "
              f"mean_se={s.mean:.4f} +- {s.stderr:.4f} (n={s.n})", file=stdout)
    return 0


def _override(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arraysim",
        description="Uplink SE of fixed, rotary, movable and movable-rotary antenna arrays.",
    )
    parser.add_argument("--config", help="key = value parameter file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="figure reproduction sweep")
    parser.add_argument("--set", dest="overrides", action="append", type=_override, default=[],
                        metavar="KEY=VALUE", help="override one parameter (repeatable)")
    parser.add_argument("--out", default="records.csv", help="records CSV path")
    parser.add_argument("--seed", type=int, help="master seed (falls back to $ARRAYSIM_SEED)")
    parser.add_argument("--workers", type=int, default=1, help="worker processes")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    manifest = RunManifest(
        config_path=args.config,
        preset=args.preset,
        overrides=dict(args.overrides),
        output_path=args.out,
        seed=args.seed,
        workers=max(1, args.workers),
    )
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
