"""Command-line experiment harness.

Subcommands ``ladder``, ``kdist``, ``sumrate`` and ``aoi`` sweep an SNR grid,
evaluate the closed forms and the Monte Carlo engine side by side, and write
CSV or JSON.

Settings come from, in increasing precedence: built-in defaults, a
``--config`` file of ``key = value`` lines (keys are the long flag names,
with or without dashes), and command-line flags.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import analysis, simulate
from .ladder import LadderOverflowError, SystemParams, build_ladder, db_to_linear

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultRow",
    "COLUMNS",
    "parse_snr_grid",
    "load_config_file",
    "run_ladder",
    "run_kdist",
    "run_sumrate",
    "run_aoi",
    "emit",
    "format_table",
    "read_table",
    "main",
]

COLUMNS = ("metric_name", "snr_db", "analytic", "mc", "stderr", "scheduler", "convention", "seed", "trials")
METRICS = ("ladder_level", "ladder_prefix", "k_mean", "k_mean_tail_bound", "k_pmf", "sum_rate", "aoi_tdma", "aoi_crnoma")
_METRIC_RE = re.compile(r"^(?P<family>[a-z_]+?)(?:_(?P<index>\d+))?$")


class ConfigError(ValueError):
    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    rate_bpcu: float = 1.0
    snr_db_grid: list = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
    num_secondary: int = 8
    slots_per_frame: int = 8
    slot_seconds: float = 2.0
    trials: int = 1_000_000
    super_frames: int = 100_000
    seed: int = 1
    scheduler: str = "random"
    aoi_convention: str = "paper"
    output_path: str | None = None
    output_format: str = "csv"
    kmax: int = 10
    workers: int = 1

    def validate(self):
        def positive(name, integer=False):
            value = getattr(self, name)
            if integer and (isinstance(value, bool) or not isinstance(value, (int, np.integer))):
                raise ConfigError(name, f"must be an integer, got {value!r}")
            if not (isinstance(value, (int, float, np.integer, np.floating)) and math.isfinite(value) and value > 0):
                raise ConfigError(name, f"must be positive and finite, got {value!r}")

        positive("rate_bpcu")
        if not self.snr_db_grid:
            raise ConfigError("snr_db_grid", "grid is empty")
        for v in self.snr_db_grid:
            if not math.isfinite(v):
                raise ConfigError("snr_db_grid", f"non-finite value {v!r}")
        for name in ("num_secondary", "slots_per_frame", "trials", "super_frames", "kmax", "workers"):
            positive(name, integer=True)
        positive("slot_seconds")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", f"must be an integer in [0, 2**64), got {self.seed!r}")
        if self.scheduler not in simulate.SCHEDULERS:
            raise ConfigError("scheduler", f"must be one of {simulate.SCHEDULERS}, got {self.scheduler!r}")
        if self.aoi_convention not in analysis.CONVENTIONS:
            raise ConfigError("aoi_convention", f"must be one of {analysis.CONVENTIONS}, got {self.aoi_convention!r}")
        if self.output_format not in ("csv", "json"):
            raise ConfigError("output_format", f"must be csv or json, got {self.output_format!r}")
        return self

    def params(self, snr_db):
        return SystemParams(
            self.rate_bpcu,
            db_to_linear(snr_db),
            self.num_secondary,
            self.slots_per_frame,
            self.slot_seconds,
        )


@dataclass(frozen=True)
class ResultRow:
    metric_name: str
    snr_db: float | None
    analytic: float | None
    mc: float | None
    stderr: float | None
    scheduler: str = ""
    convention: str = ""
    seed: int | None = None
    trials: int | None = None

    def __post_init__(self):
        match = _METRIC_RE.match(self.metric_name)
        if self.metric_name not in METRICS and not (match and match["family"] in METRICS and match["index"]):
            raise ValueError(f"unknown metric {self.metric_name!r}")
        if self.stderr is not None and self.stderr < 0:
            raise ValueError(f"negative stderr {self.stderr}")


def _sort_key(row):
    name = row.metric_name
    if name in METRICS:
        family, index = name, -1
    else:
        match = _METRIC_RE.match(name)
        family, index = match["family"], int(match["index"])
    snr = -math.inf if row.snr_db is None else row.snr_db
    return METRICS.index(family), index, snr


def parse_snr_grid(values):
    """Expand ``["0:30:5", "33"]`` style entries into a sorted list of dB values.

    Ranges ``a:b:step`` include ``b`` when it lies on the step grid.
    """
    grid = []
    for entry in values:
        for token in str(entry).replace(",", " ").split():
            if ":" in token:
                parts = token.split(":")
                if len(parts) != 3:
                    raise ConfigError("snr_db_grid", f"range must be a:b:step, got {token!r}")
                try:
                    a, b, step = (float(p) for p in parts)
                except ValueError:
                    raise ConfigError("snr_db_grid", f"bad range {token!r}") from None
                if not step > 0 or b < a:
                    raise ConfigError("snr_db_grid", f"range needs a <= b and step > 0, got {token!r}")
                count = int(math.floor((b - a) / step + 1e-9)) + 1
                grid.extend(round(a + i * step, 12) for i in range(count))
            else:
                try:
                    grid.append(float(token))
                except ValueError:
                    raise ConfigError("snr_db_grid", f"not a number: {token!r}") from None
    return sorted(set(grid))


# flag name -> (config field, converter)
_OPTIONS = {
    "rate": ("rate_bpcu", float),
    "snr-db": ("snr_db_grid", None),
    "users": ("num_secondary", int),
    "slots": ("slots_per_frame", int),
    "slot-seconds": ("slot_seconds", float),
    "trials": ("trials", int),
    "super-frames": ("super_frames", int),
    "seed": ("seed", int),
    "scheduler": ("scheduler", str),
    "convention": ("aoi_convention", str),
    "out": ("output_path", str),
    "format": ("output_format", str),
    "kmax": ("kmax", int),
    "workers": ("workers", int),
}


def _convert(flag, raw):
    name, conv = _OPTIONS[flag]
    if conv is None:
        return name, parse_snr_grid(raw if isinstance(raw, list) else [raw])
    try:
        return name, conv(raw)
    except (TypeError, ValueError):
        raise ConfigError(name, f"cannot parse {raw!r} for --{flag}") from None


def load_config_file(path):
    """Read ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        flag = key.lstrip("-").replace("_", "-")
        if flag not in _OPTIONS:
            raise ConfigError("config", f"{path}:{lineno}: unknown key {key!r}")
        name, value = _convert(flag, raw)
        values[name] = value
    return values


# -- experiments --------------------------------------------------------------


def _nan_to_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


def run_ladder(config):
    """SNR levels ``P_k`` and prefix sums ``eta_k`` for ``k = 1..kmax``."""
    config.validate()
    ladder = build_ladder(config.params(config.snr_db_grid[0]), config.kmax)
    rows = []
    for k in range(1, ladder.kmax + 1):
        rows.append(ResultRow(f"ladder_level_{k}", None, ladder.level(k), None, None))
        rows.append(ResultRow(f"ladder_prefix_{k}", None, ladder.eta(k), None, None))
    return sorted(rows, key=_sort_key)


def run_kdist(config, tol=1e-15):
    """Mean and distribution of ``K`` per SNR point, analytic and Monte Carlo."""
    config.validate()
    rows = []
    for snr_db in config.snr_db_grid:
        params = config.params(snr_db)
        pmf = analysis.k_pmf(params, tol)
        emp, est = simulate.simulate_k(params, config.trials, config.seed, config.workers)
        common = dict(seed=config.seed, trials=config.trials)
        rows.append(ResultRow("k_mean", snr_db, pmf.mean(), est.mean, _nan_to_none(est.std_error), **common))
        rows.append(ResultRow("k_mean_tail_bound", snr_db, pmf.mean_tail_bound(params), None, None, **common))
        for n in range(max(len(pmf.probs), len(emp))):
            a = float(pmf.probs[n]) if n < len(pmf.probs) else None
            p = float(emp[n]) if n < len(emp) else 0.0
            se = math.sqrt(p * (1 - p) / (config.trials - 1)) if config.trials > 1 else None
            rows.append(ResultRow(f"k_pmf_{n}", snr_db, a, p, se, **common))
    return sorted(rows, key=_sort_key)


def run_sumrate(config, tol=1e-15):
    """Secondary sum-rate; the closed form is only defined for random scheduling."""
    config.validate()
    rows = []
    for snr_db in config.snr_db_grid:
        params = config.params(snr_db)
        analytic = analysis.sum_rate_closed_form(params, tol) if config.scheduler == "random" else None
        est = simulate.simulate_sum_rate(params, config.scheduler, config.trials, config.seed, config.workers)
        rows.append(
            ResultRow("sum_rate", snr_db, analytic, est.mean, _nan_to_none(est.std_error),
                      scheduler=config.scheduler, seed=config.seed, trials=config.trials)
        )
    return sorted(rows, key=_sort_key)


def run_aoi(config):
    """TDMA and CR-NOMA average AoI under the configured convention."""
    config.validate()
    conv = config.aoi_convention
    rows = []
    for snr_db in config.snr_db_grid:
        params = config.params(snr_db)
        analytic = {
            "tdma": analysis.aoi_tdma(params, conv),
            "crnoma": analysis.aoi_crnoma(params, convention=conv).value_seconds,
        }
        for scheme in simulate.SCHEMES:
            sim = simulate.simulate_aoi(params, scheme, config.super_frames, config.seed, config.workers)
            est = sim.estimates[conv]
            rows.append(
                ResultRow(f"aoi_{scheme}", snr_db, analytic[scheme], est.mean, _nan_to_none(est.std_error),
                          convention=conv, seed=config.seed, trials=config.super_frames)
            )
    return sorted(rows, key=_sort_key)


# -- output -------------------------------------------------------------------


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".17g") if math.isfinite(value) else ""
    return str(value)


def format_table(rows, output_format="csv"):
    """Serialise rows to CSV or JSON text with a fixed column order."""
    if output_format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([_fmt(getattr(row, c)) for c in COLUMNS])
        return buf.getvalue()
    if output_format == "json":
        items = []
        for row in rows:
            parts = []
            for c in COLUMNS:
                value = getattr(row, c)
                text = _fmt(value)
                if isinstance(value, str):
                    text = json.dumps(value)
                elif text == "":
                    text = "null"
                parts.append(f"{json.dumps(c)}: {text}")
            items.append("  {" + ", ".join(parts) + "}")
        return "[\n" + ",\n".join(items) + "\n]\n"
    raise ValueError(f"unknown format {output_format!r}")


def emit(rows, output_format="csv", path=None):
    """Write ``rows`` to ``path`` (stdout when ``None``).  Refuses empty tables."""
    if not rows:
        raise ValueError("refusing to write an empty result table")
    text = format_table(rows, output_format)
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write results to {path}: {exc.strerror}") from None


def _parse_cell(column, text):
    if text == "" or text is None:
        return "" if column in ("scheduler", "convention") else None
    if column in ("metric_name", "scheduler", "convention"):
        return text
    if column in ("seed", "trials"):
        return int(text)
    return float(text)


def read_table(path):
    """Parse a CSV or JSON file written by :func:`emit` back into rows."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("["):
        records = json.loads(text)
        return [
            ResultRow(**{c: ("" if rec[c] is None and c in ("scheduler", "convention") else rec[c]) for c in COLUMNS})
            for rec in records
        ]
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    return [ResultRow(**{c: _parse_cell(c, rec[c]) for c in COLUMNS}) for rec in reader]


# -- entry point --------------------------------------------------------------

_RUNNERS = {"ladder": run_ladder, "kdist": run_kdist, "sumrate": run_sumrate, "aoi": run_aoi}


def _build_parser():
    parser = argparse.ArgumentParser(prog="crnoma", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value settings file")
    common.add_argument("--rate", help="target rate R in bits per channel use")
    common.add_argument("--snr-db", action="append", metavar="DB|A:B:STEP",
                        help="transmit SNR point or inclusive range; repeatable")
    common.add_argument("--users", help="number of secondary users M")
    common.add_argument("--slots", help="slots per TDMA frame N")
    common.add_argument("--slot-seconds", help="slot duration T")
    common.add_argument("--trials", help="Monte Carlo trials for kdist/sumrate")
    common.add_argument("--super-frames", help="super-frames simulated by aoi")
    common.add_argument("--seed", help="master random seed")
    common.add_argument("--scheduler", help="random or greedy")
    common.add_argument("--convention", help="AoI convention: paper or trapezoid")
    common.add_argument("--kmax", help="ladder depth for the ladder subcommand")
    common.add_argument("--workers", help="worker processes; results do not depend on it")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--format", help="csv or json")
    for name in _RUNNERS:
        sub.add_parser(name, parents=[common], help=_RUNNERS[name].__doc__.splitlines()[0])
    return parser


def config_from_args(args):
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    for flag in _OPTIONS:
        raw = getattr(args, flag.replace("-", "_"))
        if raw is not None:
            name, value = _convert(flag, raw)
            values[name] = value
    config = ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)}
    return replace(config, **{k: v for k, v in values.items() if k in known}).validate()


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        rows = _RUNNERS[args.command](config)
        emit(rows, config.output_format, config.output_path)
    except ConfigError as exc:
        print(f"crnoma: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (LadderOverflowError, simulate.InsufficientSuccessesError, ArithmeticError, ValueError, OSError) as exc:
        print(f"crnoma: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
