"""TOML run configuration.

Example::

    [run]
    problem = "bar"          # or "toy"
    n_mc = 4096
    n_serial = 256
    n_workers = 4
    base_seed = 42
    lease_duration_ms = 60000
    output_dir = "out"

    [histogram]
    lower_edge = -5.0
    upper_edge = 5.0
    n_bins = 100

    [toy]
    busy_iterations = 0

    [bar]                    # any BarConfig field
    n_elements = 50

    [prices]
    vm_hour_price = 0.12
"""
from __future__ import annotations

import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bar import BarConfig
from .costs import PriceSheet
from .engine import RunConfig
from .errors import ConfigError
from .problems import BarProblem, ToyDigitSquare
from .stats import HistogramSpec

_RUN_KEYS = {"problem", "n_mc", "n_serial", "n_workers", "base_seed",
             "lease_duration_ms", "output_dir"}


def parse_config(data):
    """Build ``(RunConfig, PriceSheet)`` from a parsed TOML mapping."""
    unknown = set(data) - {"run", "histogram", "toy", "bar", "prices"}
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    run = dict(data.get("run", {}))
    bad = set(run) - _RUN_KEYS
    if bad:
        raise ConfigError(f"unknown [run] keys: {sorted(bad)}")
    kind = run.pop("problem", "toy")
    try:
        if kind == "toy":
            problem = ToyDigitSquare(**data.get("toy", {}))
        elif kind == "bar":
            problem = BarProblem(BarConfig.from_mapping(data.get("bar", {})))
        else:
            raise ConfigError(f"unknown problem {kind!r}")
        hist = HistogramSpec(**data.get("histogram", {}))
        prices = PriceSheet(**data.get("prices", {}))
        if "n_mc" not in run or "n_serial" not in run:
            raise ConfigError("[run] needs n_mc and n_serial")
        config = RunConfig(
            n_mc=run["n_mc"],
            n_serial=run["n_serial"],
            n_workers=run.get("n_workers", 1),
            base_seed=run.get("base_seed", 0),
            lease_duration=float(run.get("lease_duration_ms", 60_000.0)),
            problem=problem,
            histogram_spec=hist,
            output_dir=run.get("output_dir"),
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return config, prices


def load_config(path):
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data)
