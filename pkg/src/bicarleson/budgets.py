"""Calibrated ratio budgets shipped with the package.

Each inequality with an unspecified constant is checked as LHS <= budget * RHS.
Budgets are produced once by `scripts/calibrate.py` and committed in
data/budgets.json together with a hash of the fixture battery.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources


class ConfigurationError(ValueError):
    pass


_active: list = [None]


def use_budget_file(path: str | None) -> None:
    """Make `path` the default budget file for this process (None restores the shipped one)."""
    _active[0] = path


@lru_cache(maxsize=None)
def _load(path: str | None) -> dict:
    if path is None:
        text = resources.files("bicarleson").joinpath("data/budgets.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return json.loads(text)


def load_budgets(path: str | None = None) -> dict:
    """The full budget file: {"battery_hash": ..., "budgets": {kind: value}, ...}."""
    try:
        return _load(path if path is not None else _active[0])
    except FileNotFoundError as exc:
        raise ConfigurationError(f"budget file not found: {path or 'package data'}") from exc


def budget(kind: str, path: str | None = None) -> float:
    try:
        data = load_budgets(path).get("budgets", {})
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"budget file is not valid JSON: {exc}") from exc
    if kind not in data:
        raise ConfigurationError(f"no calibrated budget for {kind!r}")
    return float(data[kind])
