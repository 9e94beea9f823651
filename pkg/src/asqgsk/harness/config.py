"""Experiment configuration from a key=value file and command-line flags."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from ..errors import ConfigError
from .pipeline import MODES

QUANTIZERS = ("nearest", "scaled", "equiprobable")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep over SNR points and target initial error rates.

    ``gamma`` of ``None`` ties the estimation-error variance to the noise
    variance at each SNR; a number fixes it.
    """

    m: int = 10
    snr_db: tuple = (10.0, 15.0, 20.0, 25.0, 30.0)
    gamma: Optional[float] = None
    target_ier: tuple = (0.1, 0.01)
    n_blocks: int = 200_000
    seed: int = 0
    mode: str = "likelihood"
    quantizer: str = "scaled"
    ldpc_matrix: Optional[str] = None
    out: Optional[str] = None
    fmt: str = "csv"
    n_calib_blocks: int = 20_000
    max_iter: int = 50
    workers: int = 1
    reproducible: bool = False

    def __post_init__(self):
        if self.m < 2 or self.m % 2:
            raise ConfigError(f"m must be an even integer >= 2, got {self.m}")
        if not self.snr_db:
            raise ConfigError("snr list is empty")
        if not self.target_ier or any(not 0 < t <= 0.5 for t in self.target_ier):
            raise ConfigError(f"target initial error rates must lie in (0, 0.5], got {self.target_ier}")
        if self.n_blocks < 1 or self.n_calib_blocks < 1:
            raise ConfigError("block counts must be >= 1")
        if self.gamma is not None and self.gamma < 0:
            raise ConfigError("gamma must be non-negative")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.quantizer not in QUANTIZERS:
            raise ConfigError(f"quantizer must be one of {QUANTIZERS}, got {self.quantizer!r}")
        if self.fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.fmt!r}")
        if self.workers < 1 or self.max_iter < 1:
            raise ConfigError("workers and max_iter must be >= 1")

    def override(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


# file key -> (field, parser)
def _floats(text):
    return tuple(float(t) for t in str(text).replace(",", " ").split())


def _gamma(text):
    return None if str(text).strip().lower() in ("tied", "none", "") else float(text)


def _bool(text):
    return str(text).strip().lower() in ("1", "true", "yes", "on")


FILE_KEYS = {
    "m": ("m", int),
    "snr": ("snr_db", _floats),
    "gamma": ("gamma", _gamma),
    "ier": ("target_ier", _floats),
    "blocks": ("n_blocks", int),
    "seed": ("seed", int),
    "mode": ("mode", str),
    "quantizer": ("quantizer", str),
    "ldpc_matrix": ("ldpc_matrix", str),
    "out": ("out", str),
    "format": ("fmt", str),
    "calib_blocks": ("n_calib_blocks", int),
    "max_iter": ("max_iter", int),
    "workers": ("workers", int),
    "reproducible": ("reproducible", _bool),
}


def parse_config_text(text: str) -> dict:
    """Field values from ``key = value`` lines (an optional ``[section]`` is ignored)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    body = text if text.lstrip().startswith("[") else "[experiment]\n" + text
    try:
        cp.read_string(body)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    out = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            norm = key.replace("-", "_")
            if norm not in FILE_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            name, conv = FILE_KEYS[norm]
            try:
                out[name] = conv(raw.strip().strip('"').strip("'"))
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    return out


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def build_config(file_values: dict | None = None, **flags) -> ExperimentConfig:
    """Defaults, then file values, then flags that are not ``None``."""
    names = {f.name for f in fields(ExperimentConfig)}
    merged = dict(file_values or {})
    merged.update({k: v for k, v in flags.items() if v is not None})
    unknown = set(merged) - names
    if unknown:
        raise ConfigError(f"unknown settings {sorted(unknown)}")
    try:
        return ExperimentConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
