"""Run configuration: defaults, flat key=value files, CLI overrides.

Precedence is CLI flag > config file > built-in default. The fully
resolved configuration is echoed into every run directory so a run can be
reproduced from its outputs alone.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .params import NetworkParams, Topology
from .trainer import TrainConfig

DATA_DIR_ENV = "SPIKEWIN_DATA_DIR"

N_INPUT = 28 * 28
N_CLASSES = 10


@dataclass
class RunConfig:
    # simulation constants
    tau_v: float = 20.0
    tau_p: float = 10.0
    e_leak: float = -70.0
    e_syn: float = 0.0
    v_th: float = -54.0
    v_reset: float = -80.0
    r_m: float = 3.0
    p0: float = 0.4
    beta: float = 2.0
    p_min: float = 0.0
    p_max: float = 0.3
    dt: float = 1.0
    spike_jump: str = "unit"
    # architecture and initialization
    n_hidden: int = 200
    w_init_scale: float = 1.0
    w_init_max: float | None = None
    # training
    epochs: int = 20
    alpha: float = 1e-3
    t0: float = 100.0
    window: float = 100.0
    kernel: str = "sin"
    tau_w: float = 20.0
    tau_m: float = 20.0
    rule: str = "windowed"
    sign_convention: str = "post_minus_pre"
    seed: int = 0
    eval_every: int = 1
    clamp_weights_nonneg: bool = False
    jitter_init: bool = True
    # data selection
    classes: tuple[int, ...] | None = None
    train_cap: int | None = None
    test_cap: int | None = None
    data_dir: str | None = None
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    # outputs
    out: str | None = None

    def to_params(self) -> NetworkParams:
        return NetworkParams(
            tau_v=self.tau_v, tau_p=self.tau_p, e_leak=self.e_leak, e_syn=self.e_syn,
            v_th=self.v_th, v_reset=self.v_reset, r_m=self.r_m, p0=self.p0,
            beta=self.beta, p_min=self.p_min, p_max=self.p_max, dt=self.dt,
            spike_jump=self.spike_jump,
        )

    def to_train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs, alpha=self.alpha, t0_ms=self.t0,
            window_ms=self.window, kernel=self.kernel, tau_w=self.tau_w,
            tau_m=self.tau_m, rule=self.rule, sign_convention=self.sign_convention,
            seed=self.seed, eval_every=self.eval_every,
            clamp_weights_nonneg=self.clamp_weights_nonneg,
            jitter_init=self.jitter_init,
        )

    def topology(self) -> Topology:
        return Topology((N_INPUT, self.n_hidden, N_CLASSES))

    def resolved_data_dir(self) -> Path:
        raw = self.data_dir or os.environ.get(DATA_DIR_ENV)
        if not raw:
            raise FileNotFoundError(
                f"no data directory: pass --data-dir, set data_dir in the config, "
                f"or export {DATA_DIR_ENV}"
            )
        return Path(raw)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_OPTIONAL_INT = {"train_cap", "test_cap"}
_OPTIONAL_FLOAT = {"w_init_max"}
_OPTIONAL_STR = {"data_dir", "out", "train_images", "train_labels",
                 "test_images", "test_labels"}
_BOOL = {"clamp_weights_nonneg", "jitter_init"}
_INT = {"n_hidden", "epochs", "seed", "eval_every"}
_STR = {"spike_jump", "kernel", "rule", "sign_convention"}


def parse_value(key: str, raw: str):
    """Parse one textual config value into the field's Python type."""
    if key not in _FIELDS:
        raise ValueError(f"unknown config key {key!r}")
    raw = raw.strip()
    if key == "classes":
        if raw.lower() in ("", "none", "all"):
            return None
        return tuple(int(x) for x in raw.split(","))
    if key in _OPTIONAL_INT or key in _OPTIONAL_FLOAT or key in _OPTIONAL_STR:
        if raw.lower() in ("", "none"):
            return None
        if key in _OPTIONAL_INT:
            return int(raw)
        if key in _OPTIONAL_FLOAT:
            return float(raw)
        return raw
    if key in _BOOL:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"config key {key!r} expects a boolean, got {raw!r}")
    if key in _INT:
        return int(raw)
    if key in _STR:
        return raw
    return float(raw)


def load_config_file(path: Path | str) -> dict:
    """Read `key = value` lines; '#' starts a comment, blanks are skipped."""
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        key, sep, raw = text.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key = key.strip()
        try:
            values[key] = parse_value(key, raw)
        except ValueError as err:
            raise ValueError(f"{path}:{lineno}: {err}") from None
    return values


def resolve(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge defaults, config-file values and CLI overrides, in that order."""
    merged: dict = {}
    merged.update(file_values or {})
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    unknown = set(merged) - set(_FIELDS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**merged)


def render(config: RunConfig) -> str:
    """Stable textual echo of a resolved config, loadable as a config file."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        if value is None:
            text = "none"
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, tuple):
            text = ",".join(str(v) for v in value)
        else:
            text = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
