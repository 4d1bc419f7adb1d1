"""Keyframe-based stereo visual-inertial odometry."""

import json as _json

import numpy as _np

from ._core import (
    Config,
    KfvioError,
    backend_macs,
    btc_bits_per_pixel,
    btc_roundtrip,
    decode,
    encode,
    preset_names,
    so3_exp,
    so3_log,
)

TRAJECTORY_COLUMNS = ("t", "px", "py", "pz", "qw", "qx", "qy", "qz", "vx", "vy", "vz")


def load_config(source=None, **overrides):
    """Config from a preset name, a YAML path, a mapping, or defaults, then attribute overrides."""
    if source is None:
        cfg = Config()
    elif isinstance(source, Config):
        cfg = source
    elif isinstance(source, dict):
        cfg = Config.from_yaml(_json.dumps(source))  # JSON is valid YAML
    elif str(source).endswith((".yaml", ".yml")):
        cfg = Config.from_file(str(source))
    else:
        cfg = Config.preset(str(source))
    for key, value in overrides.items():
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


def run(dataset, config=None, max_frames=None, **overrides):
    """Runs one sequence. Returns (report dict, trajectory array with TRAJECTORY_COLUMNS)."""
    from ._core import run as _run

    text, traj = _run(load_config(config, **overrides), dataset, max_frames)
    return _json.loads(text), _np.asarray(traj)


def model(config=None, **overrides):
    """Memory and op-count model as (text table, dict)."""
    from ._core import model_report

    text, js = model_report(load_config(config, **overrides))
    return text, _json.loads(js)["model"]
