"""Reconstruction experiments for generalized spherical Radon transforms."""

import json

from . import _sphradon
from ._sphradon import ConfigError, NumericalError, add_noise, lsq_error, preset_names

__all__ = [
    "ConfigError",
    "NumericalError",
    "add_noise",
    "config_hash",
    "invert_constant_r",
    "lsq_error",
    "palamodov_check",
    "phantom",
    "preset",
    "preset_names",
    "run_experiment",
    "synthesize",
]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def preset(name, method="landweber"):
    """Full config dict of a named preset."""
    return json.loads(_sphradon.preset(name, method))


def config_hash(config):
    return _sphradon.config_hash(_text(config))


def phantom(config, grid="data"):
    return _sphradon.phantom(_text(config), grid)


def synthesize(config):
    """(truth, sinogram, axis1, axis2) of noiseless data on the data grid."""
    return _sphradon.synthesize(_text(config))


def run_experiment(config):
    out = _sphradon.run_experiment(_text(config))
    out["report"] = json.loads(out["report"])
    return out


def invert_constant_r(config, L=16, ridge=0.0, m=200):
    """(image, discarded_energy_fraction) from noiseless data of a constant-r config."""
    return _sphradon.invert_constant_r(_text(config), L, ridge, m)


def palamodov_check(config, center=(0.2, -0.1), radius=0.4, samples=200, seed=1):
    return json.loads(_sphradon.palamodov_check(_text(config), tuple(center), radius, samples, seed))
