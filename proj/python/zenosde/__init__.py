"""Python access to the zenosde simulator and stability checks.

Configs may be given as a preset name, a dict, or JSON text. Reports come
back as plain dicts.
"""

import json

from . import _zenosde
from ._zenosde import Error, __version__, preset_names

__all__ = [
    "Error",
    "__version__",
    "preset_names",
    "preset",
    "resolve_config",
    "simulate_path",
    "simulate_ensemble",
    "check_conditions",
    "stability_test",
    "n_epsilon",
    "wio_evaluate",
    "verify_bound",
    "probe_mean_square",
    "probe_probability",
    "probe_supermartingale",
    "detect_blowup",
    "run_cli",
]


def _text(config):
    if isinstance(config, dict):
        return json.dumps(config)
    if isinstance(config, str) and config in preset_names():
        return _zenosde.preset_json(config)
    return config


def preset(name):
    return json.loads(_zenosde.preset_json(name))


def resolve_config(config):
    return json.loads(_zenosde.resolve_config(_text(config)))


def simulate_path(config, horizon, index=0, seed=0):
    return _zenosde.simulate_path(_text(config), horizon, index, seed)


def simulate_ensemble(config, horizon, n_paths, grid, seed=0, threads=1):
    return _zenosde.simulate_ensemble(_text(config), horizon, n_paths, seed, list(grid), threads)


def check_conditions(config):
    return json.loads(_zenosde.check_conditions(_text(config)))


def stability_test(config, epsilon=None, search=False):
    return json.loads(_zenosde.stability_test(_text(config), epsilon, search))


def n_epsilon(term, eps):
    return _zenosde.n_epsilon(term, eps)


def wio_evaluate(config, kind, t, y, h, x, gamma=1.0, beta=2.0, c=1.0):
    return _zenosde.wio_evaluate(_text(config), kind, t, y, h, list(x), gamma, beta, c)


def verify_bound(config, segment, n_paths, seed=0, threads=1):
    return json.loads(_zenosde.verify_bound(_text(config), segment, n_paths, seed, threads))


def probe_mean_square(config, times, n_paths, seed=0, threads=1):
    return json.loads(_zenosde.probe_mean_square(_text(config), list(times), n_paths, seed, threads))


def probe_probability(config, eps1, horizon, n_paths, deltas, seed=0, threads=1):
    return json.loads(_zenosde.probe_probability(_text(config), eps1, horizon, n_paths, list(deltas), seed, threads))


def probe_supermartingale(config, gamma, beta, k_first, k_last, n_outer, n_inner, seed=0, threads=1):
    return json.loads(
        _zenosde.probe_supermartingale(_text(config), gamma, beta, k_first, k_last, n_outer, n_inner, seed, threads)
    )


def detect_blowup(config, k_max, horizon, n_paths, seed=0, threads=1):
    return json.loads(_zenosde.detect_blowup(_text(config), list(k_max), horizon, n_paths, seed, threads))


def run_cli(args):
    """Runs the command-line tool in-process; returns (exit_code, stdout, stderr)."""
    return _zenosde.run_cli([str(a) for a in args])
