"""Python front end of the deep channel estimation workbench."""

import json

from ._dce import (
    ConfigError,
    DceError,
    __version__,
    analytic_ls_error,
    analytic_mmse_error,
    draw_channel,
    fit_decoder,
    genie_covariance,
    gradcheck,
    ls_estimate,
    mmse_estimate,
    nmse,
    noise_variance_for_snr,
    preset_names,
    weight_count,
)
from . import _dce


def preset(name):
    """Resolved config dict of a built-in preset."""
    return json.loads(_dce.resolve_config_json(_dce.preset_json(name)))


def resolve_config(config):
    """Validate a config dict and fill in every default."""
    return json.loads(_dce.resolve_config_json(json.dumps(config)))


def run_experiment(config):
    """List of record dicts (estimator, snr_db, sir_db, trial, metric, value, error, message)."""
    return _dce.run_experiment_json(json.dumps(config))


def results_csv(config):
    """The results.csv text the CLI would write for this config."""
    return _dce.results_csv(json.dumps(config))


__all__ = [
    "ConfigError",
    "DceError",
    "__version__",
    "analytic_ls_error",
    "analytic_mmse_error",
    "draw_channel",
    "fit_decoder",
    "genie_covariance",
    "gradcheck",
    "ls_estimate",
    "mmse_estimate",
    "nmse",
    "noise_variance_for_snr",
    "preset",
    "preset_names",
    "resolve_config",
    "results_csv",
    "run_experiment",
    "weight_count",
]
