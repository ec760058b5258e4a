"""Python front end for the hexflow scheduling simulator."""

import json

from ._hexflow import (
    Config,
    ConfigError,
    attainment_table,
    event_log,
    generate_trace,
    policy_names,
    run_json,
    stage_mix_table,
    welch,
)

__all__ = [
    "Config",
    "ConfigError",
    "attainment_table",
    "event_log",
    "generate_trace",
    "policy_names",
    "run",
    "run_json",
    "stage_mix_table",
    "welch",
]


def run(config, policy, seed=0, trace_jsonl=None):
    """Runs one policy and returns the report as a dict."""
    return json.loads(run_json(config, policy, seed, trace_jsonl))
