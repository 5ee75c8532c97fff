"""Python access to the rbaird experiment core."""

import json

from . import _core
from ._core import ConfigError, preset_names

__all__ = ["ConfigError", "Session", "plan", "preset_names", "replay", "resolve_config", "run"]


def resolve_config(config=None, preset=""):
    """Config dict after applying `config` overrides to `preset` (or the defaults)."""
    return json.loads(_core.resolve_config(json.dumps(config) if config else "", preset))


def run(config=None, preset=""):
    """Runs a simulated experiment; returns config, belief snapshot, metrics CSV and answer log."""
    return json.loads(_core.run_experiment(json.dumps(config) if config else "", preset))


def replay(config, answers):
    """Rebuilds an experiment from its config and answer log."""
    return json.loads(_core.replay_answers(json.dumps(config), json.dumps(answers)))


def plan(environment, weights, horizon=50):
    """Optimal trajectory for environment JSON (dict) under reward weights."""
    return json.loads(_core.plan(json.dumps(environment), list(weights), horizon))


class Session:
    """In-process session service; requests return (status, decoded JSON body)."""

    def __init__(self, storage_root=""):
        self._service = _core.SessionService(str(storage_root))

    def request(self, method, path, body=None, params=None):
        status, text = self._service.handle(
            method, path, params or {}, json.dumps(body) if body is not None else ""
        )
        return status, json.loads(text)

    def __len__(self):
        return self._service.session_count()
