"""GP / expected-improvement localization of a radio source from a simulated UAV."""

import json

from ._core import *  # noqa: F401,F403
from ._core import run_scenario_jsonl


def run_scenario(config=None):
    """Run one scenario; `config` is a dict of overrides on the default config.

    Returns one list of event dicts per device.
    """
    doc = json.dumps(config or {})
    return [[json.loads(line) for line in trace.splitlines() if line]
            for trace in run_scenario_jsonl(doc)]
