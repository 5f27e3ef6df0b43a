"""Numerical eps-asymptotics for nonlinear generalized functions.

The heavy lifting lives in the `_colombeau` extension module; this package
adds dict-friendly wrappers around its JSON-string interfaces.
"""

import json as _json

try:
    from ._colombeau import *  # noqa: F401,F403  (installed layout)
    from . import _colombeau as _ext
except ImportError:  # in-build layout: extension directory on PYTHONPATH
    from _colombeau import *  # noqa: F401,F403
    import _colombeau as _ext

__version__ = _ext.__version__


def _loads(s):
    return _json.loads(s)


def run_scenario(scenario, out_dir="out", workers=0):
    """Run a scenario given as a dict, JSON string, or file path."""
    if isinstance(scenario, dict):
        return _loads(_ext.run_scenario(_json.dumps(scenario), out_dir, workers))
    if isinstance(scenario, str) and scenario.lstrip().startswith("{"):
        return _loads(_ext.run_scenario(scenario, out_dir, workers))
    return _loads(_ext.run_scenario_file(str(scenario), out_dir, workers))


def check_lsk(kernel, which, **kwargs):
    """LSK verifier returning the report as a dict."""
    return _loads(_ext.check_lsk(kernel, which, **kwargs))


def moderateness(tree, **kwargs):
    if isinstance(tree, dict):
        tree = _json.dumps(tree)
    return _loads(_ext.moderateness(tree, **kwargs))


def negligibility(tree, **kwargs):
    if isinstance(tree, dict):
        tree = _json.dumps(tree)
    return _loads(_ext.negligibility(tree, **kwargs))


def association(subject, reference="", **kwargs):
    if isinstance(subject, dict):
        subject = _json.dumps(subject)
    if isinstance(reference, dict):
        reference = _json.dumps(reference)
    return _loads(_ext.association(subject, reference, **kwargs))


def evaluate(tree, phi, x):
    if isinstance(tree, dict):
        tree = _json.dumps(tree)
    return _ext.evaluate(tree, phi, x)
