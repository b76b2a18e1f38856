"""Scheduler package: system model, closed-form costs, threshold search, bisection.

`sweep` pulls in the oracles package and the worker pool; import it explicitly
where needed instead of at package import time.
"""

from . import errors, model, closed_form, threshold_search

__all__ = ["errors", "model", "closed_form", "threshold_search"]
