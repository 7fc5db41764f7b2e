"""
Laminar (lmnr) tracing for training runs and CLI commands.

Spans are named ``simpinn.<name>`` and never record arguments or return
values: those are image arrays and whole datasets. When ``lmnr`` is not
installed or ``LMNR_PROJECT_API_KEY`` is empty, ``traced`` hands the function
back untouched and ``init_observability`` does nothing.
"""
from dataclasses import asdict, dataclass
from functools import wraps
from typing import Callable, Dict, Optional

from agno.utils.log import logger

from config import config

SPAN_PREFIX = "simpinn."

try:
    from lmnr import Laminar, observe as _lmnr_observe
except ImportError:
    Laminar = None
    _lmnr_observe = None


@dataclass
class TracingStatus:
    installed: bool
    key_configured: bool
    started: bool

    @property
    def active(self) -> bool:
        return self.installed and self.key_configured


_started = False


def tracing_status() -> TracingStatus:
    return TracingStatus(
        installed=Laminar is not None,
        key_configured=config.observability.lmnr_enabled,
        started=_started,
    )


def init_observability() -> bool:
    """Start the Laminar client once; True when tracing is live"""
    global _started
    if _started:
        return True
    status = tracing_status()
    if not status.key_configured:
        logger.debug("[Observability] tracing off (no LMNR_PROJECT_API_KEY)")
        return False
    if not status.installed:
        logger.warning("[Observability] LMNR_PROJECT_API_KEY is set but lmnr is not installed")
        return False
    try:
        Laminar.initialize(project_api_key=config.observability.lmnr_project_api_key)
    except Exception as e:
        logger.error(f"[Observability] Laminar start failed, continuing untraced: {e}")
        return False
    _started = True
    logger.info("[Observability] Laminar tracing started")
    return True


def span_name(func: Callable, name: Optional[str] = None) -> str:
    base = name or func.__name__
    return base if base.startswith(SPAN_PREFIX) else SPAN_PREFIX + base


def observe(name: Optional[str] = None) -> Callable[[Callable], Callable]:
    """
    Wrap ``func`` in a Laminar span when tracing is available.

    Args:
        name: span name; ``simpinn.`` is prepended when missing
    """
    def decorator(func: Callable) -> Callable:
        if not tracing_status().active:
            return func
        traced = _lmnr_observe(name=span_name(func, name), ignore_input=True, ignore_output=True)(func)

        @wraps(func)
        def wrapper(*args, **kwargs):
            init_observability()
            return traced(*args, **kwargs)

        return wrapper

    return decorator


def get_observability_status() -> Dict[str, bool]:
    """Flat status dict for the config printout"""
    status = tracing_status()
    return {**asdict(status), "active": status.active}
