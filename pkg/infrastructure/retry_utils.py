"""
Atomic file publication with retried renames.

Datasets, checkpoints, manifests and reports are staged in a sibling
``<name>.tmp-<pid>`` file and moved into place with ``os.replace``. On shared
file systems the move can fail for a moment while a reader holds the target,
so only that step is retried, with a doubling delay.
"""
import functools
import os
import time
from typing import Callable, Optional, Tuple, Type, TypeVar

from agno.utils.log import logger

T = TypeVar("T")

RETRY_ATTEMPTS = 3
FIRST_DELAY = 0.05
DELAY_CAP = 1.0


def calculate_backoff_delay(attempt: int, base_delay: float, max_delay: float) -> float:
    """Seconds to wait after failed attempt ``attempt`` (0-based)"""
    return min(base_delay * 2 ** attempt, max_delay)


def with_retry(
    max_retries: int = RETRY_ATTEMPTS,
    base_delay: float = FIRST_DELAY,
    max_delay: float = DELAY_CAP,
    exceptions: Tuple[Type[BaseException], ...] = (OSError,),
    on_retry: Optional[Callable[[BaseException, int], None]] = None,
) -> Callable[[Callable[..., T]], Callable[..., T]]:
    """
    Call the wrapped function up to ``max_retries`` times.

    Only ``exceptions`` are retried; the last one is re-raised once the
    attempts run out. ``on_retry(exc, attempt)`` runs before each wait.
    """
    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> T:
            for attempt in range(max_retries):
                try:
                    return func(*args, **kwargs)
                except exceptions as e:
                    if attempt == max_retries - 1:
                        logger.error(f"[IO] {func.__name__} gave up after {max_retries} attempts: {e}")
                        raise
                    delay = calculate_backoff_delay(attempt, base_delay, max_delay)
                    logger.warning(f"[IO] {func.__name__} failed ({e}); retry {attempt + 2}/{max_retries} in {delay:.2f}s")
                    if on_retry is not None:
                        on_retry(e, attempt)
                    time.sleep(delay)
            raise RuntimeError("max_retries must be >= 1")

        return wrapper
    return decorator


@with_retry()
def _publish(staged: str, target: str) -> None:
    os.replace(staged, target)


def atomic_write_bytes(path: str, payload: bytes) -> str:
    """Stage ``payload`` next to ``path`` and rename it into place; returns ``path``"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    staged = f"{path}.tmp-{os.getpid()}"
    try:
        with open(staged, "wb") as f:
            f.write(payload)
        _publish(staged, path)
    except OSError:
        if os.path.exists(staged):
            os.remove(staged)
        raise
    return path


def atomic_write_text(path: str, text: str) -> str:
    """UTF-8 text version of ``atomic_write_bytes``; newlines are written as given"""
    return atomic_write_bytes(path, text.encode("utf-8"))
