"""Run guard: executes scenario jobs and keeps track of surfaced errors."""

from __future__ import annotations

import logging
from typing import Callable, List, Optional, TypeVar

from ..app.core.errors import SimulationError

T = TypeVar("T")


class RunGuard:
    """Centralised run-state tracker for the experiment harness.

    Failures are recorded rather than propagated so the CLI can turn them into a
    one-line error class and a nonzero exit status. The first failure stops the run:
    later jobs are skipped.
    """

    def __init__(self) -> None:
        self._errors: List[str] = []
        self._error_class: Optional[str] = None
        self._stopped = False

    # ------------------------------------------------------------------
    # Job execution
    # ------------------------------------------------------------------
    def execute_job(self, name: str, handler: Callable[[], T]) -> Optional[T]:
        """Run ``handler`` capturing exceptions; returns its result or ``None``."""

        if self._stopped:
            logging.debug("guard stopped; skipping job %s", name)
            return None
        try:
            return handler()
        except SimulationError as exc:
            logging.error("job %s failed: %s", name, exc)
            self._record(name, exc.error_class, str(exc))
        except OSError as exc:
            logging.error("job %s failed on I/O: %s", name, exc)
            self._record(name, "unwritable_output", str(exc))
        except Exception as exc:  # noqa: BLE001
            logging.exception("job %s failed", name)
            self._record(name, type(exc).__name__, str(exc))
        return None

    def _record(self, name: str, error_class: str, message: str) -> None:
        self._errors.append(f"{name}: {message}")
        if self._error_class is None:
            self._error_class = error_class
        self._stopped = True
        logging.info("run stopped after job %s", name)

    @property
    def has_errors(self) -> bool:
        return bool(self._errors)

    @property
    def error_class(self) -> Optional[str]:
        return self._error_class

    def error_line(self) -> str:
        """One machine-parsable line describing the first failure."""

        if not self._errors:
            return ""
        message = self._errors[0].split(": ", 1)[-1].replace("\n", " ")
        return f"error: {self._error_class}: {message}"
