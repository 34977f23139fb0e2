"""python-dotenv shim used by the scenario configuration loader."""
from __future__ import annotations

import logging
from typing import Optional

try:
    from dotenv import load_dotenv as _load_dotenv  # type: ignore
except Exception:  # pragma: no cover - offline fallback
    _load_dotenv = None


def load_env_file(path: Optional[str] = None) -> bool:
    """Load ``path`` (or ``.env`` in the working directory) into ``os.environ``."""

    if _load_dotenv is None:
        logging.getLogger(__name__).debug("python-dotenv not available; skipping env file")
        return False
    if path:
        return bool(_load_dotenv(path, override=False))
    return bool(_load_dotenv(override=False))


__all__ = ["load_env_file"]
