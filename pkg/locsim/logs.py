from __future__ import annotations

import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(level: int = logging.WARNING) -> None:
    root = logging.getLogger("locsim")
    root.setLevel(level)
    if not any(getattr(h, "_locsim", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._locsim = True  # type: ignore[attr-defined]
        root.addHandler(handler)
    root.propagate = False
