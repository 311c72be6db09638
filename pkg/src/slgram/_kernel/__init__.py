"""Kernel backend selection: compiled lane when available, pure Python otherwise.

The environment variable SLGRAM_KERNEL forces a lane: "c" (compiled), "py"
(pure Python), or "auto" (default: compiled if importable).
"""

from __future__ import annotations

import os

from . import pylane

try:  # pragma: no cover - depends on the build
    from . import _fast as clane
except ImportError:  # pragma: no cover
    clane = None


def available_backends() -> list[str]:
    return ["py"] + (["c"] if clane is not None else [])


def get_backend(name: str | None = None):
    """Resolve a kernel module by name or the SLGRAM_KERNEL policy."""
    if name is None:
        name = os.environ.get("SLGRAM_KERNEL", "auto")
    if name in ("auto", "default", ""):
        return clane if clane is not None else pylane
    if name == "py":
        return pylane
    if name == "c":
        if clane is None:
            raise RuntimeError("compiled kernel requested but not built")
        return clane
    raise ValueError(f"unknown kernel backend {name!r}")
