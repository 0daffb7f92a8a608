"""
Object-aware cropping laboratory (objcrop) package entrypoint.
Keep this lightweight: sub-packages pull in numpy and are loaded on first use.
"""

import importlib
from typing import Any

__version__ = "0.3.0"

__all__ = [
    "imgcore",
    "objectness",
    "cropper",
    "synthgen",
    "ssl",
    "evalkit",
    "config",
    "errors",
    "runs",
]


# --- Lazy attribute loader ---
def __getattr__(name: str) -> Any:
    if name in __all__:
        return importlib.import_module(f"OCL.{name}")
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
