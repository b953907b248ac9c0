"""Kernel backend selection.

The compiled extension is used when it imports; setting
``STATUSNET_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

if os.environ.get("STATUSNET_PURE_PYTHON", "") not in ("", "0"):
    from ._core_py import lbp_iterate, list_triangles

    BACKEND = "python"
else:
    try:
        from ._core import lbp_iterate, list_triangles

        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._core_py import lbp_iterate, list_triangles

        BACKEND = "python"

__all__ = ["BACKEND", "lbp_iterate", "list_triangles"]
