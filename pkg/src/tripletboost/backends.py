"""Kernel backend selection.

The compiled Cython extension is preferred when available; the pure NumPy
fallback is functionally identical. Selection happens once at import and can
be forced with the environment variable ``TRIPLETBOOST_BACKEND`` set to
``compiled`` or ``python`` (anything else means auto).

All kernels take C-contiguous float64 arrays: ``U`` and ``V`` are the
(n_constraints x dim) difference-vector matrices, ``w``/``u`` length
n_constraints, ``x``/``xi`` length dim.
"""

import os


def _select():
    requested = os.environ.get("TRIPLETBOOST_BACKEND", "auto").lower()
    if requested == "python":
        from . import _kernels_py as impl
        return impl
    try:
        from . import _kernels as impl  # type: ignore[attr-defined]
    except ImportError:
        if requested == "compiled":
            raise ImportError(
                "TRIPLETBOOST_BACKEND=compiled but the extension is not built; "
                "run `pip install -e . --no-build-isolation`"
            ) from None
        from . import _kernels_py as impl
    return impl


_impl = _select()

backend_name = _impl.NAME
weighted_matvec = _impl.weighted_matvec
margins_rank_one = _impl.margins_rank_one
margins_full = _impl.margins_full
line_search_lhs = _impl.line_search_lhs


def available_backends():
    """Names of the backends importable in this installation."""
    names = []
    try:
        from . import _kernels  # noqa: F401
        names.append("compiled")
    except ImportError:
        pass
    names.append("python")
    return names
