"""Kernel backend selection.

The compiled kernel is preferred when present; the pure-Python reference
always works. Override with PUSHCLUTTER_KERNEL=python|cython (requesting
cython without the built extension is an error rather than a silent
fallback, so benchmark results can't lie about what ran).
"""

import os

from . import _kernel_py

_requested = os.environ.get("PUSHCLUTTER_KERNEL", "").strip().lower()

if _requested == "python":
    impl = _kernel_py
elif _requested == "cython":
    from . import _kernel_cy as impl
elif _requested == "":
    try:
        from . import _kernel_cy as impl
    except ImportError:
        impl = _kernel_py
else:
    raise RuntimeError(f"PUSHCLUTTER_KERNEL={_requested!r}: expected 'python' or 'cython'")

BACKEND = impl.BACKEND

DISK = _kernel_py.DISK
BOX = _kernel_py.BOX
ROBOT_HITS_STATIC = _kernel_py.ROBOT_HITS_STATIC
OBJECT_OUT_OF_BOUNDS = _kernel_py.OBJECT_OUT_OF_BOUNDS
UNRESOLVED_PENETRATION = _kernel_py.UNRESOLVED_PENETRATION

contact = impl.contact
propagate = impl.propagate


def available_backends():
    """Names of importable kernel backends, reference first."""
    names = ["python"]
    try:
        from . import _kernel_cy  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    return names


def load_backend(name):
    """Import a specific backend module by name."""
    if name == "python":
        return _kernel_py
    if name == "cython":
        from . import _kernel_cy
        return _kernel_cy
    raise ValueError(f"unknown kernel backend {name!r}")
