"""Exact inference and learning in conjugated harmoniums."""

try:
    from ._harmoniums import *  # noqa: F401,F403
    from . import _harmoniums as _core
except ImportError:  # build-tree layout: extension sits next to the package
    from _harmoniums import *  # noqa: F401,F403
    import _harmoniums as _core

__all__ = [name for name in dir(_core) if not name.startswith("_")]
