"""Python interface to the z-score poisoning defence.

The heavy lifting lives in the compiled ``_zdefence`` module; this package
just re-exports it. The extension sits next to this file in an installed
wheel, or on ``PYTHONPATH`` when running against a plain CMake build tree.
"""

try:
    from ._zdefence import *  # noqa: F401,F403
    from ._zdefence import __doc__ as _core_doc
except ImportError:  # pragma: no cover - build-tree layout
    from _zdefence import *  # noqa: F401,F403
    from _zdefence import __doc__ as _core_doc

__doc__ = (__doc__ or "") + "\n\n" + (_core_doc or "")
